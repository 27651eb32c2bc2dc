#pragma once

// Machinery shared by the plain and the Casimir-corrected steps.

#include <Eigen/LU>

#include "phbvm/phbvm.hpp"

namespace phbvm::detail {

/// Node-wise evaluation of the discrete map for given coefficients.
/// `shift` (length m, possibly empty) perturbs the stages by -h c_l shift.
struct NodeEvaluation {
  Matrix Y;          // m x k
  Matrix gamma_hat;  // m x s
  Matrix G;          // m x s, phi - G is the residual
};

NodeEvaluation evaluate_nodes(const PoissonSystem& sys, const MethodTableau& tab,
                              const Vector& y0, double h, const Matrix& phi,
                              const Vector& shift);

/// Produces phi^{r+1} from phi^r and F(phi^r) for the configured solver.
/// Factorizations are built once, at F'(y0), and reused across iterations.
class UpdateRule {
 public:
  UpdateRule(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
             const SolverConfig& cfg);

  Matrix next(const Matrix& phi, const Matrix& F) const;

 private:
  SolverKind kind_;
  const MethodTableau* tab_;
  Eigen::PartialPivLU<Matrix> lu_;
};

/// Stopping rule: residual below tolerance, or stagnation (three iterations
/// running without a 10% improvement on the best residual) once the residual
/// is near roundoff.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(const SolverConfig& cfg, const Vector& y0);

  /// Records one residual; returns true when the iteration should stop
  /// with success.
  bool observe(double residual_norm);

  bool exhausted() const { return stats_.iterations >= max_iter_; }
  const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
  int max_iter_;
  double band_;
  double best_ = -1.0;
  int stalls_ = 0;
};

}  // namespace phbvm::detail
