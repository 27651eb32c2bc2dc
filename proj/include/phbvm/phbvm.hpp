#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "phbvm/poisson.hpp"
#include "phbvm/tableau.hpp"

namespace phbvm {

enum class SolverKind { fixed_point, newton, blended };

SolverKind parse_solver(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverConfig {
  SolverKind solver = SolverKind::blended;
  /// Residual tolerance; the effective threshold is tol * (1 + |y0|_inf).
  double tol = 1e-14;
  int max_iter = 100;
  double fd_step = kDefaultFdStep;
  /// Start from the previous step's coefficients instead of zero.
  bool warm_start = false;
};

/// Iteration count, final residual and convergence flags of a nonlinear solve.
struct SolveStats {
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  /// Converged by stagnation at roundoff level rather than by reaching tolerance.
  bool stagnated = false;
};

/// Unknowns of one step. Blocks are stored as matrix columns: phi is m x s,
/// Y is m x k (stage values u(c_l h)), gamma_hat is m x s.
struct StageState {
  Matrix phi;
  Matrix Y;
  Matrix gamma_hat;
};

struct StepResult {
  Vector y1;
  Matrix phi;
  Vector alpha;  // empty unless the Casimir correction is active
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  bool stagnated = false;
};

/// Thrown by step() when the nonlinear solve does not converge.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, SolveStats stats)
      : std::runtime_error(what), stats_(stats) {}
  const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
};

/// Singular iteration matrix in the Newton or blended solver.
class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Y_l = y0 + h sum_i I(l,i) phi_i.
Matrix stage_values(const Matrix& phi, const Vector& y0, double h, const MethodTableau& tab);

/// Stage values plus the quadrature Fourier coefficients of grad H along them.
StageState evaluate_stage_state(const PoissonSystem& sys, const MethodTableau& tab,
                                const Vector& y0, double h, const Matrix& phi);

/// F(phi) = phi - G(phi), evaluated node by node without forming the
/// sm x sm block matrix of structure coefficients.
Matrix residual(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                const Matrix& phi);

struct SolveResult {
  Matrix phi;
  SolveStats stats;
};

SolveResult solve_fixed_point(const PoissonSystem& sys, const MethodTableau& tab,
                              const Vector& y0, double h, const SolverConfig& cfg,
                              const Matrix* phi_start = nullptr);
SolveResult solve_newton(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                         double h, const SolverConfig& cfg, const Matrix* phi_start = nullptr);
SolveResult solve_blended(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                          double h, const SolverConfig& cfg, const Matrix* phi_start = nullptr);
/// Dispatches on cfg.solver.
SolveResult solve(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                  const SolverConfig& cfg, const Matrix* phi_start = nullptr);

/// One PHBVM(k,s) step, y1 = y0 + h phi_0. Throws SolverFailure when the
/// solve does not converge; DomainError propagates from the system.
StepResult step(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                const SolverConfig& cfg, const Matrix* phi_start = nullptr);

/// Debug helper: materializes rho_hat_ij = sum_l b_l P_i(c_l) P_j(c_l) B(Y_l)
/// for the given stage values (m x k). Result is indexed [i][j].
std::vector<std::vector<Matrix>> structure_coefficients(const PoissonSystem& sys,
                                                        const MethodTableau& tab,
                                                        const Matrix& Y);

}  // namespace phbvm
