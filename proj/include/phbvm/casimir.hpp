#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "phbvm/phbvm.hpp"

namespace phbvm {

/// The correction denominator pi_0^T Btilde gamma_0 (or det M for several
/// Casimirs) vanished, so alpha is undetermined.
class DegenerateCasimirDirection : public std::runtime_error {
 public:
  DegenerateCasimirDirection(const std::string& what, int casimir_index)
      : std::runtime_error(what), casimir_index_(casimir_index) {}
  /// Zero-based index of the offending Casimir.
  int casimir_index() const { return casimir_index_; }

 private:
  int casimir_index_;
};

struct CasimirCorrection {
  std::vector<Matrix> Btilde;  // r skew-symmetric m x m matrices
  Vector alpha;                // length r
  std::vector<Matrix> pi_hat;  // s blocks, each m x r
  Matrix M_hat;                // r x r, column l = pi_0^T Btilde_l gamma_0
};

/// pi_hat_i = sum_l b_l P_i(c_l) grad C(Y_l); column q holds Casimir q.
std::vector<Matrix> casimir_fourier_coeffs(const PoissonSystem& sys, const MethodTableau& tab,
                                           const Matrix& Y);

/// E_{p,q} - E_{q,p} for the index-th (1-based) pair p < q in lexicographic
/// order. Throws std::invalid_argument for m < 2 and std::out_of_range for
/// an index past m(m-1)/2.
Matrix default_skew_matrix(int m, int index);

/// r x r matrix whose column l is pi_0^T Btilde_l gamma_0.
Matrix casimir_coupling_matrix(const Matrix& pi0, const Vector& gamma0,
                               const std::vector<Matrix>& Btilde);

/// alpha = M^{-1} sum_i pi_i^T phi_i (a plain quotient for one Casimir).
/// A zero numerator yields alpha = 0 without consulting the denominator.
/// Throws DegenerateCasimirDirection when |M| falls below
/// 1e-10 * prod_l |pi_0 col l| |gamma_0|.
Vector alpha_update(const std::vector<Matrix>& pi_hat, const Matrix& phi, const Vector& gamma0,
                    const std::vector<Matrix>& Btilde);

struct CasimirStepOptions {
  /// Pin alpha to zero; reproduces the plain step.
  bool force_zero_alpha = false;
};

/// One EPHBVM(k,s) step. Each iteration performs one solver sweep on phi with
/// the stages shifted by -h c_l sum_q alpha_q Btilde_q gamma_0, then refreshes
/// alpha from sum_i pi_i^T (rho gamma)_i at the stages just evaluated (equal
/// to sum_i pi_i^T phi_i at the solution). The alpha change counts toward the
/// residual. y1 = y0 + h (phi_0 - sum_q alpha_q Btilde_q gamma_0).
///
/// Uses sys.casimir_skew when given; otherwise the default skew basis, with
/// one retry on the next basis pair if the first choice is degenerate.
StepResult step_with_casimir(const PoissonSystem& sys, const MethodTableau& tab,
                             const Vector& y0, double h, const SolverConfig& cfg,
                             const Matrix* phi_start = nullptr,
                             const CasimirStepOptions& opts = {});

/// The skew matrices a step on `sys` starts with (offset 0) or falls back to (offset 1).
std::vector<Matrix> default_skew_set(const PoissonSystem& sys, int offset);

}  // namespace phbvm
