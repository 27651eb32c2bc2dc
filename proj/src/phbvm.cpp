#include "phbvm/phbvm.hpp"

#include <cmath>
#include <sstream>

#include "iteration.hpp"

namespace phbvm {

SolverKind parse_solver(const std::string& name) {
  if (name == "fixed_point" || name == "fixed-point" || name == "fixed") return SolverKind::fixed_point;
  if (name == "newton") return SolverKind::newton;
  if (name == "blended") return SolverKind::blended;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::fixed_point: return "fixed_point";
    case SolverKind::newton: return "newton";
    case SolverKind::blended: return "blended";
  }
  return "?";
}

namespace detail {

NodeEvaluation evaluate_nodes(const PoissonSystem& sys, const MethodTableau& tab,
                              const Vector& y0, double h, const Matrix& phi,
                              const Vector& shift) {
  NodeEvaluation ev;
  ev.Y = stage_values(phi, y0, h, tab);
  if (shift.size() != 0) ev.Y.noalias() -= h * shift * tab.nodes().transpose();

  const Eigen::Index m = y0.size();
  const int k = tab.k;
  Matrix grad(m, k);
  for (int l = 0; l < k; ++l) grad.col(l) = sys.gradH(ev.Y.col(l));

  const Matrix proj = tab.projector().transpose();  // k x s, Omega P
  ev.gamma_hat.noalias() = grad * proj;
  // Projected gradient at each node, then the structure matrix applied there.
  const Matrix W = ev.gamma_hat * tab.P.transpose();
  Matrix V(m, k);
  for (int l = 0; l < k; ++l) V.col(l).noalias() = sys.B(ev.Y.col(l)) * W.col(l);
  ev.G.noalias() = V * proj;
  return ev;
}

UpdateRule::UpdateRule(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                       double h, const SolverConfig& cfg)
    : kind_(cfg.solver), tab_(&tab) {
  if (kind_ == SolverKind::fixed_point) return;
  const Matrix J = jacobian(sys, y0, cfg.fd_step);
  const Eigen::Index m = J.rows();
  Matrix A;
  if (kind_ == SolverKind::newton) {
    const int s = tab.s;
    A = Matrix::Identity(s * m, s * m);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        A.block(i * m, j * m, m, m) -= h * tab.X(i, j) * J;
  } else {
    A = Matrix::Identity(m, m) - h * tab.lambda_s * J;
  }
  lu_.compute(A);
  if (!(lu_.rcond() > 1e-14)) {
    throw LinearSolveError(kind_ == SolverKind::newton ? "singular simplified Newton matrix"
                                                       : "singular blended iteration matrix");
  }
}

Matrix UpdateRule::next(const Matrix& phi, const Matrix& F) const {
  switch (kind_) {
    case SolverKind::fixed_point:
      return phi - F;
    case SolverKind::newton: {
      const Eigen::Index m = phi.rows();
      const Eigen::Index s = phi.cols();
      const Vector rhs = -Eigen::Map<const Vector>(F.data(), m * s);
      const Vector delta = lu_.solve(rhs);
      return phi + Eigen::Map<const Matrix>(delta.data(), m, s);
    }
    case SolverKind::blended: {
      const Matrix eta = -F;
      const Matrix eta1 = tab_->lambda_s * eta * tab_->Xinv.transpose();
      const Matrix inner = lu_.solve(eta - eta1);
      return phi + lu_.solve(eta1 + inner);
    }
  }
  return phi;
}

ConvergenceMonitor::ConvergenceMonitor(const SolverConfig& cfg, const Vector& y0)
    : max_iter_(cfg.max_iter) {
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  stats_.tolerance = cfg.tol * (1.0 + y0.cwiseAbs().maxCoeff());
  band_ = 1e4 * stats_.tolerance;
}

bool ConvergenceMonitor::observe(double residual_norm) {
  ++stats_.iterations;
  stats_.residual_norm = residual_norm;
  if (!std::isfinite(residual_norm)) return false;
  if (residual_norm <= stats_.tolerance) {
    stats_.converged = true;
    return true;
  }
  // Roundoff noise need not decrease monotonically (it can cycle), so progress
  // is measured against the best residual seen so far.
  if (best_ >= 0.0 && residual_norm <= band_ && residual_norm > 0.9 * best_) {
    if (++stalls_ >= 3) {
      stats_.converged = true;
      stats_.stagnated = true;
      return true;
    }
  } else {
    stalls_ = 0;
  }
  if (best_ < 0.0 || residual_norm < best_) best_ = residual_norm;
  return false;
}

}  // namespace detail

Matrix stage_values(const Matrix& phi, const Vector& y0, double h, const MethodTableau& tab) {
  Matrix Y = y0.replicate(1, tab.k);
  Y.noalias() += h * phi * tab.I.transpose();
  return Y;
}

StageState evaluate_stage_state(const PoissonSystem& sys, const MethodTableau& tab,
                                const Vector& y0, double h, const Matrix& phi) {
  auto ev = detail::evaluate_nodes(sys, tab, y0, h, phi, Vector());
  return {phi, std::move(ev.Y), std::move(ev.gamma_hat)};
}

Matrix residual(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                const Matrix& phi) {
  return phi - detail::evaluate_nodes(sys, tab, y0, h, phi, Vector()).G;
}

namespace {

SolveResult run_solver(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                       double h, const SolverConfig& cfg, const Matrix* phi_start) {
  const detail::UpdateRule rule(sys, tab, y0, h, cfg);
  detail::ConvergenceMonitor monitor(cfg, y0);
  Matrix phi = phi_start ? *phi_start : Matrix::Zero(y0.size(), tab.s);
  const Vector no_shift;
  while (true) {
    const Matrix F = phi - detail::evaluate_nodes(sys, tab, y0, h, phi, no_shift).G;
    const bool done = monitor.observe(F.cwiseAbs().maxCoeff());
    if (done || monitor.exhausted()) {
      if (done) phi = rule.next(phi, F);
      break;
    }
    phi = rule.next(phi, F);
  }
  return {std::move(phi), monitor.stats()};
}

}  // namespace

SolveResult solve_fixed_point(const PoissonSystem& sys, const MethodTableau& tab,
                              const Vector& y0, double h, const SolverConfig& cfg,
                              const Matrix* phi_start) {
  SolverConfig c = cfg;
  c.solver = SolverKind::fixed_point;
  return run_solver(sys, tab, y0, h, c, phi_start);
}

SolveResult solve_newton(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                         double h, const SolverConfig& cfg, const Matrix* phi_start) {
  SolverConfig c = cfg;
  c.solver = SolverKind::newton;
  return run_solver(sys, tab, y0, h, c, phi_start);
}

SolveResult solve_blended(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0,
                          double h, const SolverConfig& cfg, const Matrix* phi_start) {
  SolverConfig c = cfg;
  c.solver = SolverKind::blended;
  return run_solver(sys, tab, y0, h, c, phi_start);
}

SolveResult solve(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                  const SolverConfig& cfg, const Matrix* phi_start) {
  return run_solver(sys, tab, y0, h, cfg, phi_start);
}

StepResult step(const PoissonSystem& sys, const MethodTableau& tab, const Vector& y0, double h,
                const SolverConfig& cfg, const Matrix* phi_start) {
  auto sol = solve(sys, tab, y0, h, cfg, phi_start);
  if (!sol.stats.converged) {
    std::ostringstream msg;
    msg << to_string(cfg.solver) << " solver did not converge: residual "
        << sol.stats.residual_norm << " after " << sol.stats.iterations << " iterations";
    throw SolverFailure(msg.str(), sol.stats);
  }
  StepResult r;
  r.y1 = y0 + h * sol.phi.col(0);
  r.phi = std::move(sol.phi);
  r.iterations = sol.stats.iterations;
  r.residual_norm = sol.stats.residual_norm;
  r.tolerance = sol.stats.tolerance;
  r.converged = true;
  r.stagnated = sol.stats.stagnated;
  return r;
}

std::vector<std::vector<Matrix>> structure_coefficients(const PoissonSystem& sys,
                                                        const MethodTableau& tab,
                                                        const Matrix& Y) {
  const int s = tab.s;
  const Eigen::Index m = Y.rows();
  std::vector<std::vector<Matrix>> rho(s, std::vector<Matrix>(s, Matrix::Zero(m, m)));
  for (int l = 0; l < tab.k; ++l) {
    const Matrix Bl = sys.B(Y.col(l));
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        rho[i][j] += tab.rule.weights[l] * tab.P(l, i) * tab.P(l, j) * Bl;
  }
  return rho;
}

}  // namespace phbvm
