#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phbvm/phbvm.hpp"

using namespace phbvm;

namespace {

SolverConfig config(SolverKind kind, double tol = 1e-14) {
  SolverConfig cfg;
  cfg.solver = kind;
  cfg.tol = tol;
  cfg.max_iter = 200;
  return cfg;
}

Vector advance(const PoissonSystem& sys, const MethodTableau& tab, Vector y, double h, long n) {
  const SolverConfig cfg;
  for (long i = 0; i < n; ++i) y = step(sys, tab, y, h, cfg).y1;
  return y;
}

}  // namespace

TEST_CASE("k = s reproduces Gauss collocation") {
  const auto p = preset("lv2");
  const double h = p.period / 100.0;
  const auto f = [&](const Vector& y) { return vector_field(p.system, y); };
  for (int s = 1; s <= 3; ++s) {
    const auto tab = build_tableau(s, s);
    const Vector ref = oracle::gauss_collocation_step(f, p.y0, h, oracle::golub_welsch(s).c);
    const Vector y1 = step(p.system, tab, p.y0, h, SolverConfig{}).y1;
    CHECK((y1 - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("node-wise evaluation matches the materialized matrix form") {
  for (const char* name : {"lv2", "lv3", "harmonic"}) {
    const auto p = preset(name);
    const double h = p.period / 40.0;
    for (auto [k, s] : {std::pair{4, 1}, std::pair{4, 2}, std::pair{6, 3}, std::pair{7, 2}}) {
      const auto tab = build_tableau(k, s);
      const Vector ref = oracle::matrix_form_step(p.system.B, p.system.gradH, p.y0, h, k, s);
      const Vector y1 = step(p.system, tab, p.y0, h, SolverConfig{}).y1;
      CHECK((y1 - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("quadratic Hamiltonian with constant structure is conserved exactly") {
  const auto p = preset("harmonic");
  const double H0 = p.system.H(p.y0);
  for (auto [k, s] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{3, 2}, std::pair{6, 3}}) {
    const auto tab = build_tableau(k, s);
    Vector y = p.y0;
    double worst = 0.0;
    for (int n = 0; n < 60; ++n) {
      y = step(p.system, tab, y, p.period / 60.0, SolverConfig{}).y1;
      worst = std::max(worst, std::abs(p.system.H(y) - H0));
    }
    CHECK(worst <= 1e-14);
  }
}

TEST_CASE("energy defect of lv2 shrinks like h^(2k+1)") {
  // Per-step energy error for (k, s) = (2, 1): O(h^5).
  const auto p = preset("lv2");
  const auto tab = build_tableau(2, 1);
  const double H0 = p.system.H(p.y0);
  const double h1 = 0.02, h2 = 0.01;
  const double e1 = std::abs(p.system.H(step(p.system, tab, p.y0, h1, SolverConfig{}).y1) - H0);
  const double e2 = std::abs(p.system.H(step(p.system, tab, p.y0, h2, SolverConfig{}).y1) - H0);
  CHECK(std::log2(e1 / e2) == doctest::Approx(5.0).epsilon(0.06));
}

TEST_CASE("global error over one period has order 2s") {
  const auto p = preset("lv2");
  for (auto [k, s] : {std::pair{4, 1}, std::pair{4, 2}}) {
    const auto tab = build_tableau(k, s);
    const double e1 = (advance(p.system, tab, p.y0, p.period / 50, 50) - p.y0).cwiseAbs().maxCoeff();
    const double e2 = (advance(p.system, tab, p.y0, p.period / 100, 100) - p.y0).cwiseAbs().maxCoeff();
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0 * s).epsilon(0.05));
  }
}

TEST_CASE("the step map is symmetric") {
  for (const char* name : {"lv2", "lv3"}) {
    const auto p = preset(name);
    const auto tab = build_tableau(6, 3);
    const double h = p.period / 200.0;
    const Vector y1 = step(p.system, tab, p.y0, h, SolverConfig{}).y1;
    const Vector back = step(p.system, tab, y1, -h, SolverConfig{}).y1;
    CHECK((back - p.y0).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("the three solvers converge to the same step") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> d(0.5, 3.0);
  for (const char* name : {"lv2", "lv3"}) {
    const auto p = preset(name);
    const auto tab = build_tableau(6, 3);
    for (int t = 0; t < 5; ++t) {
      Vector y0(p.system.m);
      for (int i = 0; i < p.system.m; ++i) y0[i] = d(rng);
      const double h = p.period / 100.0;
      const Vector a = step(p.system, tab, y0, h, config(SolverKind::fixed_point)).y1;
      const Vector b = step(p.system, tab, y0, h, config(SolverKind::newton)).y1;
      const Vector c = step(p.system, tab, y0, h, config(SolverKind::blended)).y1;
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((a - c).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("Newton-type solvers need fewer iterations than fixed point") {
  const auto p = preset("lv2");
  const auto tab = build_tableau(6, 3);
  const double h = p.period / 50.0;
  const auto fp = solve_fixed_point(p.system, tab, p.y0, h, config(SolverKind::fixed_point));
  const auto nt = solve_newton(p.system, tab, p.y0, h, config(SolverKind::newton));
  const auto bl = solve_blended(p.system, tab, p.y0, h, config(SolverKind::blended));
  CHECK(fp.stats.converged);
  CHECK(nt.stats.converged);
  CHECK(bl.stats.converged);
  CHECK(nt.stats.iterations < fp.stats.iterations);
  CHECK(bl.stats.iterations < fp.stats.iterations);
}

TEST_CASE("converged coefficients leave a tiny residual") {
  const auto p = preset("lv3");
  const auto tab = build_tableau(6, 3);
  const double h = p.period / 100.0;
  const auto sol = solve(p.system, tab, p.y0, h, SolverConfig{});
  REQUIRE(sol.stats.converged);
  CHECK(residual(p.system, tab, p.y0, h, sol.phi).cwiseAbs().maxCoeff() <= 1e4 * sol.stats.tolerance);
  CHECK(sol.stats.tolerance == doctest::Approx(1e-14 * 2.0));
  const auto st = evaluate_stage_state(p.system, tab, p.y0, h, sol.phi);
  CHECK(st.Y.cols() == 6);
  CHECK(st.gamma_hat.cols() == 3);
  // The last stage of a collocation-like polynomial sits near y1.
  CHECK((st.Y.col(5) - (p.y0 + h * sol.phi.col(0))).norm() < 1e-2);
}

TEST_CASE("warm starts give the same step") {
  const auto p = preset("lv2");
  const auto tab = build_tableau(4, 2);
  const double h = p.period / 100.0;
  const auto cold = step(p.system, tab, p.y0, h, SolverConfig{});
  const auto warm = step(p.system, tab, p.y0, h, SolverConfig{}, &cold.phi);
  CHECK((warm.y1 - cold.y1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("failure and argument handling") {
  const auto p = preset("lv2");
  const auto tab = build_tableau(6, 3);
  SolverConfig cfg;
  cfg.max_iter = 1;
  CHECK_THROWS_AS(step(p.system, tab, p.y0, p.period / 50.0, cfg), SolverFailure);
  try {
    step(p.system, tab, p.y0, p.period / 50.0, cfg);
  } catch (const SolverFailure& e) {
    CHECK(e.stats().iterations == 1);
    CHECK_FALSE(e.stats().converged);
  }
  cfg = SolverConfig{};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(step(p.system, tab, p.y0, 0.01, cfg), std::invalid_argument);
  // A huge step drives stages out of the positive orthant.
  CHECK_THROWS(step(p.system, tab, p.y0, 50.0, SolverConfig{}));
  CHECK(parse_solver("newton") == SolverKind::newton);
  CHECK(parse_solver("fixed-point") == SolverKind::fixed_point);
  CHECK_THROWS_AS(parse_solver("gmres"), std::invalid_argument);
}

TEST_CASE("materialized structure coefficients are skew and symmetric in (i, j)") {
  const auto p = preset("lv3");
  const auto tab = build_tableau(6, 3);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(0.3, 4.0);
  Matrix Y(3, 6);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 6; ++l) Y(i, l) = d(rng);
  const auto rho = structure_coefficients(p.system, tab, Y);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK((rho[i][j] - rho[j][i]).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((rho[i][j] + rho[i][j].transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    }
}
