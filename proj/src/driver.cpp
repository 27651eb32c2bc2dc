#include "phbvm/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace phbvm {

Method parse_method(const std::string& name) {
  if (name == "gauss") return Method::gauss;
  if (name == "phbvm") return Method::phbvm;
  if (name == "ephbvm") return Method::ephbvm;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::gauss: return "gauss";
    case Method::phbvm: return "phbvm";
    case Method::ephbvm: return "ephbvm";
  }
  return "?";
}

std::string MethodSpec::label() const {
  std::ostringstream out;
  switch (method) {
    case Method::gauss: out << "Gauss-" << s; break;
    case Method::phbvm: out << "PHBVM(" << k << "," << s << ")"; break;
    case Method::ephbvm: out << "EPHBVM(" << k << "," << s << ")"; break;
  }
  return out.str();
}

void validate(const MethodSpec& spec, const PoissonSystem& sys) {
  if (spec.s < 1 || spec.k < spec.s || spec.k > kMaxGaussNodes) {
    throw std::invalid_argument(spec.label() + ": need 1 <= s <= k <= " +
                                std::to_string(kMaxGaussNodes));
  }
  if (spec.method == Method::gauss && spec.k != spec.s) {
    throw std::invalid_argument("gauss method requires k == s");
  }
  if (spec.method == Method::ephbvm && sys.num_casimirs() == 0) {
    throw std::invalid_argument("ephbvm requires a problem with at least one Casimir");
  }
}

double Trajectory::mean_iterations() const {
  if (iterations.empty()) return 0.0;
  double sum = 0.0;
  for (int it : iterations) sum += it;
  return sum / static_cast<double>(iterations.size());
}

namespace {

double casimir_defect(const PoissonSystem& sys, const Vector& y, const std::vector<double>& c0) {
  double worst = 0.0;
  for (int q = 0; q < sys.num_casimirs(); ++q)
    worst = std::max(worst, std::abs(sys.casimirs[q].value(y) - c0[q]));
  return worst;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the
// first failure in index order.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Trajectory integrate(const PoissonSystem& sys, const MethodSpec& spec, const Vector& y0,
                     double h, long n_steps, const SolverConfig& cfg, long stride) {
  validate(spec, sys);
  if (n_steps < 0) throw std::invalid_argument("integrate: negative step count");
  if (y0.size() != sys.m) throw std::invalid_argument("integrate: y0 has the wrong dimension");
  const MethodTableau tab = build_tableau(spec.k, spec.s);
  const auto t_start = std::chrono::steady_clock::now();

  Trajectory traj;
  traj.h = h;
  traj.times.reserve(n_steps + 1);
  traj.H_error.reserve(n_steps + 1);
  traj.C_error.reserve(n_steps + 1);
  traj.iterations.reserve(n_steps);

  const double H0 = sys.H(y0);
  std::vector<double> C0;
  for (const auto& c : sys.casimirs) C0.push_back(c.value(y0));

  traj.times.push_back(0.0);
  traj.H_error.push_back(0.0);
  traj.C_error.push_back(0.0);
  traj.states.push_back(y0);
  traj.state_steps.push_back(0);

  Vector y = y0;
  Matrix phi_prev;
  for (long n = 1; n <= n_steps; ++n) {
    const Matrix* warm = (cfg.warm_start && phi_prev.size() != 0) ? &phi_prev : nullptr;
    StepResult r;
    try {
      if (spec.method == Method::ephbvm) {
        r = step_with_casimir(sys, tab, y, h, cfg, warm);
      } else {
        r = step(sys, tab, y, h, cfg, warm);
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << spec.label() << " failed at step " << n << " (t = " << (n - 1) * h
          << "): " << e.what();
      throw IntegrationError(msg.str(), n);
    }
    y = std::move(r.y1);
    if (cfg.warm_start) phi_prev = std::move(r.phi);

    traj.times.push_back(static_cast<double>(n) * h);
    traj.H_error.push_back(std::abs(sys.H(y) - H0));
    traj.C_error.push_back(casimir_defect(sys, y, C0));
    traj.iterations.push_back(r.iterations);
    if (spec.method == Method::ephbvm) traj.alpha_abs.push_back(r.alpha.cwiseAbs().maxCoeff());
    if ((stride > 0 && n % stride == 0) || n == n_steps) {
      if (traj.state_steps.back() != n) {
        traj.states.push_back(y);
        traj.state_steps.push_back(n);
      }
    }
  }
  traj.y_final = y;
  traj.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return traj;
}

double periodic_error(const Trajectory& traj, const Vector& y0, double period, int periods) {
  if (traj.times.empty()) throw std::invalid_argument("periodic_error: empty trajectory");
  if (periods < 0 || !(period > 0.0)) {
    throw std::invalid_argument("periodic_error: need a positive period and periods >= 0");
  }
  const double span = traj.times.back();
  const double expected = period * periods;
  if (std::abs(span - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
    std::ostringstream msg;
    msg << "periodic_error: trajectory spans t = " << span << ", not " << periods
        << " period(s) of " << period;
    throw std::invalid_argument(msg.str());
  }
  return (traj.y_final - y0).cwiseAbs().maxCoeff();
}

double saturation_level(double scale) {
  return 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(scale));
}

std::optional<double> observed_rate(double e_prev, double e, long n_prev, long n, double scale) {
  const double floor = saturation_level(scale);
  if (!(e_prev > floor) || !(e > floor)) return std::nullopt;
  return std::log(e_prev / e) / std::log(static_cast<double>(n) / static_cast<double>(n_prev));
}

std::vector<ExperimentRecord> convergence_table(const ProblemPreset& problem,
                                                const MethodSpec& spec,
                                                const std::vector<long>& n_list, int periods,
                                                const SolverConfig& cfg, int threads) {
  validate(spec, problem.system);
  if (n_list.empty()) throw std::invalid_argument("convergence_table: empty n list");
  if (periods < 1) throw std::invalid_argument("convergence_table: periods must be >= 1");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw std::invalid_argument("convergence_table: n must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) {
      throw std::invalid_argument("convergence_table: n list must be strictly ascending");
    }
  }
  const auto& sys = problem.system;
  const Vector& y0 = problem.y0;
  const double H0 = sys.H(y0);
  std::vector<double> C0;
  double C_scale = 0.0;
  for (const auto& c : sys.casimirs) {
    C0.push_back(c.value(y0));
    C_scale = std::max(C_scale, std::abs(C0.back()));
  }
  const double y_scale = y0.cwiseAbs().maxCoeff();

  std::vector<ExperimentRecord> rows(n_list.size());
  parallel_for(n_list.size(), threads, [&](std::size_t i) {
    const long n = n_list[i];
    const double h = problem.period / static_cast<double>(n);
    const Trajectory traj = integrate(sys, spec, y0, h, n * periods, cfg);
    ExperimentRecord& rec = rows[i];
    rec.n = n;
    rec.e_y = periodic_error(traj, y0, problem.period, periods);
    rec.e_H = std::abs(sys.H(traj.y_final) - H0);
    if (!C0.empty()) rec.e_C = casimir_defect(sys, traj.y_final, C0);
    rec.mean_iterations = traj.mean_iterations();
    rec.time_sec = traj.wall_time;
  });

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& prev = rows[i - 1];
    auto& cur = rows[i];
    cur.rate_y = observed_rate(prev.e_y, cur.e_y, prev.n, cur.n, y_scale);
    cur.rate_H = observed_rate(prev.e_H, cur.e_H, prev.n, cur.n, H0);
    if (cur.e_C && prev.e_C) cur.rate_C = observed_rate(*prev.e_C, *cur.e_C, prev.n, cur.n, C_scale);
  }
  return rows;
}

double late_loglog_slope(const std::vector<double>& values) {
  const std::size_t P = values.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t p = P / 2 + 1; p <= P; ++p) {
    const double v = values[p - 1];
    if (!(v > 0.0)) continue;
    const double x = std::log(static_cast<double>(p));
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

std::vector<GrowthSeries> growth_study(const ProblemPreset& problem,
                                       const std::vector<MethodSpec>& methods,
                                       long steps_per_period, int periods,
                                       const SolverConfig& cfg, int threads) {
  if (periods < 5) throw std::invalid_argument("growth_study: need at least 5 periods");
  if (steps_per_period < 1) throw std::invalid_argument("growth_study: steps per period must be positive");
  for (const auto& spec : methods) validate(spec, problem.system);

  const auto& sys = problem.system;
  const Vector& y0 = problem.y0;
  const double h = problem.period / static_cast<double>(steps_per_period);
  const double H0 = sys.H(y0);
  std::vector<double> C0;
  for (const auto& c : sys.casimirs) C0.push_back(c.value(y0));

  std::vector<GrowthSeries> out(methods.size());
  parallel_for(methods.size(), threads, [&](std::size_t i) {
    GrowthSeries& series = out[i];
    series.spec = methods[i];
    const Trajectory traj = integrate(sys, methods[i], y0, h, steps_per_period * periods, cfg,
                                      steps_per_period);
    for (std::size_t j = 1; j < traj.states.size(); ++j) {
      const Vector& y = traj.states[j];
      series.e_y.push_back((y - y0).cwiseAbs().maxCoeff());
      series.e_H.push_back(std::abs(sys.H(y) - H0));
      series.e_C.push_back(casimir_defect(sys, y, C0));
    }
    series.slope_y = late_loglog_slope(series.e_y);
    series.wall_time = traj.wall_time;
  });
  return out;
}

}  // namespace phbvm
