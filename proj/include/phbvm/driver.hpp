#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phbvm/casimir.hpp"
#include "phbvm/phbvm.hpp"

namespace phbvm {

enum class Method { gauss, phbvm, ephbvm };

Method parse_method(const std::string& name);
std::string to_string(Method method);

/// A method family with its parameters. Gauss-s is PHBVM(s,s).
struct MethodSpec {
  Method method = Method::phbvm;
  int k = 1;
  int s = 1;

  static MethodSpec gauss(int s) { return {Method::gauss, s, s}; }
  static MethodSpec phbvm(int k, int s) { return {Method::phbvm, k, s}; }
  static MethodSpec ephbvm(int k, int s) { return {Method::ephbvm, k, s}; }

  /// "Gauss-3", "PHBVM(6,3)", ...
  std::string label() const;
};

/// Checks the parameter contract (k >= s, gauss implies k == s, ephbvm needs
/// a Casimir) and throws std::invalid_argument on violation.
void validate(const MethodSpec& spec, const PoissonSystem& sys);

/// Raised when a step fails during a multi-step run.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, long step_index)
      : std::runtime_error(what), step_index_(step_index) {}
  long step_index() const { return step_index_; }

 private:
  long step_index_;
};

struct Trajectory {
  double h = 0.0;
  std::vector<double> times;          // n_steps + 1 entries
  std::vector<Vector> states;         // every `stride`-th state, plus the last
  std::vector<long> state_steps;      // step index of each stored state
  std::vector<double> H_error;        // |H(y_n) - H(y_0)|, n_steps + 1 entries
  std::vector<double> C_error;        // max_q |C_q(y_n) - C_q(y_0)|, zeros without Casimirs
  std::vector<int> iterations;        // per step
  std::vector<double> alpha_abs;      // per step max_q |alpha_q|; empty unless ephbvm
  Vector y_final;
  double wall_time = 0.0;

  long steps() const { return static_cast<long>(iterations.size()); }
  double mean_iterations() const;
};

/// Applies n_steps steps of size h starting from y0. `stride` > 0 stores
/// every stride-th state; y0 and the final state are always stored.
Trajectory integrate(const PoissonSystem& sys, const MethodSpec& spec, const Vector& y0,
                     double h, long n_steps, const SolverConfig& cfg, long stride = 0);

/// |y_final - y0|_inf for a run spanning exactly `periods` periods of length
/// `period`; throws std::invalid_argument otherwise.
double periodic_error(const Trajectory& traj, const Vector& y0, double period, int periods);

/// One row of a convergence table; rates are empty on the first row and
/// whenever either error is at roundoff level.
struct ExperimentRecord {
  long n = 0;
  double e_y = 0.0;
  std::optional<double> rate_y;
  double e_H = 0.0;
  std::optional<double> rate_H;
  std::optional<double> e_C;
  std::optional<double> rate_C;
  double mean_iterations = 0.0;
  double time_sec = 0.0;
};

/// Errors below this are treated as saturated (10 eps relative to `scale`).
double saturation_level(double scale);

/// Observed order between two rows: log(e_prev / e) / log(n / n_prev), empty
/// if either error is saturated.
std::optional<double> observed_rate(double e_prev, double e, long n_prev, long n, double scale);

/// Runs the method at h = period / n for every n (strictly ascending) over
/// `periods` periods. Cells may run on up to `threads` threads; results are
/// always returned in n order.
std::vector<ExperimentRecord> convergence_table(const ProblemPreset& problem,
                                                const MethodSpec& spec,
                                                const std::vector<long>& n_list, int periods,
                                                const SolverConfig& cfg, int threads = 1);

struct GrowthSeries {
  MethodSpec spec;
  std::vector<double> e_y;  // at the end of period p = 1..periods
  std::vector<double> e_H;
  std::vector<double> e_C;
  /// Least-squares slope of log e_y against log p over p > periods / 2.
  double slope_y = 0.0;
  double wall_time = 0.0;
};

/// Least-squares slope of log(values[p-1]) against log(p) for p in (P/2, P].
double late_loglog_slope(const std::vector<double>& values);

/// Long-run error growth for each method with h = period / steps_per_period.
/// Requires periods >= 5.
std::vector<GrowthSeries> growth_study(const ProblemPreset& problem,
                                       const std::vector<MethodSpec>& methods,
                                       long steps_per_period, int periods,
                                       const SolverConfig& cfg, int threads = 1);

}  // namespace phbvm
