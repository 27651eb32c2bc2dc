#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phbvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a state leaves the domain of the Hamiltonian or a Casimir
/// (for the Lotka-Volterra presets: a component <= 1e-12).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Casimir {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Poisson system y' = B(y) grad H(y) with B skew-symmetric.
///
/// All callbacks must be re-entrant; a system is treated as immutable once
/// constructed and may be shared between threads.
struct PoissonSystem {
  int m = 0;
  std::function<Matrix(const Vector&)> B;
  std::function<double(const Vector&)> H;
  std::function<Vector(const Vector&)> gradH;
  std::vector<Casimir> casimirs;
  /// Jacobian of f(y) = B(y) grad H(y); finite differences are used when empty.
  std::function<Matrix(const Vector&)> jacobian;
  /// Skew matrices used by the Casimir correction; defaults are generated when empty.
  std::vector<Matrix> casimir_skew;

  int num_casimirs() const { return static_cast<int>(casimirs.size()); }
};

struct ProblemPreset {
  std::string name;
  PoissonSystem system;
  Vector y0;
  double period = 0.0;
};

inline constexpr double kDefaultFdStep = 1e-7;

/// f(y) = B(y) grad H(y).
Vector vector_field(const PoissonSystem& sys, const Vector& y);

/// Analytic Jacobian when the system supplies one, central differences otherwise.
Matrix jacobian(const PoissonSystem& sys, const Vector& y, double fd_step = kDefaultFdStep);

/// Central differences of vector_field with step fd_step * max(1, |y_i|) per column.
Matrix finite_difference_jacobian(const PoissonSystem& sys, const Vector& y,
                                  double fd_step = kDefaultFdStep);

/// Built-in problems: "lv2", "lv3", "harmonic". Throws std::out_of_range for
/// unknown names.
ProblemPreset preset(const std::string& name);

std::vector<std::string> preset_names();

/// Two-species Lotka-Volterra system with structure matrix [[0, y1 y2], [-y1 y2, 0]].
PoissonSystem lotka_volterra_2(double a, double b, double y1_star, double y2_star);

/// Three-species Lotka-Volterra system carrying the Casimir
/// C(y) = -ln y1 - ln y2 + ln y3.
PoissonSystem lotka_volterra_3(double a, double b, double c, double y1_star, double y2_star,
                               double y3_star);

/// Canonical system with constant B = [[0,1],[-1,0]] and H = |y|^2 / 2.
PoissonSystem harmonic_oscillator();

}  // namespace phbvm
