#include "phbvm/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace phbvm {

namespace {

constexpr double kDomainFloor = 1e-12;

void require_positive(const Vector& y, const char* who) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] > kDomainFloor)) {
      std::ostringstream msg;
      msg << who << ": component " << i << " = " << y[i] << " outside the positive orthant";
      throw DomainError(msg.str());
    }
  }
}

}  // namespace

Vector vector_field(const PoissonSystem& sys, const Vector& y) {
  return sys.B(y) * sys.gradH(y);
}

Matrix finite_difference_jacobian(const PoissonSystem& sys, const Vector& y, double fd_step) {
  const Eigen::Index m = y.size();
  Matrix J(m, m);
  Vector yp = y;
  Vector ym = y;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double dj = fd_step * std::max(1.0, std::abs(y[j]));
    yp[j] = y[j] + dj;
    ym[j] = y[j] - dj;
    J.col(j) = (vector_field(sys, yp) - vector_field(sys, ym)) / (2.0 * dj);
    yp[j] = y[j];
    ym[j] = y[j];
  }
  return J;
}

Matrix jacobian(const PoissonSystem& sys, const Vector& y, double fd_step) {
  if (sys.jacobian) return sys.jacobian(y);
  return finite_difference_jacobian(sys, y, fd_step);
}

PoissonSystem lotka_volterra_2(double a, double b, double y1_star, double y2_star) {
  PoissonSystem sys;
  sys.m = 2;
  sys.B = [](const Vector& y) {
    Matrix B(2, 2);
    const double p = y[0] * y[1];
    B << 0.0, p, -p, 0.0;
    return B;
  };
  sys.H = [=](const Vector& y) {
    require_positive(y, "lv2 H");
    return a * (std::log(y[0]) - y[0] / y1_star) + b * (std::log(y[1]) - y[1] / y2_star);
  };
  sys.gradH = [=](const Vector& y) {
    require_positive(y, "lv2 gradH");
    Vector g(2);
    g << a * (1.0 / y[0] - 1.0 / y1_star), b * (1.0 / y[1] - 1.0 / y2_star);
    return g;
  };
  sys.jacobian = [=](const Vector& y) {
    require_positive(y, "lv2 jacobian");
    // f1 = b y1 (1 - y2/y2*), f2 = -a y2 (1 - y1/y1*)
    Matrix J(2, 2);
    J << b * (1.0 - y[1] / y2_star), -b * y[0] / y2_star,
         a * y[1] / y1_star, -a * (1.0 - y[0] / y1_star);
    return J;
  };
  return sys;
}

PoissonSystem lotka_volterra_3(double a, double b, double c, double y1_star, double y2_star,
                               double y3_star) {
  PoissonSystem sys;
  sys.m = 3;
  sys.B = [](const Vector& y) {
    Matrix B(3, 3);
    const double p12 = y[0] * y[1];
    const double p13 = y[0] * y[2];
    const double p23 = y[1] * y[2];
    B << 0.0, p12, p13,
         -p12, 0.0, -p23,
         -p13, p23, 0.0;
    return B;
  };
  sys.H = [=](const Vector& y) {
    require_positive(y, "lv3 H");
    return a * (std::log(y[0]) - y[0] / y1_star) + b * (std::log(y[1]) - y[1] / y2_star) +
           c * (std::log(y[2]) - y[2] / y3_star);
  };
  sys.gradH = [=](const Vector& y) {
    require_positive(y, "lv3 gradH");
    Vector g(3);
    g << a * (1.0 / y[0] - 1.0 / y1_star), b * (1.0 / y[1] - 1.0 / y2_star),
        c * (1.0 / y[2] - 1.0 / y3_star);
    return g;
  };
  sys.jacobian = [=](const Vector& y) {
    require_positive(y, "lv3 jacobian");
    // f1 = y1 (u2 + u3), f2 = -y2 (u1 + u3), f3 = y3 (u2 - u1), u_i = k_i (1 - y_i / y_i*)
    const double u1 = a * (1.0 - y[0] / y1_star);
    const double u2 = b * (1.0 - y[1] / y2_star);
    const double u3 = c * (1.0 - y[2] / y3_star);
    Matrix J(3, 3);
    J << u2 + u3, -y[0] * b / y2_star, -y[0] * c / y3_star,
         y[1] * a / y1_star, -(u1 + u3), y[1] * c / y3_star,
         y[2] * a / y1_star, -y[2] * b / y2_star, u2 - u1;
    return J;
  };
  Casimir cas;
  cas.value = [](const Vector& y) {
    require_positive(y, "lv3 Casimir");
    return -std::log(y[0]) - std::log(y[1]) + std::log(y[2]);
  };
  cas.gradient = [](const Vector& y) {
    require_positive(y, "lv3 Casimir gradient");
    Vector g(3);
    g << -1.0 / y[0], -1.0 / y[1], 1.0 / y[2];
    return g;
  };
  sys.casimirs.push_back(std::move(cas));
  return sys;
}

PoissonSystem harmonic_oscillator() {
  PoissonSystem sys;
  sys.m = 2;
  Matrix J(2, 2);
  J << 0.0, 1.0, -1.0, 0.0;
  sys.B = [J](const Vector&) { return J; };
  sys.H = [](const Vector& y) { return 0.5 * y.squaredNorm(); };
  sys.gradH = [](const Vector& y) { return y; };
  sys.jacobian = [J](const Vector&) { return J; };
  return sys;
}

std::vector<std::string> preset_names() { return {"lv2", "lv3", "harmonic"}; }

ProblemPreset preset(const std::string& name) {
  ProblemPreset p;
  p.name = name;
  if (name == "lv2") {
    p.system = lotka_volterra_2(1.0, 3.0, 1.0, 1.0);
    p.y0 = Vector{{5.0, 1.0}};
    p.period = 4.633434168477889;
  } else if (name == "lv3") {
    p.system = lotka_volterra_3(1.0, 2.0, 3.0, 1.0, 10.0, 50.0);
    p.y0 = Vector{{1.0, 1.0, 1.0}};
    p.period = 2.143610709155912;
  } else if (name == "harmonic") {
    p.system = harmonic_oscillator();
    p.y0 = Vector{{1.0, 0.0}};
    p.period = 2.0 * std::numbers::pi;
  } else {
    throw std::out_of_range("unknown problem preset '" + name + "'");
  }
  return p;
}

}  // namespace phbvm
