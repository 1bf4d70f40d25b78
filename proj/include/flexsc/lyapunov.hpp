#pragma once

// Boundary control law for the hub-beam system and its gain feasibility system.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "flexsc/beam_fe.hpp"
#include "flexsc/errors.hpp"

namespace flexsc {

struct LyapunovParams {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double k1 = 0.0, k2 = 0.0;
  double delta = 0.0, eta = 0.0;

  bool all_positive() const {
    return a1 > 0 && a2 > 0 && a3 > 0 && a4 > 0 && k1 > 0 && k2 > 0 && delta > 0 && eta > 0;
  }
};

struct BoundarySignals {
  double e = 0.0;        // theta - theta_d
  double theta_t = 0.0;
  double y_xx0 = 0.0;
  double y_xxt0 = 0.0;
};

inline BoundarySignals boundary_signals(const PlantState& s, const BeamModel& model, double theta_d) {
  const BoundaryCurvature c = boundary_curvature(s, model);
  return {s.theta() - theta_d, s.theta_t(), c.y_xx0, c.y_xxt0};
}

inline double control_torque(const BoundarySignals& s, const LyapunovParams& p, const BeamModel& model) {
  if (!(p.a1 > 0 && p.a2 > 0 && p.k1 > 0 && p.k2 > 0))
    throw ParameterError("control_torque: a1, a2, k1, k2 must be > 0");
  const double J = model.hub_inertia, EI = model.ei;
  const double delta_v = J * s.theta_t + p.a2 * (-s.y_xx0 + p.a1 * s.e);
  return (-EI * s.y_xx0 + p.a2 * s.y_xxt0 - p.a1 * p.a2 * s.theta_t) - (EI / p.a2) * s.theta_t -
         p.k1 * delta_v + p.k2 * (J * s.theta_t + p.a2 * s.y_xx0 - p.a1 * p.a2 * s.e);
}

// The law as an affine state feedback tau = cd.q + cv.q_t + c0 on the FE plant.
// Coefficients are read off control_torque by linearity.
inline AffineFeedback lyapunov_feedback(const LyapunovParams& p, const BeamModel& model, double theta_d) {
  const double c_e = control_torque({1, 0, 0, 0}, p, model);
  const double c_tt = control_torque({0, 1, 0, 0}, p, model);
  const double c_xx = control_torque({0, 0, 1, 0}, p, model);
  const double c_xxt = control_torque({0, 0, 0, 1}, p, model);
  const Eigen::Index n = model.n_aug(), it = model.n_dofs();
  const double h = model.element_length();
  Eigen::VectorXd curv = Eigen::VectorXd::Zero(n);
  curv(0) = 6.0 / (h * h);
  curv(1) = -2.0 / h;
  AffineFeedback fb;
  fb.cd = c_xx * curv;
  fb.cd(it) += c_e;
  fb.cv = c_xxt * curv;
  fb.cv(it) += c_tt;
  fb.c0 = -c_e * theta_d;
  return fb;
}

struct ConstraintCheck {
  std::string name;
  double margin = 0.0;
  bool strict = true;
  bool passed = false;
};

struct ConstraintReport {
  std::array<ConstraintCheck, 8> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.passed; });
  }
  const ConstraintCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed) return &c;
    return nullptr;
  }
};

// Margins of the eight gain inequalities (positive = satisfied).
inline ConstraintReport check_constraints(const LyapunovParams& p, const BeamModel& model) {
  constexpr double pi = std::numbers::pi;
  const double L = model.length, EI = model.ei, rho = model.rho, J = model.hub_inertia;
  const double a1 = p.a1, a2 = p.a2, a3 = p.a3, a4 = p.a4, k2 = p.k2, d = p.delta, eta = p.eta;
  const double pi2 = pi * pi, pi4 = pi2 * pi2;
  ConstraintReport r;
  auto set = [&](int i, std::string name, double margin, bool strict, double scale = 0.0) {
    // Non-strict checks allow rounding noise relative to the size of their terms.
    const double tol = strict ? 0.0 : 1e-12 * scale;
    r.checks[i] = {std::move(name), margin, strict, strict ? margin > 0.0 : margin >= -tol};
  };
  set(0, "positivity", std::min({a1, a2, a3, a4, p.k1, k2, d, eta}), true);
  set(1, "1 - L a3 - a4 > 0", 1.0 - L * a3 - a4, true);
  set(2, "EI/2 - 2 rho L^3 a3/pi^2 - 8 rho L^4 a4/pi^4 > 0",
      EI / 2.0 - 2.0 * rho * L * L * L * a3 / pi2 - 8.0 * rho * L * L * L * L * a4 / pi4, true);
  set(3, "EI a1/2 - 2 rho L^3 a4/pi^2 > 0", EI * a1 / 2.0 - 2.0 * rho * L * L * L * a4 / pi2, true);
  set(4, "J EI/a2 - k2 J^2 - rho L^2 a3/(2 delta) - 2 rho L^3 a4/3 > 0",
      J * EI / a2 - k2 * J * J - rho * L * L * a3 / (2.0 * d) - 2.0 * rho * L * L * L * a4 / 3.0, true);
  set(5, "(1 - L delta) a3 - 4 a4 > 0", (1.0 - L * d) * a3 - 4.0 * a4, true);
  {
    const double t1 = k2 * a2 * a2, t2 = eta * k2 * a1 * a2 * a2, t3 = EI * eta * a4 / 2.0, t4 = L * EI * a3 / 2.0;
    set(6, "k2 a2^2 - eta k2 a1 a2^2 + EI eta a4/2 - L EI a3/2 >= 0", t1 - t2 + t3 - t4, false,
        std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4));
  }
  set(7, "k2 a1^2 a2^2 - k2 a1 a2^2/eta + EI a4/(2 eta) > 0",
      k2 * a1 * a1 * a2 * a2 - k2 * a1 * a2 * a2 / eta + EI * a4 / (2.0 * eta), true);
  return r;
}

struct ConstructionError : ParameterError {
  ConstructionError(const ConstraintCheck& c)
      : ParameterError("construct_params: constraint '" + c.name + "' fails with margin " +
                       std::to_string(c.margin)),
        failing(c) {}
  ConstraintCheck failing;
};

// Four-way minimum bounding k2 / epsilon2 for given a1, a2, delta.
inline double k2_bound(double a1, double a2, double delta, const BeamModel& model) {
  constexpr double pi = std::numbers::pi;
  const double L = model.length, EI = model.ei, rho = model.rho, J = model.hub_inertia;
  const double pi2 = pi * pi, pi4 = pi2 * pi2, a22 = a2 * a2, EI2 = EI * EI;
  const double b1 = EI / (2.0 * a22 * (a1 + 1.0));
  const double b2 = pi4 * EI2 / (8.0 * rho * L * L * a22 * (4.0 * L * L * a1 + pi2));
  const double b3 = pi2 * EI2 / (8.0 * rho * L * L * L * a22);
  const double b4 = 3.0 * J * EI2 * delta /
                    (a2 * (4.0 * rho * L * L * L * delta * a1 * a22 + 3.0 * EI * J * J * delta + 3.0 * rho * L * a22));
  return std::min({b1, b2, b3, b4});
}

// Simplified constructor: a1 from epsilon1, k2 from epsilon2 times the bound,
// then a3, a4 from the equality that pins them to k2. eta drops out of every
// inequality under that equality, so it is fixed at 1.
inline LyapunovParams construct_params(double a2, double epsilon1, double epsilon2, double delta,
                                       const BeamModel& model, double k1 = 0.1) {
  model.validate();
  const double L = model.length, EI = model.ei;
  if (!(a2 > 0.0)) throw ParameterError("construct_params: a2 must be > 0");
  if (!(epsilon1 > 0.0 && epsilon1 < 1.0)) throw ParameterError("construct_params: epsilon1 must lie in (0, 1)");
  if (!(epsilon2 > 0.0 && epsilon2 < 1.0)) throw ParameterError("construct_params: epsilon2 must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0 / L)) throw ParameterError("construct_params: delta must lie in (0, 1/L)");
  if (!(k1 > 0.0)) throw ParameterError("construct_params: k1 must be > 0");
  LyapunovParams p;
  p.a2 = a2;
  p.k1 = k1;
  p.delta = delta;
  p.eta = 1.0;
  p.a1 = (1.0 - L * delta) * epsilon1 / (4.0 * L);
  p.k2 = epsilon2 * k2_bound(p.a1, a2, delta, model);
  p.a3 = 2.0 * p.k2 * a2 * a2 / (L * EI);
  p.a4 = 2.0 * p.k2 * p.a1 * a2 * a2 / EI;
  const ConstraintReport rep = check_constraints(p, model);
  if (const ConstraintCheck* bad = rep.first_failure()) throw ConstructionError(*bad);
  return p;
}

// Inverts the constructor for given (a1, a2, k1, k2) and delta, returning a full
// certified set whose a1 and k2 equal the inputs up to rounding.
inline LyapunovParams construct_from_gains(double a1, double a2, double k1, double k2, double delta,
                                           const BeamModel& model) {
  const double L = model.length;
  if (!(delta > 0.0 && delta < 1.0 / L)) throw ParameterError("construct_from_gains: delta must lie in (0, 1/L)");
  if (!(a1 > 0.0 && a2 > 0.0 && k2 > 0.0)) throw ParameterError("construct_from_gains: gains must be > 0");
  const double eps1 = 4.0 * L * a1 / (1.0 - L * delta);
  const double eps2 = k2 / k2_bound(a1, a2, delta, model);
  return construct_params(a2, eps1, eps2, delta, model, k1);
}

}  // namespace flexsc
