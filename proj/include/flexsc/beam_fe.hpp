#pragma once

// Hub plus clamped Euler-Bernoulli beam, cubic Hermite elements, Generalized-alpha
// time stepping. DOF layout of the augmented vector q:
//   q = (w_1, phi_1, w_2, phi_2, ..., w_n, phi_n, theta)
// Node 0 sits at the hub and is clamped, so its two DOFs never appear.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "flexsc/errors.hpp"

namespace flexsc {

struct BeamModel {
  double ei = 120.0;           // bending stiffness EI
  double rho = 20.0;           // linear mass density
  double length = 5.0;         // beam length L
  double hub_inertia = 400.0;  // hub inertia J
  int n_elements = 20;
  double dt = 0.05;

  double element_length() const { return length / n_elements; }
  int n_dofs() const { return 2 * n_elements; }
  int n_aug() const { return 2 * n_elements + 1; }
  double total_inertia() const { return hub_inertia + rho * length * length * length / 3.0; }

  void validate() const {
    if (!(ei > 0.0)) throw ParameterError("BeamModel: ei must be > 0");
    if (!(rho > 0.0)) throw ParameterError("BeamModel: rho must be > 0");
    if (!(length > 0.0)) throw ParameterError("BeamModel: length must be > 0");
    if (!(hub_inertia > 0.0)) throw ParameterError("BeamModel: hub_inertia must be > 0");
    if (n_elements < 2) throw ParameterError("BeamModel: n_elements must be >= 2");
    if (!(dt > 0.0)) throw ParameterError("BeamModel: dt must be > 0");
  }
};

// Chung-Hulbert parameterization from the high-frequency spectral radius.
struct IntegratorConfig {
  double rho_inf = 0.9;

  double alpha_m() const { return (2.0 * rho_inf - 1.0) / (rho_inf + 1.0); }
  double alpha_f() const { return rho_inf / (rho_inf + 1.0); }
  double gamma() const { return 0.5 - alpha_m() + alpha_f(); }
  double beta() const {
    const double s = 1.0 - alpha_m() + alpha_f();
    return 0.25 * s * s;
  }
  void validate() const {
    if (!(rho_inf >= 0.0 && rho_inf <= 1.0))
      throw ParameterError("IntegratorConfig: rho_inf must lie in [0, 1]");
  }
};

struct PlantState {
  Eigen::VectorXd q;     // (a, theta)
  Eigen::VectorXd q_t;   // (a_t, theta_t)
  Eigen::VectorXd q_tt;  // (a_tt, theta_tt)
  double time = 0.0;

  static PlantState rest(const BeamModel& model, double theta = 0.0) {
    PlantState s;
    s.q = Eigen::VectorXd::Zero(model.n_aug());
    s.q_t = Eigen::VectorXd::Zero(model.n_aug());
    s.q_tt = Eigen::VectorXd::Zero(model.n_aug());
    s.q(model.n_dofs()) = theta;
    return s;
  }

  Eigen::Index n_dofs() const { return q.size() - 1; }
  auto a() const { return q.head(n_dofs()); }
  auto a_t() const { return q_t.head(n_dofs()); }
  auto a_tt() const { return q_tt.head(n_dofs()); }
  auto a() { return q.head(n_dofs()); }
  auto a_t() { return q_t.head(n_dofs()); }
  auto a_tt() { return q_tt.head(n_dofs()); }
  double theta() const { return q(n_dofs()); }
  double theta_t() const { return q_t(n_dofs()); }
  double theta_tt() const { return q_tt(n_dofs()); }
};

struct ElementMatrices {
  Eigen::Matrix4d stiffness;
  Eigen::Matrix4d mass;
};

// Consistent cubic-Hermite matrices for DOFs (w1, phi1, w2, phi2).
// Zero ei or rho is accepted so each matrix can be inspected on its own.
inline ElementMatrices element_matrices(double ei, double rho, double h) {
  if (!(ei >= 0.0) || !(rho >= 0.0) || !(h > 0.0))
    throw ParameterError("element_matrices: need ei >= 0, rho >= 0, h > 0");
  const double h2 = h * h;
  ElementMatrices e;
  e.stiffness << 12, 6 * h, -12, 6 * h,
                 6 * h, 4 * h2, -6 * h, 2 * h2,
                 -12, -6 * h, 12, -6 * h,
                 6 * h, 2 * h2, -6 * h, 4 * h2;
  e.stiffness *= ei / (h2 * h);
  e.mass << 156, 22 * h, 54, -13 * h,
            22 * h, 4 * h2, 13 * h, -3 * h2,
            54, 13 * h, 156, -22 * h,
            -13 * h, -3 * h2, -22 * h, 4 * h2;
  e.mass *= rho * h / 420.0;
  return e;
}

// Element contribution to m_i = int rho x phi_i dx for an element starting at x0.
inline Eigen::Vector4d element_coupling(double rho, double h, double x0) {
  const double h2 = h * h;
  Eigen::Vector4d base(h / 2.0, h2 / 12.0, h / 2.0, -h2 / 12.0);
  Eigen::Vector4d first(3.0 * h2 / 20.0, h2 * h / 30.0, 7.0 * h2 / 20.0, -h2 * h / 20.0);
  return rho * (x0 * base + first);
}

struct AssembledSystem {
  BeamModel model;
  Eigen::MatrixXd mass_aug;   // [[M, m], [m^T, J~]]
  Eigen::MatrixXd stiff_aug;  // [[K, 0], [0, 0]]
  Eigen::VectorXd coupling;   // m
  double total_inertia = 0.0;

  Eigen::Index size() const { return mass_aug.rows(); }
  Eigen::Index theta_index() const { return mass_aug.rows() - 1; }
};

inline AssembledSystem assemble(const BeamModel& model) {
  model.validate();
  const int ne = model.n_elements;
  const double h = model.element_length();
  const int nfull = 2 * (ne + 1);
  const ElementMatrices em = element_matrices(model.ei, model.rho, h);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nfull, nfull);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nfull, nfull);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(nfull);
  for (int e = 0; e < ne; ++e) {
    const int i = 2 * e;
    K.block<4, 4>(i, i) += em.stiffness;
    M.block<4, 4>(i, i) += em.mass;
    m.segment<4>(i) += element_coupling(model.rho, h, e * h);
  }

  const int n = model.n_dofs();
  AssembledSystem sys;
  sys.model = model;
  sys.total_inertia = model.total_inertia();
  sys.coupling = m.tail(n);
  sys.mass_aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  sys.mass_aug.topLeftCorner(n, n) = M.bottomRightCorner(n, n);
  sys.mass_aug.block(0, n, n, 1) = sys.coupling;
  sys.mass_aug.block(n, 0, 1, n) = sys.coupling.transpose();
  sys.mass_aug(n, n) = sys.total_inertia;
  sys.stiff_aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  sys.stiff_aug.topLeftCorner(n, n) = K.bottomRightCorner(n, n);
  return sys;
}

inline void check_state(const AssembledSystem& sys, const PlantState& s) {
  if (s.q.size() != sys.size() || s.q_t.size() != sys.size() || s.q_tt.size() != sys.size())
    throw DimensionError("plant state size does not match assembled system");
}

inline double total_energy(const AssembledSystem& sys, const PlantState& s) {
  check_state(sys, s);
  return 0.5 * s.q_t.dot(sys.mass_aug * s.q_t) + 0.5 * s.q.dot(sys.stiff_aug * s.q);
}

// Natural frequencies (rad/s), ascending. lock_hub drops the theta row/column.
inline std::vector<double> modal_frequencies(const AssembledSystem& sys, bool lock_hub) {
  const Eigen::Index n = lock_hub ? sys.size() - 1 : sys.size();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      sys.stiff_aug.topLeftCorner(n, n), sys.mass_aug.topLeftCorner(n, n));
  if (es.info() != Eigen::Success) throw NumericError("modal_frequencies: eigen-solver failed");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) w[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  std::sort(w.begin(), w.end());
  return w;
}

struct BoundaryCurvature {
  double y_xx0 = 0.0;
  double y_xxt0 = 0.0;
};

// Second derivative of the first element's Hermite interpolant at x = 0.
inline BoundaryCurvature boundary_curvature(const PlantState& s, const BeamModel& model) {
  const double h = model.element_length();
  auto curv = [h](double w, double phi) { return 6.0 * w / (h * h) - 2.0 * phi / h; };
  return {curv(s.q(0), s.q(1)), curv(s.q_t(0), s.q_t(1))};
}

// Curvature at the free tip; zero in the exact solution (no tip moment).
inline double tip_curvature(const Eigen::VectorXd& q, const BeamModel& model) {
  const double h = model.element_length();
  const Eigen::Index i = model.n_dofs() - 4;
  return 6.0 * q(i) / (h * h) + 2.0 * q(i + 1) / h - 6.0 * q(i + 2) / (h * h) + 4.0 * q(i + 3) / h;
}

inline double tip_deflection(const PlantState& s) { return s.q(s.n_dofs() - 2); }

inline double tip_output(const PlantState& s, const BeamModel& model) {
  return s.theta() + tip_deflection(s) / model.length;
}

inline double hub_output(const PlantState& s) { return s.theta(); }

// Torque is held constant over each step; the factorization is cached.
class GeneralizedAlpha {
 public:
  GeneralizedAlpha(std::shared_ptr<const AssembledSystem> sys, IntegratorConfig cfg = {})
      : sys_(std::move(sys)), cfg_(cfg) {
    cfg_.validate();
    const double dt = sys_->model.dt;
    if (!(dt > 0.0)) throw ParameterError("GeneralizedAlpha: dt must be > 0");
    const Eigen::MatrixXd eff = (1.0 - cfg_.alpha_m()) * sys_->mass_aug +
                                (1.0 - cfg_.alpha_f()) * cfg_.beta() * dt * dt * sys_->stiff_aug;
    llt_.compute(eff);
    if (llt_.info() != Eigen::Success) throw NumericError("GeneralizedAlpha: effective matrix not SPD");
  }

  PlantState step(const PlantState& s, double torque) const {
    check_state(*sys_, s);
    const double dt = sys_->model.dt;
    const double am = cfg_.alpha_m(), af = cfg_.alpha_f(), g = cfg_.gamma(), b = cfg_.beta();
    const Eigen::VectorXd pred = s.q + dt * s.q_t + dt * dt * (0.5 - b) * s.q_tt;
    Eigen::VectorXd rhs = -am * (sys_->mass_aug * s.q_tt) -
                          sys_->stiff_aug * ((1.0 - af) * pred + af * s.q);
    rhs(sys_->theta_index()) += torque;
    PlantState out;
    out.q_tt = llt_.solve(rhs);
    out.q = pred + b * dt * dt * out.q_tt;
    out.q_t = s.q_t + dt * ((1.0 - g) * s.q_tt + g * out.q_tt);
    out.time = s.time + dt;
    return out;
  }

  const AssembledSystem& system() const { return *sys_; }
  const IntegratorConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<const AssembledSystem> sys_;
  IntegratorConfig cfg_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// One-off step. Prefer GeneralizedAlpha for runs; it factors once.
inline PlantState step(const AssembledSystem& sys, const PlantState& s, double torque,
                       const IntegratorConfig& cfg) {
  GeneralizedAlpha ga(std::make_shared<const AssembledSystem>(sys), cfg);
  return ga.step(s, torque);
}

// Hub torque that is affine in the plant state: tau = cd.q + cv.q_t + c0.
struct AffineFeedback {
  Eigen::VectorXd cd;
  Eigen::VectorXd cv;
  double c0 = 0.0;

  double torque(const Eigen::VectorXd& q, const Eigen::VectorXd& q_t) const {
    return cd.dot(q) + cv.dot(q_t) + c0;
  }
};

// Generalized-alpha with the feedback torque folded into the implicit solve, so the
// law is evaluated at the same generalized midpoint as the elastic forces.
class FeedbackGeneralizedAlpha {
 public:
  FeedbackGeneralizedAlpha(std::shared_ptr<const AssembledSystem> sys, IntegratorConfig cfg,
                           AffineFeedback fb)
      : sys_(std::move(sys)), cfg_(cfg), fb_(std::move(fb)) {
    cfg_.validate();
    const Eigen::Index n = sys_->size();
    if (fb_.cd.size() != n || fb_.cv.size() != n)
      throw DimensionError("FeedbackGeneralizedAlpha: feedback size mismatch");
    const double dt = sys_->model.dt;
    const Eigen::Index it = sys_->theta_index();
    k_eff_ = sys_->stiff_aug;
    k_eff_.row(it) -= fb_.cd.transpose();
    c_ = Eigen::MatrixXd::Zero(n, n);
    c_.row(it) = -fb_.cv.transpose();
    const Eigen::MatrixXd eff =
        (1.0 - cfg_.alpha_m()) * sys_->mass_aug +
        (1.0 - cfg_.alpha_f()) * (cfg_.beta() * dt * dt * k_eff_ + cfg_.gamma() * dt * c_);
    lu_.compute(eff);
    if (!(lu_.rcond() > 1e-14))
      throw NumericError("FeedbackGeneralizedAlpha: singular effective matrix");
  }

  // disturbance is added to the feedback torque; *applied receives the feedback part.
  PlantState step(const PlantState& s, double disturbance, double* applied = nullptr) const {
    check_state(*sys_, s);
    const double dt = sys_->model.dt;
    const double am = cfg_.alpha_m(), af = cfg_.alpha_f(), g = cfg_.gamma(), b = cfg_.beta();
    const Eigen::VectorXd pd = s.q + dt * s.q_t + dt * dt * (0.5 - b) * s.q_tt;
    const Eigen::VectorXd pv = s.q_t + dt * (1.0 - g) * s.q_tt;
    Eigen::VectorXd rhs = -am * (sys_->mass_aug * s.q_tt) - k_eff_ * ((1.0 - af) * pd + af * s.q) -
                          c_ * ((1.0 - af) * pv + af * s.q_t);
    rhs(sys_->theta_index()) += fb_.c0 + disturbance;
    PlantState out;
    out.q_tt = lu_.solve(rhs);
    out.q = pd + b * dt * dt * out.q_tt;
    out.q_t = pv + g * dt * out.q_tt;
    out.time = s.time + dt;
    if (applied)
      *applied = fb_.torque((1.0 - af) * out.q + af * s.q, (1.0 - af) * out.q_t + af * s.q_t);
    return out;
  }

  const AffineFeedback& feedback() const { return fb_; }

 private:
  std::shared_ptr<const AssembledSystem> sys_;
  IntegratorConfig cfg_;
  AffineFeedback fb_;
  Eigen::MatrixXd k_eff_;
  Eigen::MatrixXd c_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

enum class OutputKind { hub_angle, tip_angle };

inline OutputKind parse_output_kind(const std::string& s) {
  if (s == "hub") return OutputKind::hub_angle;
  if (s == "tip") return OutputKind::tip_angle;
  throw ParameterError("unknown output kind '" + s + "' (expected hub or tip)");
}

inline std::string to_string(OutputKind k) { return k == OutputKind::hub_angle ? "hub" : "tip"; }

// Stateful single-input single-output plant used by the controllers.
class BeamPlant {
 public:
  explicit BeamPlant(const BeamModel& model, IntegratorConfig cfg = {},
                     OutputKind output = OutputKind::hub_angle)
      : sys_(std::make_shared<const AssembledSystem>(assemble(model))),
        integ_(sys_, cfg),
        output_(output),
        state_(PlantState::rest(model)) {}

  void step(double torque) { state_ = integ_.step(state_, torque); }

  double output() const {
    return output_ == OutputKind::hub_angle ? hub_output(state_) : tip_output(state_, model());
  }

  const PlantState& state() const { return state_; }
  void set_state(PlantState s) {
    check_state(*sys_, s);
    state_ = std::move(s);
  }
  const BeamModel& model() const { return sys_->model; }
  const IntegratorConfig& integrator_config() const { return integ_.config(); }
  std::shared_ptr<const AssembledSystem> system() const { return sys_; }
  OutputKind output_kind() const { return output_; }
  double time() const { return state_.time; }
  double energy() const { return total_energy(*sys_, state_); }

 private:
  std::shared_ptr<const AssembledSystem> sys_;
  GeneralizedAlpha integ_;
  OutputKind output_;
  PlantState state_;
};

}  // namespace flexsc
