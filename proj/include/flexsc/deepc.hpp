#pragma once

// Regularized DeePC over a (possibly SVD-reduced) data matrix. With sigma_y
// eliminated the problem is a strictly convex quadratic in g:
//   Q|Yf g - y_r|^2 + R|Uf g|^2 + lambda_y|Yp g - y_ini|^2 + lambda_g|g|^2,  Up g = u_ini.
// Its KKT right-hand side is linear in (u_ini, y_ini, y_r), so the unconstrained
// case is precomputed as one linear map and each solve is a matrix-vector product.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flexsc/errors.hpp"
#include "flexsc/io.hpp"
#include "flexsc/qp.hpp"
#include "flexsc/trajectory.hpp"

namespace flexsc {

struct Box {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct DeePCConfig {
  Eigen::Index t_ini = 20;
  Eigen::Index horizon = 20;
  double q_weight = 1000.0;
  double r_weight = 2.5e-4;
  double lambda_g = 1000.0;
  double lambda_y = 3e5;
  std::optional<Box> input_bounds;
  std::optional<Box> output_bounds;
  double reference = 0.1;
  // Enforce Yp g = y_ini exactly instead of penalizing the slack.
  bool hard_past_output = false;

  bool bounded() const { return input_bounds.has_value() || output_bounds.has_value(); }

  void validate() const {
    if (t_ini < 1) throw ParameterError("DeePCConfig: t_ini must be >= 1");
    if (horizon < 1) throw ParameterError("DeePCConfig: horizon must be >= 1");
    if (!(q_weight >= 0.0)) throw ParameterError("DeePCConfig: Q must be >= 0");
    if (!(r_weight > 0.0)) throw ParameterError("DeePCConfig: R must be > 0");
    if (!(lambda_g >= 0.0)) throw ParameterError("DeePCConfig: lambda_g must be >= 0");
    if (lambda_g == 0.0 && bounded())
      throw ParameterError("DeePCConfig: box constraints need lambda_g > 0");
    if (!hard_past_output && !(lambda_y > 0.0)) throw ParameterError("DeePCConfig: lambda_y must be > 0");
    for (const auto* b : {&input_bounds, &output_bounds})
      if (*b && !((*b)->lower <= (*b)->upper)) throw ParameterError("DeePCConfig: bound lower > upper");
    if (!std::isfinite(reference)) throw ParameterError("DeePCConfig: reference must be finite");
  }
};

// Row blocks of the data matrix the optimizer combines; built from either form.
struct DeePCData {
  Eigen::MatrixXd up, uf, yp, yf;
  Eigen::Index t_ini = 0;
  Eigen::Index horizon = 0;
  Eigen::Index m = 1;
  Eigen::Index p = 1;

  static DeePCData from(const HankelSystem& hs) {
    return {hs.up, hs.uf, hs.yp, hs.yf, hs.t_ini, hs.horizon, hs.m, hs.p};
  }
  static DeePCData from(const ReducedHankel& red) {
    DeePCData d;
    d.t_ini = red.t_ini;
    d.horizon = red.horizon;
    d.m = red.m;
    d.p = red.p;
    const Eigen::Index nup = red.t_ini * red.m, nuf = red.horizon * red.m, nyp = red.t_ini * red.p,
                       nyf = red.horizon * red.p;
    if (red.h_bar.rows() != nup + nuf + nyp + nyf) throw DimensionError("DeePCData: reduced row count");
    d.up = red.h_bar.topRows(nup);
    d.uf = red.h_bar.middleRows(nup, nuf);
    d.yp = red.h_bar.middleRows(nup + nuf, nyp);
    d.yf = red.h_bar.bottomRows(nyf);
    return d;
  }
  Eigen::Index columns() const { return uf.cols(); }
};

struct ControllerState {
  Eigen::VectorXd u_ini;  // last t_ini inputs, oldest first
  Eigen::VectorXd y_ini;  // last t_ini outputs, oldest first

  static ControllerState zeros(Eigen::Index t_ini, Eigen::Index m = 1, Eigen::Index p = 1) {
    return {Eigen::VectorXd::Zero(t_ini * m), Eigen::VectorXd::Zero(t_ini * p)};
  }
  void push(const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
    shift(u_ini, u);
    shift(y_ini, y);
  }
  void push(double u, double y) { push(Eigen::VectorXd::Constant(1, u), Eigen::VectorXd::Constant(1, y)); }

 private:
  static void shift(Eigen::VectorXd& buf, const Eigen::VectorXd& v) {
    const Eigen::Index k = v.size();
    if (k > buf.size() || buf.size() % k != 0) throw DimensionError("ControllerState: sample size mismatch");
    const Eigen::Index keep = buf.size() - k;
    buf.head(keep) = buf.tail(keep).eval();
    buf.tail(k) = v;
  }
};

struct DeePCSolution {
  Eigen::VectorXd g;
  Eigen::VectorXd u_star;
  Eigen::VectorXd y_star;
  Eigen::VectorXd sigma_y;
  double objective = 0.0;
  int iterations = 0;  // active-set iterations, 0 in closed-form mode
};

inline double stage_cost(double y, double u, const DeePCConfig& cfg) {
  const double e = y - cfg.reference;
  return cfg.q_weight * e * e + cfg.r_weight * u * u;
}

class DeePCController {
 public:
  DeePCController(DeePCData data, DeePCConfig cfg) : d_(std::move(data)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (d_.t_ini != cfg_.t_ini || d_.horizon != cfg_.horizon)
      throw DimensionError("DeePCController: data t_ini/horizon differ from config");
    const Eigen::Index n = d_.columns();
    if (d_.up.cols() != n || d_.yp.cols() != n || d_.yf.cols() != n)
      throw DimensionError("DeePCController: data blocks have different column counts");
    const Eigen::Index nu = d_.t_ini * d_.m, ny = d_.t_ini * d_.p, nf = d_.horizon * d_.p;
    if (d_.up.rows() != nu || d_.yp.rows() != ny || d_.yf.rows() != nf || d_.uf.rows() != d_.horizon * d_.m)
      throw DimensionError("DeePCController: data block row counts inconsistent");

    const double Q = cfg_.q_weight, R = cfg_.r_weight, ly = cfg_.lambda_y, lg = cfg_.lambda_g;
    H_ = 2.0 * (Q * d_.yf.transpose() * d_.yf + R * d_.uf.transpose() * d_.uf);
    if (!cfg_.hard_past_output) H_ += 2.0 * ly * d_.yp.transpose() * d_.yp;
    H_.diagonal().array() += 2.0 * lg;

    const Eigen::Index ne = cfg_.hard_past_output ? nu + ny : nu;
    Aeq_.resize(ne, n);
    if (cfg_.hard_past_output) Aeq_ << d_.up, d_.yp;
    else Aeq_ = d_.up;

    // Parameter vector pi = (u_ini, y_ini, y_r); gradient term -f = Fg * pi.
    const Eigen::Index np = nu + ny + nf;
    Fg_ = Eigen::MatrixXd::Zero(n, np);
    if (!cfg_.hard_past_output) Fg_.middleCols(nu, ny) = 2.0 * ly * d_.yp.transpose();
    Fg_.rightCols(nf) = 2.0 * Q * d_.yf.transpose();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + ne, np);
    B.topRows(n) = Fg_;
    B.bottomLeftCorner(ne, ne).setIdentity();
    beq_sel_ = B.bottomRows(ne);

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + ne, n + ne);
    K.topLeftCorner(n, n) = H_;
    K.topRightCorner(n, ne) = Aeq_.transpose();
    K.bottomLeftCorner(ne, n) = Aeq_;
    if (lg > 0.0) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
      if (!(lu.rcond() > 1e-13))
        throw RankError("DeePC: KKT matrix is singular; data is not persistently exciting");
      map_ = lu.solve(B);
    } else {
      // Singular Hessian: minimum-norm solution of the consistent KKT system.
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
      map_ = cod.solve(B);
    }
    map_g_ = map_.topRows(n);
  }

  Eigen::VectorXd parameters(const ControllerState& s) const {
    const Eigen::Index nu = d_.t_ini * d_.m, ny = d_.t_ini * d_.p, nf = d_.horizon * d_.p;
    if (s.u_ini.size() != nu || s.y_ini.size() != ny) throw DimensionError("DeePC: controller state size");
    Eigen::VectorXd pi(nu + ny + nf);
    pi << s.u_ini, s.y_ini, Eigen::VectorXd::Constant(nf, cfg_.reference);
    return pi;
  }

  DeePCSolution solve(const ControllerState& s) const {
    const Eigen::VectorXd pi = parameters(s);
    DeePCSolution sol;
    if (!cfg_.bounded()) {
      sol.g = map_g_ * pi;
    } else {
      QpProblem qp;
      qp.H = H_;
      qp.f = -Fg_ * pi;
      qp.Aeq = Aeq_;
      qp.beq = beq_sel_ * pi;
      build_box(qp);
      const QpResult r = solve_qp(qp, 100);
      sol.g = r.x;
      sol.iterations = r.iterations;
    }
    sol.u_star = d_.uf * sol.g;
    sol.y_star = d_.yf * sol.g;
    sol.sigma_y = cfg_.hard_past_output ? Eigen::VectorXd::Zero(s.y_ini.size()) : Eigen::VectorXd(d_.yp * sol.g - s.y_ini);
    const Eigen::VectorXd ey = sol.y_star.array() - cfg_.reference;
    sol.objective = cfg_.q_weight * ey.squaredNorm() + cfg_.r_weight * sol.u_star.squaredNorm() +
                    (cfg_.hard_past_output ? 0.0 : cfg_.lambda_y * sol.sigma_y.squaredNorm()) +
                    cfg_.lambda_g * sol.g.squaredNorm();
    return sol;
  }

  const DeePCConfig& config() const { return cfg_; }
  const DeePCData& data() const { return d_; }

 private:
  void build_box(QpProblem& qp) const {
    const Eigen::Index n = d_.columns();
    std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
    auto add = [&](const Eigen::MatrixXd& blk, const std::optional<Box>& b) {
      if (!b) return;
      for (Eigen::Index i = 0; i < blk.rows(); ++i) {
        if (std::isfinite(b->upper)) rows.emplace_back(blk.row(i), b->upper);
        if (std::isfinite(b->lower)) rows.emplace_back(-blk.row(i), -b->lower);
      }
    };
    add(d_.uf, cfg_.input_bounds);
    add(d_.yf, cfg_.output_bounds);
    qp.Ain.resize(static_cast<Eigen::Index>(rows.size()), n);
    qp.bin.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      qp.Ain.row(static_cast<Eigen::Index>(i)) = rows[i].first;
      qp.bin(static_cast<Eigen::Index>(i)) = rows[i].second;
    }
  }

  DeePCData d_;
  DeePCConfig cfg_;
  Eigen::MatrixXd H_, Aeq_, Fg_, beq_sel_, map_, map_g_;
};

struct DiagnosticsRow {
  long k = 0;
  double t = 0.0;
  double u_applied = 0.0;
  double y_measured = 0.0;
  double objective = 0.0;  // NaN during the zero-input warmup
  double slack_norm = 0.0;
  double g_norm = 0.0;
  double stage_cost = 0.0;
};

struct ClosedLoopResult {
  Trajectory trajectory;
  std::vector<DiagnosticsRow> diagnostics;
  double accumulated_cost = 0.0;
  bool completed = true;
  std::string error;  // set when the run stopped early; trajectory holds the steps done
};

using Disturbance = std::function<double(long k)>;
using StateObserver = std::function<void(long k, const ControllerState&)>;

// Receding-horizon loop. The first t_ini steps apply zero torque while the past
// window fills; afterwards the first optimal input is applied each step.
// Plant needs step(double), output() and sample_time().
template <class Plant>
ClosedLoopResult run_closed_loop(Plant& plant, const DeePCController& ctrl, long k_end,
                                 const Disturbance& disturbance = {}, const StateObserver& observer = {}) {
  const DeePCConfig& cfg = ctrl.config();
  const double dt = plant.sample_time();
  ControllerState state = ControllerState::zeros(cfg.t_ini);
  ClosedLoopResult res;
  std::vector<double> us, ys;
  us.reserve(static_cast<std::size_t>(k_end));
  ys.reserve(static_cast<std::size_t>(k_end));
  for (long k = 0; k < k_end; ++k) {
    DiagnosticsRow row;
    row.k = k;
    row.t = static_cast<double>(k) * dt;
    try {
      double u = 0.0;
      if (k < cfg.t_ini) {
        row.objective = std::nan("");
      } else {
        const DeePCSolution sol = ctrl.solve(state);
        u = sol.u_star(0);
        row.objective = sol.objective;
        row.slack_norm = sol.sigma_y.norm();
        row.g_norm = sol.g.norm();
      }
      const double w = disturbance ? disturbance(k) : 0.0;
      plant.step(u + w);
      const double y = plant.output();
      if (!std::isfinite(y)) throw NumericError("plant output is not finite");
      row.u_applied = u;
      row.y_measured = y;
      row.stage_cost = stage_cost(y, u, cfg);
      state.push(u, y);
    } catch (const std::exception& e) {
      res.completed = false;
      res.error = e.what();
      break;
    }
    if (observer) observer(k, state);
    res.accumulated_cost += row.stage_cost;
    us.push_back(row.u_applied);
    ys.push_back(row.y_measured);
    res.diagnostics.push_back(row);
  }
  if (!us.empty())
    res.trajectory = Trajectory::scalar(Eigen::Map<Eigen::VectorXd>(us.data(), static_cast<Eigen::Index>(us.size())),
                                        Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())), dt);
  return res;
}

inline void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, std::ostream& os) {
  os << "k,t,u_applied,y_measured,objective,slack_norm,g_norm\n";
  for (const auto& r : rows)
    os << r.k << ',' << io::format_double(r.t) << ',' << io::format_double(r.u_applied) << ','
       << io::format_double(r.y_measured) << ',' << io::format_double(r.objective) << ','
       << io::format_double(r.slack_norm) << ',' << io::format_double(r.g_norm) << '\n';
}

inline void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_diagnostics_csv(rows, f);
}

}  // namespace flexsc
