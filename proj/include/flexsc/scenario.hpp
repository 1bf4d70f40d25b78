#pragma once

// Experiment harness: configuration, PD data collection, the comparison
// scenarios, metrics and CSV export.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "flexsc/beam_fe.hpp"
#include "flexsc/deepc.hpp"
#include "flexsc/errors.hpp"
#include "flexsc/io.hpp"
#include "flexsc/lyapunov.hpp"
#include "flexsc/trajectory.hpp"

namespace flexsc {

struct Config {
  // plant
  double ei = 120.0;
  double rho = 20.0;
  double length = 5.0;
  double hub_inertia = 400.0;
  double h = 0.25;
  double dt = 0.05;
  double rho_inf = 0.9;
  std::string output = "hub";
  // DeePC
  long t_ini = 20;
  long horizon = 20;
  double q_weight = 1000.0;
  double r_weight = 2.5e-4;
  double lambda_g = 1000.0;
  double lambda_y = 3e5;
  std::string rank_rule = "full";
  std::string input_bounds = "none";
  std::string output_bounds = "none";
  // Lyapunov
  double a1 = 0.0428;
  double a2 = 3000.0;
  double k1 = 0.1;
  double k2 = 2.1e-10;
  double delta = 0.0098;
  // scenarios
  double theta_d = 0.1;
  double duration = 200.0;
  double settle_band = 0.02;
  double noise_std = 0.5;
  double uncertainty_rho_factor = 2.0;
  double impulse = 5.0;
  std::uint64_t seed = 1;
  // data collection
  double collect_duration = 200.0;
  double pd_kp = 2.0;
  double pd_kd = 2500.0;
  double dither = 45.0;
  std::string references = "0,1.05,2.1,-1.05";
  double ref_period = 10.0;
  double collect_noise = 0.0;
  long state_estimate = 82;

  bool operator==(const Config&) const = default;

  BeamModel model() const {
    if (!(h > 0.0) || !(length > 0.0)) throw ParameterError("config: h and length must be > 0");
    const double ne = std::round(length / h);
    if (ne < 2 || std::abs(ne * h - length) > 1e-9 * length)
      throw ParameterError("config: length / h must be an integer >= 2");
    BeamModel m{ei, rho, length, hub_inertia, static_cast<int>(ne), dt};
    m.validate();
    return m;
  }

  IntegratorConfig integrator() const {
    IntegratorConfig c{rho_inf};
    c.validate();
    return c;
  }

  DeePCConfig deepc() const {
    DeePCConfig c;
    c.t_ini = t_ini;
    c.horizon = horizon;
    c.q_weight = q_weight;
    c.r_weight = r_weight;
    c.lambda_g = lambda_g;
    c.lambda_y = lambda_y;
    c.reference = theta_d;
    c.input_bounds = parse_box(input_bounds);
    c.output_bounds = parse_box(output_bounds);
    c.validate();
    return c;
  }

  std::vector<double> reference_list() const {
    std::vector<double> r;
    for (const auto& s : io::split(references, ',')) r.push_back(io::parse_double(s));
    if (r.empty()) throw ParameterError("config: empty reference list");
    return r;
  }

  static std::optional<Box> parse_box(const std::string& s) {
    if (s == "none") return std::nullopt;
    const auto parts = io::split(s, ',');
    if (parts.size() != 2) throw ParseError("bounds must be 'none' or 'lower,upper'");
    return Box{io::parse_double(parts[0]), io::parse_double(parts[1])};
  }
};

namespace detail {

using ConfigField =
    std::variant<double Config::*, long Config::*, std::string Config::*, std::uint64_t Config::*>;

template <class M>
struct member_type;
template <class C, class T>
struct member_type<T C::*> {
  using type = T;
};

struct ConfigKey {
  const char* name;
  ConfigField field;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"ei", &Config::ei},
      {"rho", &Config::rho},
      {"length", &Config::length},
      {"hub_inertia", &Config::hub_inertia},
      {"h", &Config::h},
      {"dt", &Config::dt},
      {"rho_inf", &Config::rho_inf},
      {"output", &Config::output},
      {"t_ini", &Config::t_ini},
      {"horizon", &Config::horizon},
      {"q_weight", &Config::q_weight},
      {"r_weight", &Config::r_weight},
      {"lambda_g", &Config::lambda_g},
      {"lambda_y", &Config::lambda_y},
      {"rank_rule", &Config::rank_rule},
      {"input_bounds", &Config::input_bounds},
      {"output_bounds", &Config::output_bounds},
      {"a1", &Config::a1},
      {"a2", &Config::a2},
      {"k1", &Config::k1},
      {"k2", &Config::k2},
      {"delta", &Config::delta},
      {"theta_d", &Config::theta_d},
      {"duration", &Config::duration},
      {"settle_band", &Config::settle_band},
      {"noise_std", &Config::noise_std},
      {"uncertainty_rho_factor", &Config::uncertainty_rho_factor},
      {"impulse", &Config::impulse},
      {"seed", &Config::seed},
      {"collect_duration", &Config::collect_duration},
      {"pd_kp", &Config::pd_kp},
      {"pd_kd", &Config::pd_kd},
      {"dither", &Config::dither},
      {"references", &Config::references},
      {"ref_period", &Config::ref_period},
      {"collect_noise", &Config::collect_noise},
      {"state_estimate", &Config::state_estimate},
  };
  return keys;
}

}  // namespace detail

// Flat "key = value" text; '#' starts a comment. Unknown keys are errors.
inline Config parse_config(std::istream& is, Config cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = io::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key(io::trim(body.substr(0, eq)));
    const std::string value(io::trim(body.substr(eq + 1)));
    if (key.empty()) throw ParseError("missing key before '='", lineno);
    const auto& keys = detail::config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& k) { return key == k.name; });
    if (it == keys.end()) throw ParseError("unknown key '" + key + "'", lineno);
    std::visit(
        [&](auto member) {
          using T = typename detail::member_type<decltype(member)>::type;
          if constexpr (std::is_same_v<T, double>) {
            cfg.*member = io::parse_double(value, lineno);
          } else if constexpr (std::is_same_v<T, long>) {
            cfg.*member = static_cast<long>(io::parse_int(value, lineno));
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            const long long v = io::parse_int(value, lineno);
            if (v < 0) throw ParseError("key '" + key + "' must be non-negative", lineno);
            cfg.*member = static_cast<std::uint64_t>(v);
          } else {
            if (value.empty()) throw ParseError("key '" + key + "' has an empty value", lineno);
            cfg.*member = value;
          }
        },
        it->field);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(f);
}

inline void write_config(const Config& cfg, std::ostream& os) {
  for (const auto& k : detail::config_keys()) {
    os << k.name << " = ";
    std::visit(
        [&](auto member) {
          using T = typename detail::member_type<decltype(member)>::type;
          if constexpr (std::is_same_v<T, double>) os << io::format_double(cfg.*member);
          else os << cfg.*member;
        },
        k.field);
    os << '\n';
  }
}

inline void save_config(const Config& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_config(cfg, f);
}

// Independent deterministic streams derived from one seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

enum RngStream : std::uint64_t { kCollectionStream = 1, kProcessNoiseStream = 2 };

struct PdGains {
  double kp = 0.0;
  double kd = 0.0;
};

struct CollectionSpec {
  double duration = 200.0;
  PdGains gains;
  double dither = 0.0;                 // uniform in [-dither, dither]
  std::vector<double> references{0.0};
  double ref_period = 10.0;            // seconds per reference
  std::uint64_t seed = 1;
  double process_noise = 0.0;          // unrecorded Gaussian hub torque, std
  Eigen::Index pe_order = 1;           // n_est + L
};

struct CollectionResult {
  Trajectory trajectory;
  PeCheck pe;
  std::vector<std::string> warnings;
};

// PD tracking of a switching reference plus dither; u_k excludes process noise.
inline CollectionResult collect_data(BeamPlant& plant, const CollectionSpec& spec) {
  const double dt = plant.model().dt;
  const long T = std::lround(spec.duration / dt);
  if (T < 1) throw ParameterError("collect_data: duration shorter than one step");
  if (spec.references.empty()) throw ParameterError("collect_data: empty reference list");
  if (!(spec.dither >= 0.0) || !(spec.process_noise >= 0.0))
    throw ParameterError("collect_data: dither and noise must be >= 0");
  const long per = std::max(1L, std::lround(spec.ref_period / dt));

  CollectionResult res;
  if (T < 2 * spec.pe_order - 1)
    res.warnings.push_back("collection length " + std::to_string(T) + " is below the bound " +
                           std::to_string(2 * spec.pe_order - 1) + " for PE order " +
                           std::to_string(spec.pe_order));

  std::mt19937_64 rng = make_rng(spec.seed, kCollectionStream);
  std::uniform_real_distribution<double> dither(-spec.dither, spec.dither);
  std::normal_distribution<double> noise(0.0, spec.process_noise > 0.0 ? spec.process_noise : 1.0);
  Eigen::VectorXd u(T), y(T);
  for (long k = 0; k < T; ++k) {
    const double r = spec.references[static_cast<std::size_t>((k / per) % static_cast<long>(spec.references.size()))];
    const PlantState& s = plant.state();
    double uk = spec.gains.kp * (r - s.theta()) - spec.gains.kd * s.theta_t();
    if (spec.dither > 0.0) uk += dither(rng);
    const double w = spec.process_noise > 0.0 ? noise(rng) : 0.0;
    plant.step(uk + w);
    u(k) = uk;
    y(k) = plant.output();
  }
  res.trajectory = Trajectory::scalar(u, y, dt);
  res.pe = is_persistently_exciting(u, spec.pe_order);
  if (!res.pe)
    throw CollectionError("collected input is not persistently exciting (" + res.pe.message() +
                          "); increase dither or duration");
  return res;
}

inline CollectionSpec collection_spec(const Config& cfg) {
  CollectionSpec s;
  s.duration = cfg.collect_duration;
  s.gains = {cfg.pd_kp, cfg.pd_kd};
  s.dither = cfg.dither;
  s.references = cfg.reference_list();
  s.ref_period = cfg.ref_period;
  s.seed = cfg.seed;
  s.process_noise = cfg.collect_noise;
  s.pe_order = cfg.state_estimate + cfg.t_ini + cfg.horizon;
  return s;
}

// Nominal-plant data collection with the configured schedule.
inline CollectionResult collect_data(const Config& cfg) {
  BeamPlant plant(cfg.model(), cfg.integrator(), parse_output_kind(cfg.output));
  return collect_data(plant, collection_spec(cfg));
}

// First sample time after which |y - theta_d| <= band for the rest of the record.
// Returns 0 if the record never leaves the band, nullopt if it ends outside it.
inline std::optional<double> settling_time_abs(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                                               double theta_d, double band) {
  if (times.size() != y.size()) throw DimensionError("settling_time: times and outputs differ in length");
  if (!(band > 0.0)) throw ParameterError("settling_time: band must be > 0");
  Eigen::Index last = -1;
  for (Eigen::Index k = 0; k < y.size(); ++k)
    if (!(std::abs(y(k) - theta_d) <= band)) last = k;
  if (last < 0) return 0.0;
  if (last + 1 >= y.size()) return std::nullopt;
  return times(last + 1);
}

// Band is band_fraction times the step size |theta_d - y0|.
inline std::optional<double> settling_time(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                                           double theta_d, double band_fraction, double y0 = 0.0) {
  if (!(band_fraction > 0.0)) throw ParameterError("settling_time: band_fraction must be > 0");
  if (theta_d == y0) throw ParameterError("settling_time: zero step size, use settling_time_abs");
  return settling_time_abs(times, y, theta_d, band_fraction * std::abs(theta_d - y0));
}

enum class ScenarioKind { nominal, uncertainty, process_noise, free_vibration, data_collection };
enum class ControllerKind { deepc, lyapunov, pd, none };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::nominal: return "nominal";
    case ScenarioKind::uncertainty: return "uncertainty";
    case ScenarioKind::process_noise: return "process_noise";
    case ScenarioKind::free_vibration: return "free_vibration";
    default: return "data_collection";
  }
}

inline std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::deepc: return "deepc";
    case ControllerKind::lyapunov: return "lyapunov";
    case ControllerKind::pd: return "pd";
    default: return "none";
  }
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
  for (auto k : {ScenarioKind::nominal, ScenarioKind::uncertainty, ScenarioKind::process_noise,
                 ScenarioKind::free_vibration, ScenarioKind::data_collection})
    if (to_string(k) == s) return k;
  throw ParameterError("unknown scenario '" + s + "'");
}

inline ControllerKind parse_controller_kind(const std::string& s) {
  for (auto k : {ControllerKind::deepc, ControllerKind::lyapunov, ControllerKind::pd, ControllerKind::none})
    if (to_string(k) == s) return k;
  throw ParameterError("unknown controller '" + s + "'");
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::nominal;
  ControllerKind controller = ControllerKind::deepc;
  double rho_factor = 1.0;  // executed plant only
  double noise_std = 0.0;
  std::uint64_t seed = 1;
  double theta_d = 0.1;
  double duration = 200.0;

  void validate() const {
    if (!(duration > 0.0)) throw ParameterError("ScenarioSpec: duration must be > 0");
    if (!(noise_std >= 0.0)) throw ParameterError("ScenarioSpec: noise std must be >= 0");
    if (!(rho_factor > 0.0)) throw ParameterError("ScenarioSpec: rho factor must be > 0");
  }
};

inline ScenarioSpec make_spec(ScenarioKind kind, ControllerKind controller, const Config& cfg) {
  ScenarioSpec s;
  s.kind = kind;
  s.controller = controller;
  s.seed = cfg.seed;
  s.theta_d = cfg.theta_d;
  s.duration = cfg.duration;
  if (kind == ScenarioKind::uncertainty) s.rho_factor = cfg.uncertainty_rho_factor;
  if (kind == ScenarioKind::process_noise) s.noise_std = cfg.noise_std;
  if (kind == ScenarioKind::free_vibration) s.controller = ControllerKind::none;
  return s;
}

struct ScenarioResult {
  std::string scenario;
  std::string controller;
  Trajectory trajectory;          // u = controller torque, y = controlled output
  Eigen::VectorXd theta;
  Eigen::VectorXd tip_deflection;
  Eigen::VectorXd stage_cost;
  Eigen::VectorXd energy;
  double accumulated_cost = 0.0;
  std::optional<double> settling_time;
  double peak_torque = 0.0;
  bool completed = true;
  std::string error;
  std::vector<DiagnosticsRow> diagnostics;  // DeePC only
  std::vector<std::string> log;
};

namespace detail {

// Records per-step plant quantities alongside the controller's own bookkeeping.
struct RecordingPlant {
  BeamPlant& plant;
  std::vector<double> theta, tip, energy;

  void step(double torque) {
    plant.step(torque);
    record();
  }
  void record() {
    theta.push_back(plant.state().theta());
    tip.push_back(flexsc::tip_deflection(plant.state()));
    energy.push_back(plant.energy());
  }
  double output() const { return plant.output(); }
  double sample_time() const { return plant.model().dt; }
};

inline Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline DeePCController make_deepc(const Config& cfg, const Trajectory& data, std::vector<std::string>* log = nullptr) {
  const DeePCConfig dc = cfg.deepc();
  const HankelSystem hs = split_past_future(data, dc.t_ini, dc.horizon);
  if (cfg.rank_rule == "none") {
    if (log) log->push_back("deepc data: unreduced Hankel, " + std::to_string(hs.columns()) + " columns");
    return DeePCController(DeePCData::from(hs), dc);
  }
  const ReducedHankel red = svd_reduce(hs, RankRule::parse(cfg.rank_rule));
  if (log)
    log->push_back("deepc data: reduced " + std::to_string(red.h_bar.rows()) + "x" +
                   std::to_string(red.h_bar.cols()) + " from " + std::to_string(hs.columns()) + " columns");
  return DeePCController(DeePCData::from(red), dc);
}

// data must come from the nominal plant; it is required for the DeePC controller.
inline ScenarioResult run_scenario(const ScenarioSpec& spec, const Config& cfg, const Trajectory* data = nullptr) {
  spec.validate();
  const BeamModel nominal = cfg.model();
  BeamModel executed = nominal;
  executed.rho *= spec.rho_factor;

  ScenarioResult res;
  res.scenario = to_string(spec.kind);
  res.controller = to_string(spec.controller);
  res.log.push_back("executed plant rho = " + io::format_double(executed.rho) +
                    ", controller model rho = " + io::format_double(nominal.rho));

  DeePCConfig scoring = cfg.deepc();
  scoring.reference = spec.theta_d;
  const long K = std::lround(spec.duration / nominal.dt);
  if (K < 1) throw ParameterError("run_scenario: duration shorter than one step");

  BeamPlant plant(executed, cfg.integrator(), parse_output_kind(cfg.output));
  detail::RecordingPlant rec{plant, {}, {}, {}};
  std::mt19937_64 rng = make_rng(spec.seed, kProcessNoiseStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise = [&](long) { return spec.noise_std > 0.0 ? spec.noise_std * normal(rng) : 0.0; };

  std::vector<double> us, ys;
  auto finish_step = [&](double u) {
    us.push_back(u);
    ys.push_back(plant.output());
  };

  try {
    switch (spec.controller) {
      case ControllerKind::deepc: {
        if (!data) throw ParameterError("run_scenario: DeePC needs collected data");
        Config c2 = cfg;
        c2.theta_d = spec.theta_d;
        const DeePCController ctrl = make_deepc(c2, *data, &res.log);
        ClosedLoopResult cl = run_closed_loop(rec, ctrl, K, noise);
        res.completed = cl.completed;
        res.error = cl.error;
        if (cl.trajectory.size() > 0) {
          for (Eigen::Index k = 0; k < cl.trajectory.size(); ++k) {
            us.push_back(cl.trajectory.u(0, k));
            ys.push_back(cl.trajectory.y(0, k));
          }
        }
        res.diagnostics = std::move(cl.diagnostics);
        break;
      }
      case ControllerKind::lyapunov: {
        const LyapunovParams p = construct_from_gains(cfg.a1, cfg.a2, cfg.k1, cfg.k2, cfg.delta, nominal);
        res.log.push_back("lyapunov gains from nominal model: a3 = " + io::format_double(p.a3) +
                          ", a4 = " + io::format_double(p.a4) + ", eta = " + io::format_double(p.eta));
        const FeedbackGeneralizedAlpha integ(plant.system(), cfg.integrator(),
                                             lyapunov_feedback(p, nominal, spec.theta_d));
        for (long k = 0; k < K; ++k) {
          double tau = 0.0;
          PlantState next = integ.step(plant.state(), noise(k), &tau);
          if (!next.q.allFinite()) throw NumericError("plant state is not finite");
          plant.set_state(std::move(next));
          rec.record();
          finish_step(tau);
        }
        break;
      }
      case ControllerKind::pd: {
        for (long k = 0; k < K; ++k) {
          const PlantState& s = plant.state();
          const double u = cfg.pd_kp * (spec.theta_d - s.theta()) - cfg.pd_kd * s.theta_t();
          rec.step(u + noise(k));
          finish_step(u);
        }
        break;
      }
      case ControllerKind::none: {
        for (long k = 0; k < K; ++k) {
          const double u = (spec.kind == ScenarioKind::free_vibration && k == 0) ? cfg.impulse : 0.0;
          rec.step(u + noise(k));
          finish_step(u);
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    res.completed = false;
    res.error = e.what();
  }

  const std::size_t n = std::min(us.size(), rec.theta.size());
  us.resize(n);
  ys.resize(n);
  rec.theta.resize(n);
  rec.tip.resize(n);
  rec.energy.resize(n);
  if (n == 0) return res;

  res.trajectory = Trajectory::scalar(detail::to_vec(us), detail::to_vec(ys), nominal.dt);
  res.theta = detail::to_vec(rec.theta);
  res.tip_deflection = detail::to_vec(rec.tip);
  res.energy = detail::to_vec(rec.energy);
  res.stage_cost.resize(static_cast<Eigen::Index>(n));
  Eigen::VectorXd times(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    res.stage_cost(i) = stage_cost(ys[k], us[k], scoring);
    res.accumulated_cost += res.stage_cost(i);
    res.peak_torque = std::max(res.peak_torque, std::abs(us[k]));
    times(i) = static_cast<double>(k + 1) * nominal.dt;
  }
  if (spec.theta_d != 0.0 && spec.kind != ScenarioKind::free_vibration)
    res.settling_time = settling_time(times, res.trajectory.y_scalar(), spec.theta_d, cfg.settle_band);
  return res;
}

// Result CSV; row k holds the torque applied over step k and the plant at its end.
inline void write_result_csv(const ScenarioResult& r, std::ostream& os) {
  os << "k,t,u,y,theta,tip_deflection,stage_cost\n";
  const double dt = r.trajectory.dt;
  for (Eigen::Index k = 0; k < r.trajectory.size(); ++k)
    os << k << ',' << io::format_double(static_cast<double>(k) * dt) << ','
       << io::format_double(r.trajectory.u(0, k)) << ',' << io::format_double(r.trajectory.y(0, k)) << ','
       << io::format_double(r.theta(k)) << ',' << io::format_double(r.tip_deflection(k)) << ','
       << io::format_double(r.stage_cost(k)) << '\n';
}

inline void write_result_csv(const ScenarioResult& r, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_result_csv(r, f);
}

// Reads back the per-step columns written by write_result_csv.
inline ScenarioResult read_result_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || io::trim(line) != "k,t,u,y,theta,tip_deflection,stage_cost")
    throw ParseError("result CSV: unexpected header", 1);
  std::vector<double> t, u, y, th, tip, c;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != 7) throw ParseError("result CSV: wrong column count", lineno);
    if (io::parse_int(cells[0], lineno) != static_cast<long long>(u.size()))
      throw ParseError("result CSV: step index out of sequence", lineno);
    t.push_back(io::parse_double(cells[1], lineno));
    u.push_back(io::parse_double(cells[2], lineno));
    y.push_back(io::parse_double(cells[3], lineno));
    th.push_back(io::parse_double(cells[4], lineno));
    tip.push_back(io::parse_double(cells[5], lineno));
    c.push_back(io::parse_double(cells[6], lineno));
  }
  if (u.empty()) throw ParseError("result CSV: no rows");
  ScenarioResult r;
  r.trajectory = Trajectory::scalar(detail::to_vec(u), detail::to_vec(y), u.size() > 1 ? t[1] - t[0] : 1.0);
  r.theta = detail::to_vec(th);
  r.tip_deflection = detail::to_vec(tip);
  r.stage_cost = detail::to_vec(c);
  r.accumulated_cost = r.stage_cost.sum();
  r.peak_torque = r.trajectory.u.cwiseAbs().maxCoeff();
  return r;
}

inline std::string summary_header() { return "scenario,controller,cost,settling_time,peak_torque"; }

inline std::string summary_row(const ScenarioResult& r) {
  std::ostringstream os;
  os << r.scenario << ',' << r.controller << ',' << io::format_double(r.accumulated_cost) << ','
     << (r.settling_time ? io::format_double(*r.settling_time) : std::string("not_settled")) << ','
     << io::format_double(r.peak_torque);
  return os.str();
}

inline void write_summary_csv(const std::vector<ScenarioResult>& rs, std::ostream& os) {
  os << summary_header() << '\n';
  for (const auto& r : rs) os << summary_row(r) << '\n';
}

inline void write_summary_csv(const std::vector<ScenarioResult>& rs, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_summary_csv(rs, f);
}

// The comparison table: nominal, uncertainty and process noise for DeePC and the
// Lyapunov law. Data is collected once on the nominal plant. Jobs run concurrently;
// each owns its plant and controller, so results do not depend on scheduling.
inline std::vector<ScenarioResult> run_comparison(const Config& cfg, const Trajectory* data = nullptr) {
  std::optional<Trajectory> own;
  if (!data) {
    own = collect_data(cfg).trajectory;
    data = &*own;
  }
  std::vector<std::future<ScenarioResult>> jobs;
  for (auto kind : {ScenarioKind::nominal, ScenarioKind::uncertainty, ScenarioKind::process_noise})
    for (auto ctrl : {ControllerKind::deepc, ControllerKind::lyapunov})
      jobs.push_back(std::async(std::launch::async, [&cfg, data, kind, ctrl] {
        return run_scenario(make_spec(kind, ctrl, cfg), cfg, data);
      }));
  std::vector<ScenarioResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace flexsc
