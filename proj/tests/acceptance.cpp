// Acceptance report: one PASS/FAIL line per primary criterion.
//
// Exit status is 0 when every check ran to completion, so ctest records that the
// report was produced; failing criteria stay visible as FAIL lines. --strict makes
// any FAIL a nonzero exit.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "flexsc/scenario.hpp"
#include "oracles.hpp"

using namespace flexsc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Runner {
  int failed = 0;
  int errored = 0;

  void run(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    bool threw = false;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
      threw = true;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    if (threw) ++errored;
    std::ostringstream t;
    t << std::fixed << std::setprecision(2) << secs << " s / " << budget_s << " s";
    std::cout << (pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " [" << t.str()
              << (in_time ? "" : ", over budget") << "]\n"
              << std::flush;
  }
};

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

Eigen::VectorXd white(std::mt19937_64& rng, Eigen::Index T) {
  std::normal_distribution<double> nd;
  return Eigen::VectorXd::NullaryExpr(T, [&] { return nd(rng); });
}

Trajectory excite(oracle::LtiPlant& p, std::mt19937_64& rng, Eigen::Index T) {
  const Eigen::VectorXd u = white(rng, T);
  Eigen::VectorXd y(T);
  for (Eigen::Index k = 0; k < T; ++k) {
    p.step(u(k));
    y(k) = p.output();
  }
  return Trajectory::scalar(u, y, 1.0);
}

Outcome modal_anchor() {
  const double anchor = 0.34449;
  const double exact = oracle::cantilever_omega1(120.0, 20.0, 5.0);
  BeamModel m20, m40;
  m40.n_elements = 40;
  const double w20 = modal_frequencies(assemble(m20), true).front();
  const double w40 = modal_frequencies(assemble(m40), true).front();
  const double rel = std::abs(w20 - anchor) / anchor;
  const double e20 = std::abs(w20 - exact), e40 = std::abs(w40 - exact);
  return {rel < 5e-3 && e40 < e20, "omega1(20 el) = " + num(w20, 8) + " rad/s, deviation from 0.34449 = " +
                                        num(100 * rel, 3) + "%, error vs exact " + num(e20, 3) + " -> " +
                                        num(e40, 3) + " at 40 el"};
}

Outcome energy_conservation() {
  BeamPlant plant(BeamModel{}, IntegratorConfig{1.0});
  plant.step(5.0);
  const double e0 = plant.energy();
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    plant.step(0.0);
    worst = std::max(worst, std::abs(plant.energy() - e0) / e0);
  }
  return {worst < 1e-3, "rho_inf = 1, 2000 steps after a 5 N*m impulse: E = " + num(e0) +
                            " J, max drift = " + num(100 * worst, 3) + "%"};
}

Outcome fundamental_lemma() {
  std::mt19937_64 rng(2024);
  const Eigen::Index n = 3, L = 6, T = 60;
  double worst_fwd = 0.0, worst_conv = 0.0;
  int pe_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Lti s = oracle::random_lti(rng, n);
    const Eigen::VectorXd u = white(rng, T);
    const Eigen::VectorXd y = s.simulate(white(rng, n), u);
    if (is_persistently_exciting(u, n + L)) ++pe_ok;
    Eigen::MatrixXd H(2 * L, T - L + 1);
    H << build_hankel(u, L), build_hankel(y, L);
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
    const Eigen::VectorXd uf = white(rng, L);
    Eigen::VectorXd w(2 * L);
    w << uf, s.simulate(white(rng, n), uf);
    worst_fwd = std::max(worst_fwd, (H * cod.solve(w) - w).norm() / w.norm());
    const Eigen::VectorXd wg = H * white(rng, H.cols());
    const Eigen::VectorXd x0 = s.observability(L).colPivHouseholderQr().solve(wg.tail(L) - s.toeplitz(L) * wg.head(L));
    worst_conv = std::max(worst_conv, (s.simulate(x0, wg.head(L)) - wg.tail(L)).norm() / wg.tail(L).norm());
  }
  const Eigen::Index bound = 2 * (n + L) - 1;
  int below_rejected = 0, below_total = 0;
  for (Eigen::Index len = n + L; len < bound; ++len, ++below_total)
    if (!is_persistently_exciting(white(rng, len), n + L)) ++below_rejected;
  const bool pass = pe_ok == 20 && worst_fwd < 1e-8 && worst_conv < 1e-8 && below_rejected == below_total;
  return {pass, "20 systems: max residual " + num(worst_fwd, 3) + " (range), " + num(worst_conv, 3) +
                    " (converse); PE rejected " + std::to_string(below_rejected) + "/" +
                    std::to_string(below_total) + " lengths below " + std::to_string(bound)};
}

Outcome deepc_equals_mpc() {
  std::mt19937_64 rng(42);
  oracle::LtiPlant plant{oracle::double_integrator(), Eigen::VectorXd::Zero(2)};
  const Trajectory tr = excite(plant, rng, 80);
  DeePCConfig c;
  c.t_ini = 2;
  c.horizon = 10;
  c.q_weight = 1.0;
  c.r_weight = 0.1;
  c.lambda_g = 0.0;
  c.hard_past_output = true;
  c.reference = 1.0;
  const DeePCController ctrl(DeePCData::from(split_past_future(tr, c.t_ini, c.horizon)), c);
  const oracle::Lti mpc = oracle::measured_form(plant.sys);
  plant.x = Eigen::Vector2d(-0.5, 0.2);
  ControllerState st = ControllerState::zeros(c.t_ini);
  for (int k = 0; k < c.t_ini; ++k) {
    plant.step(0.3);
    st.push(0.3, plant.output());
  }
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double u = ctrl.solve(st).u_star(0);
    worst = std::max(worst, std::abs(u - oracle::condensed_mpc(mpc, plant.x, c.horizon, 1.0, 0.1, 1.0)(0)));
    plant.step(u);
    st.push(u, plant.output());
  }
  return {worst < 1e-6, "double integrator, 50 steps: max |u_deepc - u_mpc| = " + num(worst, 3)};
}

Outcome svd_fidelity(const Trajectory& spacecraft) {
  std::mt19937_64 rng(31);
  oracle::LtiPlant gen{oracle::random_lti(rng, 3), Eigen::VectorXd::Zero(3)};
  const HankelSystem hs = split_past_future(excite(gen, rng, 200), 4, 6);
  const ReducedHankel red = svd_reduce(hs, RankRule::gap());
  DeePCConfig c;
  c.t_ini = 4;
  c.horizon = 6;
  c.q_weight = 10.0;
  c.r_weight = 0.1;
  c.lambda_g = 1.0;
  c.lambda_y = 100.0;
  c.reference = 1.0;
  const DeePCController full(DeePCData::from(hs), c), reduced(DeePCData::from(red), c);
  const Eigen::VectorXd x0 = white(rng, 3);
  oracle::LtiPlant pa{gen.sys, x0}, pb{gen.sys, x0};
  const ClosedLoopResult a = run_closed_loop(pa, full, 50), b = run_closed_loop(pb, reduced, 50);
  const double diff = (a.trajectory.u - b.trajectory.u).cwiseAbs().maxCoeff();

  const HankelSystem shs = split_past_future(spacecraft, 20, 20);
  const ReducedHankel sred = svd_reduce(shs, RankRule::parse(Config{}.rank_rule));
  const Eigen::Index gap_r = choose_rank(sred.singular_values);
  const bool pass = a.completed && b.completed && red.rank == 13 && diff < 1e-6 && sred.h_bar.rows() == 80 &&
                    sred.h_bar.cols() == 80;
  return {pass, "LTI: r = " + std::to_string(red.rank) + " of " + std::to_string(hs.columns()) +
                    " columns, max applied-input gap = " + num(diff, 3) + "; spacecraft: " +
                    std::to_string(shs.stacked().rows()) + "x" + std::to_string(shs.columns()) + " -> " +
                    std::to_string(sred.h_bar.rows()) + "x" + std::to_string(sred.h_bar.cols()) + " (rule '" +
                    Config{}.rank_rule + "'; largest-gap rule would pick r = " + std::to_string(gap_r) + ")"};
}

const ScenarioResult& find(const std::vector<ScenarioResult>& rs, const std::string& sc, const std::string& ctrl) {
  for (const auto& r : rs)
    if (r.scenario == sc && r.controller == ctrl) return r;
  throw std::runtime_error("missing result " + sc + "/" + ctrl);
}

std::string settle_str(const std::optional<double>& t) { return t ? num(*t, 5) + " s" : "not settled"; }

Outcome closed_loop_trends(const std::vector<ScenarioResult>& rs) {
  const auto& dn = find(rs, "nominal", "deepc");
  const auto& du = find(rs, "uncertainty", "deepc");
  const auto& dp = find(rs, "process_noise", "deepc");
  const auto& ln = find(rs, "nominal", "lyapunov");
  const auto& lu = find(rs, "uncertainty", "lyapunov");
  const auto& lp = find(rs, "process_noise", "lyapunov");
  for (const auto* r : {&dn, &du, &dp, &ln, &lu, &lp})
    if (!r->completed) return {false, r->scenario + "/" + r->controller + " stopped early: " + r->error};

  const bool a = dn.settling_time && ln.settling_time;
  const bool b = dn.accumulated_cost < ln.accumulated_cost && du.accumulated_cost < lu.accumulated_cost;
  bool c = false;
  std::string c_detail = "Lyapunov unsettled";
  if (ln.settling_time && lu.settling_time && dn.settling_time && du.settling_time) {
    const double lyap_growth = *lu.settling_time / *ln.settling_time - 1.0;
    const double deepc_change = std::abs(*du.settling_time / *dn.settling_time - 1.0);
    c = lyap_growth >= 0.25 && deepc_change <= 0.10;
    c_detail = "Lyapunov +" + num(100 * lyap_growth, 3) + "%, DeePC " + num(100 * deepc_change, 3) + "%";
  } else if (dn.settling_time && du.settling_time) {
    c_detail += ", DeePC " + num(100 * (*du.settling_time / *dn.settling_time - 1.0), 3) + "%";
  }
  const double dd = std::abs(dp.accumulated_cost / dn.accumulated_cost - 1.0);
  const double dl = std::abs(lp.accumulated_cost / ln.accumulated_cost - 1.0);
  const bool d = dd <= 0.05 && dl <= 0.05;

  std::string s;
  s += std::string("(a) ") + (a ? "ok" : "no") + ": settling DeePC " + settle_str(dn.settling_time) + ", Lyapunov " +
       settle_str(ln.settling_time) + "; ";
  s += std::string("(b) ") + (b ? "ok" : "no") + ": cost DeePC " + num(dn.accumulated_cost, 5) + "/" +
       num(du.accumulated_cost, 5) + " vs Lyapunov " + num(ln.accumulated_cost, 5) + "/" +
       num(lu.accumulated_cost, 5) + "; ";
  s += std::string("(c) ") + (c ? "ok" : "no") + ": uncertainty settling DeePC " + settle_str(du.settling_time) +
       ", Lyapunov " + settle_str(lu.settling_time) + " (" + c_detail + "); ";
  s += std::string("(d) ") + (d ? "ok" : "no") + ": noise/nominal cost change DeePC " + num(100 * dd, 3) +
       "%, Lyapunov " + num(100 * dl, 3) + "%";
  return {a && b && c && d, s};
}

Outcome lyapunov_feasibility() {
  const BeamModel m;
  const Config cfg;
  const LyapunovParams p = construct_from_gains(cfg.a1, cfg.a2, cfg.k1, cfg.k2, cfg.delta, m);
  const ConstraintReport rep = check_constraints(p, m);
  double min_strict = std::numeric_limits<double>::infinity();
  int passed = 0;
  for (const auto& c : rep.checks) {
    if (c.passed) ++passed;
    if (c.strict) min_strict = std::min(min_strict, c.margin);
  }
  const double rest = control_torque({0, 0, 0, 0}, p, m);
  const bool pass = rep.all_passed() && min_strict > 0.0 && rest == 0.0 && std::abs(p.a1 - cfg.a1) < 1e-15 &&
                    std::abs(p.k2 - cfg.k2) < 1e-24;
  return {pass, std::to_string(passed) + "/8 inequalities hold (smallest strict margin " + num(min_strict, 3) +
                    "), a3 = " + num(p.a3, 4) + ", a4 = " + num(p.a4, 4) + ", eta = " + num(p.eta) +
                    ", rest torque = " + num(rest)};
}

Outcome determinism(const Config& cfg, const Trajectory& data, const std::string& first) {
  std::ostringstream again;
  write_summary_csv(run_comparison(cfg, &data), again);
  Config fresh = cfg;
  std::ostringstream recollected;
  write_summary_csv(run_comparison(fresh), recollected);
  const bool pass = again.str() == first && recollected.str() == first;
  return {pass, std::string("summary CSV rerun ") + (again.str() == first ? "identical" : "differs") +
                    ", with re-collected data " + (recollected.str() == first ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;

  Runner r;
  r.run("FE modal anchor", 1.0, modal_anchor);
  r.run("Energy conservation", 1.0, energy_conservation);
  r.run("Fundamental lemma suite", 5.0, fundamental_lemma);
  r.run("DeePC = MPC oracle", 5.0, deepc_equals_mpc);

  const Config cfg;
  const Trajectory data = collect_data(cfg).trajectory;
  r.run("SVD-reduction fidelity", 10.0, [&] { return svd_fidelity(data); });

  std::vector<ScenarioResult> results;
  std::string summary;
  r.run("Closed-loop trends", 180.0, [&] {
    results = run_comparison(cfg, &data);
    std::ostringstream os;
    write_summary_csv(results, os);
    summary = os.str();
    return closed_loop_trends(results);
  });
  r.run("Lyapunov feasibility", 1.0, lyapunov_feasibility);
  r.run("Determinism", 180.0, [&] { return determinism(cfg, data, summary); });

  std::cout << (r.failed == 0 ? "all criteria passed" : std::to_string(r.failed) + " criteria failed") << '\n';
  if (r.errored > 0) return 1;
  return strict && r.failed > 0 ? 1 : 0;
}
