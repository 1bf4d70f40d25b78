// Command-line front end: data collection, single scenarios, modal report and the
// controller comparison table.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "flexsc/scenario.hpp"

namespace {

void print_table(const std::vector<flexsc::ScenarioResult>& rs, std::ostream& os) {
  os << std::left << std::setw(16) << "scenario" << std::setw(10) << "controller" << std::right
     << std::setw(12) << "cost" << std::setw(14) << "settling(s)" << std::setw(14) << "peak(N*m)" << '\n';
  for (const auto& r : rs) {
    os << std::left << std::setw(16) << r.scenario << std::setw(10) << r.controller << std::right << std::fixed
       << std::setprecision(1) << std::setw(12) << r.accumulated_cost << std::setw(14)
       << (r.settling_time ? std::to_string(*r.settling_time).substr(0, 6) : std::string("-"))
       << std::setprecision(3) << std::setw(14) << r.peak_torque << '\n';
    os.unsetf(std::ios::floatfield);
    if (!r.completed) os << "  run stopped early: " << r.error << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hub-beam simulator with DeePC and Lyapunov boundary control"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the configured seed");

  auto* collect = app.add_subcommand("collect", "PD data collection on the nominal plant");
  std::string collect_out = "trajectory.csv";
  collect->add_option("-o,--output", collect_out, "trajectory CSV (t,u,y)");

  auto* run = app.add_subcommand("run", "run one scenario");
  std::string scenario, controller = "deepc", data_path, result_out = "result.csv", summary_out, diag_out;
  run->add_option("scenario", scenario, "nominal | uncertainty | process_noise | free_vibration")->required();
  run->add_option("--controller", controller, "deepc | lyapunov | pd | none");
  run->add_option("--data", data_path, "collected trajectory CSV (default: collect now)");
  run->add_option("-o,--output", result_out, "result CSV");
  run->add_option("--summary", summary_out, "summary CSV");
  run->add_option("--diagnostics", diag_out, "DeePC per-step diagnostics CSV");

  auto* modal = app.add_subcommand("modal", "natural frequencies of the FE model");
  bool lock_hub = false;
  int count = 6;
  modal->add_flag("--lock-hub", lock_hub, "clamp the hub (cantilever spectrum)");
  modal->add_option("-n,--count", count, "number of frequencies")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "DeePC vs Lyapunov across the three scenarios");
  std::string cmp_data, cmp_summary = "summary.csv", cmp_dir;
  compare->add_option("--data", cmp_data, "collected trajectory CSV (default: collect now)");
  compare->add_option("--summary", cmp_summary, "summary CSV");
  compare->add_option("--out-dir", cmp_dir, "directory for per-run result CSVs");

  auto* show = app.add_subcommand("config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    flexsc::Config cfg = config_path.empty() ? flexsc::Config{} : flexsc::load_config(config_path);
    if (seed) cfg.seed = *seed;

    if (*show) {
      flexsc::write_config(cfg, std::cout);
    } else if (*collect) {
      const auto res = flexsc::collect_data(cfg);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      flexsc::write_csv(res.trajectory, collect_out);
      std::cout << "wrote " << res.trajectory.size() << " samples to " << collect_out << " (" << res.pe.message()
                << ")\n";
    } else if (*run) {
      const auto kind = flexsc::parse_scenario_kind(scenario);
      const auto spec = flexsc::make_spec(kind, flexsc::parse_controller_kind(controller), cfg);
      std::optional<flexsc::Trajectory> data;
      if (spec.controller == flexsc::ControllerKind::deepc)
        data = data_path.empty() ? flexsc::collect_data(cfg).trajectory : flexsc::read_csv(data_path);
      const auto r = flexsc::run_scenario(spec, cfg, data ? &*data : nullptr);
      flexsc::write_result_csv(r, result_out);
      if (!summary_out.empty()) flexsc::write_summary_csv({r}, summary_out);
      if (!diag_out.empty()) flexsc::write_diagnostics_csv(r.diagnostics, diag_out);
      print_table({r}, std::cout);
      return r.completed ? 0 : 2;
    } else if (*modal) {
      const auto sys = flexsc::assemble(cfg.model());
      const auto w = flexsc::modal_frequencies(sys, lock_hub);
      std::cout << (lock_hub ? "locked hub" : "free hub") << ", " << cfg.model().n_elements << " elements\n";
      for (int i = 0; i < count && i < static_cast<int>(w.size()); ++i)
        std::cout << "  omega_" << i + 1 << " = " << std::setprecision(8) << w[i] << " rad/s\n";
    } else if (*compare) {
      std::optional<flexsc::Trajectory> data;
      if (!cmp_data.empty()) data = flexsc::read_csv(cmp_data);
      const auto rs = flexsc::run_comparison(cfg, data ? &*data : nullptr);
      flexsc::write_summary_csv(rs, cmp_summary);
      if (!cmp_dir.empty()) {
        std::filesystem::create_directories(cmp_dir);
        for (const auto& r : rs)
          flexsc::write_result_csv(r, (std::filesystem::path(cmp_dir) / (r.scenario + "_" + r.controller + ".csv")).string());
      }
      print_table(rs, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
