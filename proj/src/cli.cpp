#include "ponsim/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ponsim/config.hpp"
#include "ponsim/report.hpp"

namespace ponsim {

namespace {

RunConfig resolve(const RunSpec& spec) {
  std::vector<std::string> overrides = spec.overrides;
  if (spec.seed) overrides.push_back(fmt::format("seed={}", *spec.seed));
  if (spec.config) return load_config(*spec.config, overrides);
  return parse_config("", overrides);
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", (dir / name).string()));
  return out;
}

void save_resolved(const std::filesystem::path& dir, const RunConfig& cfg) {
  auto out = open_output(dir, "config.resolved.yaml");
  out << to_yaml(cfg);
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("PONSIM_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept "off" when asked for explicitly.
    if (parsed != spdlog::level::off || std::string_view(level) == "off") spdlog::set_level(parsed);
    else spdlog::warn("PONSIM_LOG='{}' is not a log level; using info", level);
  }
}

}  // namespace

int cmd_run(const RunSpec& spec) {
  return guarded([&] {
    const RunConfig cfg = resolve(spec);
    spdlog::info("running {} + {} cycles", cfg.sim.warmup_cycles, cfg.sim.measured_cycles);
    const std::vector<SweepRow> rows{{0.0, run_simulation(cfg.sim)}};
    auto csv = open_output(spec.out_dir, "metrics.csv");
    write_metrics_csv(csv, rows, false);
    auto report = open_output(spec.out_dir, "report.txt");
    write_report(report, cfg, rows);
    save_resolved(spec.out_dir, cfg);
    spdlog::info("energy saving {:.4f}; wrote {}", rows[0].metrics.energy_saving,
                 (spec.out_dir / "metrics.csv").string());
    return kExitOk;
  });
}

int cmd_sweep(const RunSpec& spec) {
  return guarded([&] {
    RunConfig cfg = resolve(spec);
    if (!cfg.sweep.axis) throw ConfigError("sweep.axis", "required by the sweep subcommand");
    spdlog::info("sweeping {} over {} points", to_string(*cfg.sweep.axis), cfg.sweep.values.size());
    const auto rows = sweep(cfg.sim, *cfg.sweep.axis, cfg.sweep.values, spec.parallel, cfg.sweep.seeding);
    auto csv = open_output(spec.out_dir, "sweep.csv");
    write_metrics_csv(csv, rows, true);
    auto report = open_output(spec.out_dir, "report.txt");
    write_report(report, cfg, rows);
    save_resolved(spec.out_dir, cfg);
    spdlog::info("wrote {}", (spec.out_dir / "sweep.csv").string());
    return kExitOk;
  });
}

int cmd_analyze(const RunSpec& spec) {
  return guarded([&] {
    const RunConfig cfg = resolve(spec);
    std::vector<AnalysisRow> rows;
    if (cfg.sweep.axis) {
      for (double v : cfg.sweep.values) {
        rows.push_back(analyze_point(apply_axis(cfg.sim, *cfg.sweep.axis, v), cfg.analysis.q_max));
        rows.back().axis_value = v;
      }
    } else {
      rows.push_back(analyze_point(cfg.sim, cfg.analysis.q_max));
    }
    for (const auto& r : rows) {
      if (r.saturated) spdlog::warn("saturated point{}", r.axis_value ? fmt::format(" at {:.6g}", *r.axis_value) : "");
      if (r.truncation_warning) spdlog::warn("chain truncation at q_max = {} loses probability", cfg.analysis.q_max);
    }
    auto csv = open_output(spec.out_dir, "analysis.csv");
    write_analysis_csv(csv, rows, cfg.sweep.axis.has_value());
    spdlog::info("wrote {}", (spec.out_dir / "analysis.csv").string());
    return kExitOk;
  });
}

int cmd_validate(const RunSpec& spec) {
  return guarded([&] {
    const RunConfig cfg = resolve(spec);
    const SimConfig& s = cfg.sim;
    const auto params =
        model_params_from_loads(s.traffic, s.upstream_bps, s.downstream_bps, s.fsm.cycle_duration, s.propagation(0));
    const auto tx = analyze_tx_budget(params, s.classes, s.pk_variant);
    fmt::print("configuration ok\n");
    fmt::print("  {} ONUs, utilization down {:.4f} up {:.4f}\n", s.num_onus, s.utilization_ds(), s.utilization_us());
    fmt::print("  power ladder ok, class shares {:.3g}/{:.3g}/{:.3g}\n", s.classes[0].share_of_load,
               s.classes[1].share_of_load, s.classes[2].share_of_load);
    if (tx.saturated) fmt::print("  upstream saturated: transmitter sleep disabled\n");
    else if (!tx.budget.sleep_enabled()) fmt::print("  sleep budget {:.6g} s is below one cycle: transmitter sleep disabled\n", tx.budget.tx_sleep);
    else fmt::print("  transmitter sleep budget {:.6g} s = {} cycles\n", tx.budget.tx_sleep, tx.budget.quantized_cycles);
    return kExitOk;
  });
}

int run_cli(int argc, char** argv) {
  configure_logging();
  CLI::App app{"EPON sleep-control simulator and analytical toolkit"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML configuration file");
    sub->add_option("--out", spec.out_dir, "output directory");
    sub->add_option("--set", spec.overrides, "override a key, e.g. --set fsm.rx_sleep_cycles=4")->take_all();
    sub->add_option("--seed", spec.seed, "random seed");
  };
  auto* run = app.add_subcommand("run", "single simulation: metrics.csv and report.txt");
  auto* sw = app.add_subcommand("sweep", "one simulation per sweep value: sweep.csv and report.txt");
  auto* an = app.add_subcommand("analyze", "analytical delay, sleep budget and chain occupancy: analysis.csv");
  auto* va = app.add_subcommand("validate", "check a configuration");
  for (auto* sub : {run, sw, an, va}) add_common(sub);
  sw->add_option("--parallel", spec.parallel, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (!config_path.empty()) spec.config = config_path;

  if (run->parsed()) return cmd_run(spec);
  if (sw->parsed()) return cmd_sweep(spec);
  if (an->parsed()) return cmd_analyze(spec);
  return cmd_validate(spec);
}

}  // namespace ponsim
