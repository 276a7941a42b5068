// Command-line entry points: simulate, portrait, verify, baseline.
//
// Exit status: 0 success, 1 run fault or failed check, 2 usage or
// configuration error.
#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pbtrack/checks.hpp"
#include "pbtrack/config.hpp"
#include "pbtrack/csv_io.hpp"
#include "pbtrack/sim.hpp"

namespace pbtrack {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFault = 1;
inline constexpr int kExitConfig = 2;

namespace cli {

struct Loaded {
  RunConfig config;
  Scenario scenario;
  std::filesystem::path out_dir;
};

/// Default portrait grid: four start points across the nominal domain,
/// seven initial speeds in [-1.5, 1.5].
inline std::vector<PortraitSeed> default_seed_grid(const ReferencePath& path) {
  std::vector<PortraitSeed> seeds;
  const auto& d = path.domain();
  for (int i = 0; i < 4; ++i) {
    const double s0 = d.lo + (d.hi - d.lo) * i / 4.0;
    for (double v : {-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5}) seeds.push_back({s0, v});
  }
  return seeds;
}

/// First time after which phi stays at or below `level`; NaN if never.
inline double settling_time(const Trace& trace, double level) {
  double t = NAN;
  for (const auto& smp : trace.samples) {
    if (smp.sync.phi > level) t = NAN;
    else if (std::isnan(t)) t = smp.t;
  }
  return t;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err, const ModelRegistry& registry)
      : out_(out), err_(err), registry_(registry) {}

  /// Reads, validates and assembles the scenario. Returns nullopt after
  /// printing diagnostics.
  std::optional<Loaded> load(const std::string& config_file, const std::string& out_override) {
    std::ifstream in(config_file);
    if (!in) {
      err_ << "error: cannot open config file '" << config_file << "'\n";
      return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto base = std::filesystem::path(config_file).parent_path();
    const ParseResult parsed = parse_config(buf.str(), base);
    if (!parsed.ok()) {
      err_ << "error: invalid configuration '" << config_file << "':\n";
      for (const auto& e : parsed.errors) err_ << "  " << e << '\n';
      return std::nullopt;
    }
    Loaded l;
    l.config = *parsed.config;
    try {
      l.scenario = build_scenario(l.config, registry_, base);
    } catch (const Error& e) {
      err_ << "error: cannot assemble scenario: " << e.what() << '\n';
      return std::nullopt;
    }
    l.out_dir = out_override.empty() ? std::filesystem::path(l.config.output_dir) : std::filesystem::path(out_override);
    return l;
  }

  bool prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      err_ << "error: cannot create output directory '" << dir.string() << "': " << ec.message() << '\n';
      return false;
    }
    return true;
  }

  template <class Fn>
  bool write_file(const std::filesystem::path& file, Fn&& body) {
    std::ofstream o(file);
    if (!o) {
      err_ << "error: cannot write '" << file.string() << "'\n";
      return false;
    }
    body(o);
    return static_cast<bool>(o);
  }

  Report base_report(const Loaded& l) const {
    Report r;
    r.add("config_hash", config_hash(l.config));
    r.add("system", l.scenario.model().name());
    r.add("controller", to_string(l.scenario.controller));
    r.add("step", l.scenario.step);
    r.add("horizon", l.scenario.horizon);
    return r;
  }

  void add_run(Report& r, const Trace& trace, const ReducedModel& rm, const std::string& prefix = "") {
    r.add(prefix + "samples", trace.samples.size());
    r.add(prefix + "complete", trace.complete());
    if (trace.fault) {
      r.add(prefix + "fault_t", trace.fault->t);
      r.add(prefix + "fault", trace.fault->what);
    }
    try {
      add_convergence(r, convergence_metrics(trace, rm), prefix);
    } catch (const Error& e) {
      r.add(prefix + "convergence", std::string("unavailable: ") + e.what());
    }
    if (trace.mode == ControllerMode::theorem1 && trace.samples.size() >= 5) {
      const auto pb = verify_power_balance(trace);
      r.add(prefix + "power_balance_max_residual", pb.max_residual);
      r.add(prefix + "power_balance_tolerance", pb.tolerance);
      r.add(prefix + "power_balance", pb.pass ? "PASS" : "FAIL");
    }
  }

  int simulate(const std::string& config_file, const std::string& out_dir) {
    auto l = load(config_file, out_dir);
    if (!l) return kExitConfig;
    if (!prepare_dir(l->out_dir)) return kExitConfig;
    const Trace trace = integrate(l->scenario);
    Report report = base_report(*l);
    add_run(report, trace, *l->scenario.rm);
    const bool ok = write_file(l->out_dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); }) &&
                    write_file(l->out_dir / "report.txt", [&](std::ostream& o) { report.write(o); }) &&
                    write_file(l->out_dir / "config.cfg", [&](std::ostream& o) { o << serialize_config(l->config); });
    if (!ok) return kExitFault;
    out_ << "wrote " << (l->out_dir / "trace.csv").string() << " (" << trace.samples.size() << " samples), report "
         << (l->out_dir / "report.txt").string() << ", config hash " << config_hash(l->config) << '\n';
    if (trace.fault) {
      err_ << "run fault at t = " << trace.fault->t << ": " << trace.fault->what << '\n';
      return kExitFault;
    }
    return kExitOk;
  }

  int baseline(const std::string& config_file, const std::string& out_dir) {
    auto l = load(config_file, out_dir);
    if (!l) return kExitConfig;
    if (!prepare_dir(l->out_dir)) return kExitConfig;
    Scenario base = l->scenario;
    base.controller = ControllerMode::computed_torque;
    Scenario proposed = l->scenario;
    if (proposed.controller != ControllerMode::theorem1) proposed.controller = ControllerMode::theorem1_pump;
    const std::vector<Scenario> batch{base, proposed};
    const auto traces = run_batch(batch);

    Report report = base_report(*l);
    report.add("comparison", std::string(to_string(proposed.controller)));
    add_run(report, traces[0], *base.rm, "baseline.");
    add_run(report, traces[1], *proposed.rm, "proposed.");
    report.add("baseline.settle_phi_1e-3", settling_time(traces[0], 1e-3));
    report.add("proposed.settle_phi_1e-3", settling_time(traces[1], 1e-3));
    const bool ok =
        write_file(l->out_dir / "baseline_trace.csv", [&](std::ostream& o) { write_trace_csv(o, traces[0]); }) &&
        write_file(l->out_dir / "proposed_trace.csv", [&](std::ostream& o) { write_trace_csv(o, traces[1]); }) &&
        write_file(l->out_dir / "baseline_report.txt", [&](std::ostream& o) { report.write(o); }) &&
        write_file(l->out_dir / "config.cfg", [&](std::ostream& o) { o << serialize_config(l->config); });
    if (!ok) return kExitFault;
    out_ << "baseline settle (phi <= 1e-3): " << settling_time(traces[0], 1e-3) << " s, " << to_string(proposed.controller)
         << ": " << settling_time(traces[1], 1e-3) << " s\n";
    for (const auto& tr : traces) {
      if (tr.fault) {
        err_ << to_string(tr.mode) << " run fault at t = " << tr.fault->t << ": " << tr.fault->what << '\n';
        return kExitFault;
      }
    }
    return kExitOk;
  }

  int portrait(const std::string& config_file, const std::string& out_dir, const std::string& grid_file) {
    auto l = load(config_file, out_dir);
    if (!l) return kExitConfig;
    std::vector<PortraitSeed> seeds;
    if (grid_file.empty()) {
      seeds = default_seed_grid(l->scenario.rm->path());
    } else {
      std::ifstream in(grid_file);
      if (!in) {
        err_ << "error: cannot open seed grid '" << grid_file << "'\n";
        return kExitConfig;
      }
      try {
        seeds = read_seed_grid(in);
      } catch (const Error& e) {
        err_ << "error: " << e.what() << '\n';
        return kExitConfig;
      }
    }
    if (!prepare_dir(l->out_dir)) return kExitConfig;
    const auto runs = zero_dynamics_portrait(*l->scenario.rm, seeds, l->scenario.horizon, l->scenario.step);
    Report report = base_report(*l);
    report.add("seeds", runs.size());
    std::size_t faults = 0;
    for (const auto& run : runs) {
      if (!run.fault) continue;
      ++faults;
      report.add("fault.seed_" + std::to_string(run.seed_id), "t = " + detail::num17(run.fault->t) + ": " + run.fault->what);
    }
    report.add("faulted_seeds", faults);
    const bool ok = write_file(l->out_dir / "portrait.csv", [&](std::ostream& o) { write_portrait_csv(o, runs); }) &&
                    write_file(l->out_dir / "portrait_report.txt", [&](std::ostream& o) { report.write(o); }) &&
                    write_file(l->out_dir / "config.cfg", [&](std::ostream& o) { o << serialize_config(l->config); });
    if (!ok) return kExitFault;
    out_ << "wrote " << (l->out_dir / "portrait.csv").string() << " (" << runs.size() << " seeds, " << faults
         << " faulted)\n";
    return faults == 0 ? kExitOk : kExitFault;
  }

  int verify(const std::string& config_file) {
    auto l = load(config_file, "");
    if (!l) return kExitConfig;
    const Scenario& sc = l->scenario;
    const ReducedModel& rm = *sc.rm;
    const bool spline = rm.path().backing() == PathBacking::spline;
    std::vector<CheckResult> checks;
    auto guarded = [&](const char* name, auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        checks.push_back({name, false, NAN, NAN, e.what()});
      }
    };
    guarded("power-balance", [&] { checks.push_back(check_power_balance(sc)); });
    guarded("reference-potential-identity",
            [&] { checks.push_back(check_reference_potential_identity(rm, 1000, spline ? 1e-4 : 1e-8)); });
    guarded("reference-start", [&] {
      for (auto& c : check_reference_start(sc, l->config.t0, std::min(10.0, sc.horizon))) checks.push_back(c);
    });
    guarded("reference-energy-zero", [&] { checks.push_back(check_reference_energy_zero(rm, 1000)); });
    guarded("structure", [&] {
      for (auto& c : check_structure(rm, 1000, 7)) checks.push_back(c);
    });
    guarded("gradients", [&] {
      for (auto& c : check_gradients(rm, sc.gains, 1000, 11)) checks.push_back(c);
    });
    bool all = true;
    for (const auto& c : checks) {
      all = all && c.pass;
      out_ << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << detail::shortest(c.value) << " (tol "
           << detail::shortest(c.tolerance) << ")";
      if (!c.detail.empty()) out_ << " " << c.detail;
      out_ << '\n';
    }
    out_ << "config_hash = " << config_hash(l->config) << '\n';
    return all ? kExitOk : kExitFault;
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  const ModelRegistry& registry_;
};

}  // namespace cli

/// Runs one subcommand. `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr, const ModelRegistry& registry = {}) {
  CLI::App app{"Energy-based path tracking: simulation and verification", "pbtrack"};
  app.require_subcommand(1);
  std::string config, out_dir, grid;
  bool print_defaults = false;

  auto* sim = app.add_subcommand("simulate", "run the configured scenario; writes trace.csv and report.txt");
  sim->add_option("--config", config, "configuration file");
  sim->add_option("--out", out_dir, "output directory (overrides output.dir)");
  sim->add_flag("--print-defaults", print_defaults, "print the default configuration and exit");

  auto* por = app.add_subcommand("portrait", "zero-dynamics phase portrait; writes portrait.csv");
  por->add_option("--config", config, "configuration file")->required();
  por->add_option("--out", out_dir, "output directory (overrides output.dir)");
  por->add_option("--seed-grid", grid, "CSV of seeds with header s0,sdot0");

  auto* ver = app.add_subcommand("verify", "run the invariant checks and print PASS/FAIL per check");
  ver->add_option("--config", config, "configuration file")->required();

  auto* base = app.add_subcommand("baseline", "computed-torque baseline against the energy-based controller");
  base->add_option("--config", config, "configuration file")->required();
  base->add_option("--out", out_dir, "output directory (overrides output.dir)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  cli::Runner runner(out, err, registry);
  try {
    if (sim->parsed()) {
      if (print_defaults) {
        out << serialize_config(RunConfig{});
        return kExitOk;
      }
      if (config.empty()) {
        err << "error: simulate needs --config <file> (or --print-defaults)\n\n" << sim->help();
        return kExitConfig;
      }
      return runner.simulate(config, out_dir);
    }
    if (por->parsed()) return runner.portrait(config, out_dir, grid);
    if (ver->parsed()) return runner.verify(config);
    if (base->parsed()) return runner.baseline(config, out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::config ? kExitConfig : kExitFault;
  }
  err << app.help();
  return kExitConfig;
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr, const ModelRegistry& registry = {}) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run_command(args, out, err, registry);
}

}  // namespace pbtrack
