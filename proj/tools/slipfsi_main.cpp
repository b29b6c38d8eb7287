// slipfsi: command-line driver.
//
//   slipfsi run          --config FILE [--out-dir DIR] [--hard-invariants] [--seed S]
//   slipfsi verify       --config FILE [--out-dir DIR] [--seed S]
//   slipfsi sweep-domain --config FILE [--out-dir DIR]
//   slipfsi sweep-refine --config FILE [--out-dir DIR]
//
// Exit status: 0 all checks held, 1 an invariant or check failed,
// 2 bad configuration, 3 runtime error.

#include "slipfsi/config.hpp"
#include "slipfsi/drivers.hpp"
#include "slipfsi/output.hpp"
#include "slipfsi/reports.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace slipfsi;

namespace {

struct Common {
  std::string config;
  std::string out_dir = "out";
  bool hard = false;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool with_hard) {
  app->add_option("--config", c.config, "scenario config file")->required()->check(CLI::ExistingFile);
  app->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  if (with_hard) app->add_flag("--hard-invariants", c.hard, "abort at the first invariant breach");
  app->add_option("--seed", c.seed, "override the config seed");
}

Config load(const Common& c) {
  Config cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string path(const Common& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

void print_report(const Report& r) {
  for (const auto& l : r.lines)
    std::cerr << (l.diagnostic ? "[info] " : l.pass ? "[pass] " : "[FAIL] ") << l.name << " = " << format_double(l.value) << ' '
              << l.relation << ' ' << format_double(l.bound) << (l.note.empty() ? "" : "  (" + l.note + ")")
              << '\n';
}

int write_run_outputs(const Common& c, const Scenario& sc, const RunResult& run, const Report& rep) {
  write_file(path(c, "trajectory.csv"), [&](std::ostream& o) { write_trajectory_csv(o, run.trajectory); });
  write_file(path(c, "ledger.csv"), [&](std::ostream& o) { write_ledger_csv(o, run.ledger); });
  write_file(path(c, "density.csv"), [&](std::ostream& o) { write_density_grid(o, run.density_grid); });
  write_file(path(c, "report.txt"), [&](std::ostream& o) { write_report(o, rep); });
  write_file(path(c, "config.resolved"), [&](std::ostream& o) { o << to_text(sc.cfg); });
  print_report(rep);
  return rep.all_pass() ? 0 : 1;
}

int cmd_run(const Common& c, bool verify) {
  const Config cfg = load(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto sc = build_scenario(cfg);
  RunOptions ro;
  ro.hard_invariants = c.hard;
  ro.keep_snapshots = verify;
  ro.density_grid = cfg.output_grid;
  const RunResult run = run_scenario(*sc, ro);
  const Report rep = verify ? verification_report(*sc, run, cfg.seed) : run_report(*sc, run);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "completed " << run.steps << " steps in " << secs << " s\n";
  return write_run_outputs(c, *sc, run, rep);
}

int cmd_sweep_domain(const Common& c) {
  const Config cfg = load(c);
  const DomainSweepReport rep = domain_sweep(cfg, cfg.sweep_R);
  write_file(path(c, "domain_sweep.csv"), [&](std::ostream& o) {
    o << "# slipfsi domain-sweep v1\n";
    o << "R,R_next,max_trajectory_difference\n";
    for (std::size_t k = 0; k < rep.differences.size(); ++k)
      o << format_double(rep.R[k]) << ',' << format_double(rep.R[k + 1]) << ','
        << format_double(rep.differences[k]) << '\n';
  });
  for (std::size_t k = 0; k < rep.R.size(); ++k)
    write_file(path(c, "trajectory_R" + format_double(rep.R[k]) + ".csv"),
               [&](std::ostream& o) { write_trajectory_csv(o, rep.trajectories[k]); });
  std::cerr << "successive differences " << (rep.decreasing ? "decrease" : "do not decrease") << '\n';
  return rep.decreasing ? 0 : 1;
}

int cmd_sweep_refine(const Common& c) {
  const Config cfg = load(c);
  const RefinementReport rep = refinement_sweep(cfg, cfg.sweep_N, cfg.sweep_dt);
  write_file(path(c, "refinement.csv"), [&](std::ostream& o) {
    o << "# slipfsi refinement v1\n";
    o << "N,dt,weak_ratio,weak_max,min_slack,projection_error,trajectory_diff\n";
    for (const auto& e : rep.entries)
      o << e.N << ',' << format_double(e.dt) << ',' << format_double(e.weak_ratio) << ','
        << format_double(e.weak_max) << ',' << format_double(e.min_slack) << ','
        << format_double(e.projection_error) << ',' << format_double(e.trajectory_diff) << '\n';
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin simulator of a self-propelled body in a variable-density fluid with Navier slip"};
  app.require_subcommand(1);
  Common run_o, ver_o, dom_o, ref_o;
  auto* run = app.add_subcommand("run", "run a scenario and write trajectory, ledger, density and report");
  add_common(run, run_o, true);
  auto* ver = app.add_subcommand("verify", "run a scenario and evaluate every verification check");
  add_common(ver, ver_o, true);
  auto* dom = app.add_subcommand("sweep-domain", "repeat a scenario over sweep.R");
  add_common(dom, dom_o, false);
  auto* ref = app.add_subcommand("sweep-refine", "repeat a scenario over sweep.N x sweep.dt");
  add_common(ref, ref_o, false);
  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o, false);
    if (*ver) return cmd_run(ver_o, true);
    if (*dom) return cmd_sweep_domain(dom_o);
    if (*ref) return cmd_sweep_refine(ref_o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::Config) return 2;
    if (e.kind() == ErrorKind::InvariantBreach) return 1;
    return 3;
  }
  return 0;
}
