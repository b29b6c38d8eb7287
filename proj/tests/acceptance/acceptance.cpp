// Acceptance suite: one status line per criterion, exit status 1 if any fails.
// Usage: slipfsi_acceptance [criterion numbers...]

#include "slipfsi/bodyframe.hpp"
#include "slipfsi/config.hpp"
#include "slipfsi/drivers.hpp"
#include "slipfsi/galerkin.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/reports.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace slipfsi;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

Config scenario_config(const std::string& name, const std::string& extra = "") {
  const std::string path = std::string(SLIPFSI_SOURCE_DIR) + "/configs/" + name + ".cfg";
  Config c = load_config(path);
  if (extra.empty()) return c;
  // overrides go through the parser so they are validated like any config
  std::string text = to_text(c);
  std::istringstream in(extra);
  std::string line;
  while (std::getline(in, line)) {
    const std::string key = line.substr(0, line.find('='));
    const std::string k = key.substr(0, key.find_last_not_of(' ') + 1);
    const auto at = text.find("\n" + k + " =");
    if (at == std::string::npos) continue;
    const auto end = text.find('\n', at + 1);
    text.erase(at + 1, end - at - 1);
    text.insert(at + 1, line);
  }
  return parse_config(text, name);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Runs {
  std::map<std::string, std::unique_ptr<Scenario>> scenarios;
  std::map<std::string, RunResult> results;
  std::map<std::string, double> seconds;

  const RunResult& get(const std::string& name, bool snapshots = false) {
    if (!results.count(name)) {
      scenarios[name] = build_scenario(scenario_config(name));
      RunOptions o;
      o.keep_snapshots = snapshots;
      const auto t0 = std::chrono::steady_clock::now();
      results[name] = run_scenario(*scenarios[name], o);
      seconds[name] = seconds_since(t0);
    }
    return results[name];
  }
  const Scenario& scenario(const std::string& name) { return *scenarios.at(name); }
};

Outcome energy_inequality(Runs& runs) {
  Outcome o{true, ""};
  for (const std::string name : {"swirl", "squirmer"}) {
    const RunResult& r = runs.get(name);
    const double E0 = r.ledger.E0;
    // per-step slack: change of the cumulative slack over one step
    double worst = std::numeric_limits<double>::infinity(), prev = 0.0;
    for (const auto& row : r.ledger.rows) {
      worst = std::min(worst, row.slack - prev);
      prev = row.slack;
    }
    const double fin = final_inequality_defect(r.ledger);
    const double secs = runs.seconds[name];
    const bool ok = worst >= -1e-8 * (1.0 + E0) && fin <= 1e-6 && secs < 300.0;
    o.pass = o.pass && ok;
    o.detail += name + ": min step slack " + fmt(worst) + ", final defect " + fmt(fin) + ", " + fmt(secs) + " s; ";
  }
  return o;
}

Outcome zero_data(Runs&) {
  const auto sc = build_scenario(scenario_config("zero"));
  RunOptions o;
  o.steps = 200;
  double worst = 0.0;
  o.on_step = [&](int, const GalerkinStepper& st, const StepDiagnostics&) {
    worst = std::max(worst, st.state().alpha.cwiseAbs().maxCoeff());
    worst = std::max(worst, st.state().pose.h.norm());
    worst = std::max(worst, (st.state().pose.Q - Mat3::Identity()).cwiseAbs().maxCoeff());
  };
  const RunResult r = run_scenario(*sc, o);
  const LedgerRow& last = r.ledger.rows.back();
  worst = std::max({worst, std::abs(last.E_fluid), std::abs(last.E_body), std::abs(last.D_visc),
                    std::abs(last.D_slip), std::abs(last.W_budget)});
  return {worst == 0.0 && r.steps == 200, "200 steps, largest |value| " + fmt(worst)};
}

Outcome two_layer_bounds(Runs& runs) {
  const RunResult& r = runs.get("two_layer");
  double lo = r.final_density.values.minCoeff(), hi = r.final_density.values.maxCoeff();
  for (const auto& d : r.diagnostics) {
    lo = std::min(lo, d.rho_min);
    hi = std::max(hi, d.rho_max);
  }
  return {lo >= 1.0 && hi <= 2.0, "rho in [" + fmt(lo) + ", " + fmt(hi) + "] over " + std::to_string(r.steps) + " steps"};
}

Outcome two_layer_mass(Runs& runs) {
  const RunResult& r = runs.get("two_layer");
  const double drift = max_mass_drift(r);
  return {drift <= 1e-4, "max relative mass change " + fmt(drift)};
}

Outcome renormalized(Runs& runs) {
  const RunResult& r = runs.get("rotation", true);
  const Scenario& sc = runs.scenario("rotation");
  const GalerkinRelativeVelocity rel = history_from_snapshots(sc, r);
  std::vector<DensityField> rho;
  for (const auto& s : r.snapshots) rho.push_back(s.rho);
  const auto tests = random_test_functions(sc.cfg, 5, 2024);
  const std::vector<std::pair<std::string, std::function<double(double)>>> bs = {
      {"s", [](double s) { return s; }},
      {"s^2", [](double s) { return s * s; }},
      {"sin s", [](double s) { return std::sin(s); }}};
  Outcome o{true, ""};
  for (const auto& [name, b] : bs) {
    double worst = 0.0;
    for (const auto& phi : tests) {
      const RenormalizedResult res = renormalized_residual(sc.disc, b, rho, rel, phi);
      worst = std::max(worst, res.residual / res.phi_norm);
    }
    o.pass = o.pass && worst <= 1e-4;
    o.detail += "b = " + name + ": " + fmt(worst) + "; ";
  }
  return o;
}

Outcome gyroscopic(Runs& runs) {
  double worst = 0.0;
  std::size_t steps = 0;
  for (const std::string name : {"swirl", "squirmer"}) {
    for (const auto& d : runs.get(name).diagnostics) worst = std::max(worst, std::abs(d.gyro_contraction));
    steps += runs.get(name).diagnostics.size();
  }
  return {worst <= 1e-10, "max per-step contraction " + fmt(worst) + " over " + std::to_string(steps) + " steps"};
}

Outcome trilinear(Runs& runs) {
  const double d = max_trilinear_defect(runs.get("swirl"));
  return {d <= 1e-3, "swirl: max relative defect " + fmt(d)};
}

// Frozen density, no convection or gyroscopic coupling: M a' = A a + C with
// constant matrices, solved exactly through the generalized eigenproblem.
Outcome linear_oracle(Runs&) {
  const auto sc = build_scenario(scenario_config("squirmer", "domain.resolution = 8\nbasis.N = 12"));
  const GalerkinBasis basis = sc->basis.leading(2);
  StepOptions so;
  so.freeze_density = true;
  so.convection = false;
  so.gyroscopic = false;
  so.picard_tol = 1e-14;
  GalerkinStepper st(sc->disc, sc->geo, basis, sc->params, sc->flux, sc->rho0, sc->shift,
                     sc->cfg.transport_dt_sub_factor, so);
  const VecX a0 = (VecX(2) << 0.4, -0.3).finished();
  st.set_initial(a0);

  const VecX rho = st.state().rho.shifted(), rho_s = st.state().rho.shifted_surface();
  const MatX M = assemble_mass(basis, sc->disc, sc->geo, rho);
  const VecX nu_v = VecX::Constant(rho.size(), sc->params.nu), nu_s = VecX::Constant(rho_s.size(), sc->params.nu);
  const MatX A = assemble_dissipation(basis, sc->disc, nu_v, nu_s, sc->params.alpha).total();
  const VecX C = assemble_forcing(basis, sc->disc, sc->flux.at(0.0), nu_s, sc->params.alpha);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> ges(A, M);
  const MatX& V = ges.eigenvectors();  // V^T M V = I, A V = M V diag(lambda)
  const VecX a_inf = -A.ldlt().solve(C);
  const VecX c0 = V.transpose() * M * (a0 - a_inf);
  const auto exact = [&](double t) -> VecX {
    return a_inf + V * (c0.array() * (ges.eigenvalues().array() * t).exp()).matrix();
  };

  const int n = 4000;
  double worst = 0.0;
  for (int k = 1; k <= n; ++k) {
    st.step_to(static_cast<double>(k) / n);
    worst = std::max(worst, (st.state().alpha - exact(st.state().t)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, "N = 2, dt = " + fmt(1.0 / n) + ", lambda = " + fmt(ges.eigenvalues()[0]) + ", " +
                             fmt(ges.eigenvalues()[1]) + ", max error " + fmt(worst)};
}

Outcome so3(Runs&) {
  BodyPose p;
  const Vec3 r(0.9, -1.7, 0.4);
  const double dt = 1e-3;
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    p = integrate_pose(p, Vec3(0.1, 0.0, 0.0), r, dt);
    drift = std::max(drift, (p.Q.transpose() * p.Q - Mat3::Identity()).cwiseAbs().maxCoeff());
  }
  const double match = (p.Q - rodrigues(10000 * dt * r)).cwiseAbs().maxCoeff();
  return {drift <= 1e-9 && match <= 1e-10, "1e4 steps: |Q^T Q - I| " + fmt(drift) + ", Rodrigues mismatch " + fmt(match)};
}

Outcome weak_residual(Runs&) {
  Outcome o{true, ""};
  double prev = -1.0;
  for (const char* dt : {"0.005", "0.0025"}) {
    const auto sc = build_scenario(scenario_config("swirl", std::string("domain.resolution = 14\ntime.dt = ") + dt));
    RunOptions ro;
    ro.keep_snapshots = true;
    const RunResult r = run_scenario(*sc, ro);
    const WeakCheck w = weak_check(*sc, r);
    const double h = sc->cfg.time_dt;
    const double bound = 10.0 * (1e-8 + h * h);
    o.pass = o.pass && w.worst_ratio <= bound;
    if (prev >= 0.0) o.pass = o.pass && w.worst_ratio < prev;
    prev = w.worst_ratio;
    o.detail += std::string("dt ") + dt + ": " + fmt(w.worst_ratio) + " (bound " + fmt(bound) + "); ";
  }
  return o;
}

Outcome variable_viscosity(Runs& runs) {
  const RunResult& r = runs.get("variable_viscosity");
  bool bounds = true;
  std::string detail;
  for (const auto& name : {"density lower bound", "density upper bound", "viscosity bounds"}) {
    const InvariantStatus* s = r.invariant(name);
    bounds = bounds && s != nullptr && s->ok;
  }
  double nlo = 1e300, nhi = -1e300;
  for (const auto& d : r.diagnostics) {
    nlo = std::min(nlo, d.nu_min);
    nhi = std::max(nhi, d.nu_max);
  }
  const double br = final_bracket_defect(r.ledger);
  return {bounds && br <= 1e-6,
          "nu in [" + fmt(nlo) + ", " + fmt(nhi) + "], bracketed defect " + fmt(br)};
}

Outcome sphere_geometry(Runs&) {
  const MassInertia mi = compute_mass_inertia(Sphere{1.0}, 1.0);
  const double m_ex = 4.0 * kPi / 3.0;
  const double m_err = std::abs(mi.mass - m_ex) / m_ex;
  const double i_err = (mi.inertia - 0.4 * m_ex * Mat3::Identity()).cwiseAbs().maxCoeff() / (0.4 * m_ex);
  bool chi = true;
  const double R = 4.0;
  for (const Vec3& y : {Vec3(0.3, -1.2, 2.0), Vec3(3.99, 0, 0), Vec3(0, 0, 0)}) chi = chi && chi_R(y, R) == y;
  for (const Vec3& y : {Vec3(4.0, 0, 0), Vec3(0, 5, 0), Vec3(-3, 7, 2)}) {
    const Vec3 c = chi_R(y, R);
    chi = chi && std::abs(c.norm() - R) <= 1e-15 * R && (c.normalized() - y.normalized()).norm() <= 1e-15;
  }
  return {m_err <= 1e-3 && i_err <= 1e-3 && chi,
          "mass error " + fmt(m_err) + ", inertia error " + fmt(i_err) + ", chi_R " + (chi ? "exact" : "wrong")};
}

Outcome domain_sweep_decay(Runs&) {
  const Config c = scenario_config("domain_sweep");
  const DomainSweepReport rep = domain_sweep(c, c.sweep_R);
  std::string d = "differences";
  for (double x : rep.differences) d += " " + fmt(x);
  bool dec = rep.differences.size() + 1 == c.sweep_R.size();
  for (std::size_t k = 1; k < rep.differences.size(); ++k) dec = dec && rep.differences[k] < rep.differences[k - 1];
  return {dec, d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, Outcome (*)(Runs&)>> criteria = {
      {"energy inequality, swirl and squirmer", energy_inequality},
      {"zero data stays zero", zero_data},
      {"two-layer density bounds", two_layer_bounds},
      {"two-layer mass conservation", two_layer_mass},
      {"renormalized continuity, rotation scenario", renormalized},
      {"gyroscopic contraction", gyroscopic},
      {"trilinear identity, default scenario", trilinear},
      {"frozen-density N = 2 against the exact ODE solution", linear_oracle},
      {"SO(3) drift and Rodrigues match", so3},
      {"weak residual and its dt refinement", weak_residual},
      {"variable viscosity bounds and bracketed inequality", variable_viscosity},
      {"sphere mass, inertia and chi_R", sphere_geometry},
      {"domain sweep differences decrease", domain_sweep_decay},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  Runs runs;
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second(runs);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %2d  %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
