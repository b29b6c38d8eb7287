#include <doctest.h>

#include "slipfsi/config.hpp"
#include "slipfsi/drivers.hpp"
#include "slipfsi/output.hpp"
#include "slipfsi/reports.hpp"

#include <sstream>

using namespace slipfsi;

namespace {

const char* kSmall =
    "domain.resolution = 6\n"
    "basis.N = 10\n"
    "time.T = 0.05\n"
    "time.dt = 0.01\n";

Config small(const std::string& extra) { return parse_config(std::string(kSmall) + extra); }

std::string csv(const RunResult& r) {
  std::ostringstream o;
  write_trajectory_csv(o, r.trajectory);
  write_ledger_csv(o, r.ledger);
  write_density_grid(o, r.density_grid);
  return o.str();
}

}  // namespace

TEST_CASE("runs are bitwise deterministic") {
  const Config cfg = small("initial.family = random\ninitial.amplitude = 0.3\nseed = 5\n");
  RunOptions o;
  o.density_grid = 6;
  const auto a = build_scenario(cfg);
  const auto b = build_scenario(cfg);
  const std::string ca = csv(run_scenario(*a, o)), cb = csv(run_scenario(*b, o));
  CHECK(ca == cb);
  CHECK(ca.rfind(kTrajectorySchema, 0) == 0);
  CHECK(ca.find(kLedgerSchema) != std::string::npos);
  CHECK(ca.find(kDensitySchema) != std::string::npos);

  const auto c = build_scenario(small("initial.family = random\ninitial.amplitude = 0.3\nseed = 6\n"));
  CHECK(csv(run_scenario(*c, o)) != ca);
}

TEST_CASE("zero scenario produces an all-zero ledger") {
  const auto sc = build_scenario(small("propulsion.family = none\ninitial.family = zero\n"));
  const RunResult r = run_scenario(*sc);
  CHECK(r.ok);
  CHECK(r.steps == 5);
  for (const auto& row : r.ledger.rows) {
    CHECK(row.E_fluid + row.E_body + row.D_visc + row.D_slip + row.W_budget == 0.0);
    CHECK(row.slack == 0.0);
  }
  for (const auto& t : r.trajectory) CHECK(t.h.norm() + t.ell.norm() + t.r.norm() == 0.0);
}

TEST_CASE("default swirl run holds its invariants and spins the body") {
  const auto sc = build_scenario(small(""));
  const RunResult r = run_scenario(*sc);
  CHECK(r.ok);
  for (const auto& s : r.invariants) {
    CAPTURE(s.name);
    CHECK(s.ok);
  }
  CHECK(r.trajectory.back().r.norm() > 0.0);
  CHECK(final_inequality_defect(r.ledger) <= 1e-6);
  CHECK(max_mass_balance_defect(r) <= 1e-4);
  REQUIRE(r.invariant("energy slack") != nullptr);
  CHECK(r.invariant("nonexistent") == nullptr);
}

TEST_CASE("hard invariants abort at the first breach, soft mode records it") {
  const auto sc = build_scenario(small(""));
  sc->rho0.lo = 1.9;  // pretend the lower bound is tighter than the data
  const RunResult soft = run_scenario(*sc);
  CHECK_FALSE(soft.ok);
  const InvariantStatus* lo = soft.invariant("density lower bound");
  REQUIRE(lo != nullptr);
  CHECK_FALSE(lo->ok);
  CHECK(lo->first_failure == 1);
  CHECK(soft.steps == 5);

  RunOptions o;
  o.hard_invariants = true;
  try {
    run_scenario(*sc, o);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvariantBreach);
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("relative velocity beyond R uses chi_R") {
  const auto sc = build_scenario(small("initial.family = rigid\ninitial.ell = 0.5, 0, 0\ninitial.rot = 0, 0, 1\n"));
  GalerkinRelativeVelocity h(sc->basis);
  h.push(0.0, sc->alpha0);
  const Vec3 l = sc->basis.rigid_ell(sc->alpha0), r = sc->basis.rigid_rot(sc->alpha0);
  const Vec3 inside(1.5, 0.5, -0.3);
  CHECK((h(inside, 0.0) - (sc->basis.velocity(sc->alpha0, inside) - (l + r.cross(inside)))).norm() < 1e-12);
  const Vec3 outside(0.0, 9.0, 0.0);
  CHECK((h(outside, 0.0) + (l + r.cross(chi_R(outside, 4.0)))).norm() < 1e-14);
}

TEST_CASE("domain sweep of zero data gives identical outputs") {
  const Config cfg = small("propulsion.family = none\ninitial.family = zero\n");
  const DomainSweepReport rep = domain_sweep(cfg, {3.0, 6.0});
  REQUIRE(rep.differences.size() == 1);
  CHECK(rep.differences[0] == 0.0);
  CHECK(rep.trajectories.size() == 2);
}

TEST_CASE("refinement sweep") {
  const Config cfg = small("");
  const RefinementReport one = refinement_sweep(cfg, {10}, {0.01});
  CHECK(one.entries.size() == 1);
  const RefinementReport rep = refinement_sweep(cfg, {8, 12, 16}, {0.01});
  REQUIRE(rep.entries.size() == 3);
  for (std::size_t k = 1; k < rep.entries.size(); ++k)
    CHECK(rep.entries[k].projection_error <= rep.entries[k - 1].projection_error);
}

TEST_CASE("verification report on a short run") {
  const auto sc = build_scenario(small(""));
  RunOptions o;
  o.keep_snapshots = true;
  const RunResult r = run_scenario(*sc, o);
  const Report rep = verification_report(*sc, r, 3);
  bool saw_weak = false, saw_renorm = false;
  for (const auto& l : rep.lines) {
    if (l.name.find("weak residual") != std::string::npos) saw_weak = true;
    if (l.name.find("renormalized") != std::string::npos) saw_renorm = true;
  }
  CHECK(saw_weak);
  CHECK(saw_renorm);
  std::ostringstream out;
  write_report(out, rep);
  CHECK(out.str().rfind(kReportSchema, 0) == 0);
}

TEST_CASE("report status ignores diagnostic lines") {
  Report r;
  r.lines.push_back({"a", 1.0, "<=", 2.0, true, ""});
  r.lines.push_back({"b", 3.0, "<=", 2.0, false, "note, with comma", true});
  CHECK(r.all_pass());
  r.lines.push_back({"c", 3.0, "<=", 2.0, false, ""});
  CHECK_FALSE(r.all_pass());
  std::ostringstream out;
  write_report(out, r);
  CHECK(out.str().find("\"note, with comma\"") != std::string::npos);
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}
