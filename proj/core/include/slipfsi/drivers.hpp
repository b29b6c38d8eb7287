#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/config.hpp"
#include "slipfsi/galerkin.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/propulsion.hpp"
#include "slipfsi/transport.hpp"
#include "slipfsi/verify.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace slipfsi {

/// Everything a run needs, built once from a config. Held by pointer since
/// the stepper keeps references into it.
struct Scenario {
  Config cfg;
  BodyShape shape;
  RigidGeometry geo;
  FluidDiscretization disc;
  DensityProfile rho0;
  double shift = 0.0;
  GalerkinBasis basis;
  PropulsionFlux flux;
  PhysicalParams params;
  StepOptions step_opts;
  VecX alpha0;

  Scenario() = default;
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  WeakContext weak_context() const { return WeakContext{&basis, &disc, &geo, params, &flux}; }
};

DensityProfile make_density_profile(const Config& cfg);
BodyShape make_body_shape(const Config& cfg);

/// Initial velocity samples for the deterministic families (rigid, vortex).
FieldSamples initial_field(const Config& cfg, const FluidDiscretization& disc);
/// Coefficients of the initial state: H-projection of initial_field, or
/// seeded normal coefficients for the random family.
VecX initial_coefficients(const Scenario& sc);

std::unique_ptr<Scenario> build_scenario(const Config& cfg);

struct TrajectoryRow {
  double t = 0.0;
  Vec3 h = Vec3::Zero();
  Eigen::Vector4d q = Eigen::Vector4d(1, 0, 0, 0);
  Vec3 ell = Vec3::Zero();
  Vec3 r = Vec3::Zero();
};

/// Density on a regular grid over [-R, R]^3; NaN outside F_0.
struct DensityGrid {
  int n = 0;
  Vec3 origin = Vec3::Zero();
  double h = 0.0;
  double t = 0.0;
  VecX values;  // index (i * n + j) * n + k
};

struct InvariantStatus {
  std::string name;
  double worst = 0.0;  // worst observed value of the checked quantity
  double bound = 0.0;
  bool ok = true;
  int first_failure = -1;  // step index
};

struct RunResult {
  std::vector<TrajectoryRow> trajectory;
  EnergyLedger ledger;
  std::vector<StepDiagnostics> diagnostics;
  std::vector<TrajectorySnapshot> snapshots;  // only with keep_snapshots
  DensityField final_density;
  DensityGrid density_grid;  // only with density_grid > 0
  std::vector<InvariantStatus> invariants;
  std::vector<double> mass;          // int_F0 rho per step, index 0 is t = 0
  std::vector<double> mass_inflow;   // cumulative l . int_{|y|=R} rho n, trapezoid in time
  bool ok = true;
  int steps = 0;

  const InvariantStatus* invariant(const std::string& name) const;
};

struct RunOptions {
  bool hard_invariants = false;  // throw InvariantBreach at the first failing step
  bool keep_snapshots = false;
  int steps = -1;                // override the step count from the config
  int density_grid = 0;          // points per axis of the final density snapshot
  std::function<void(int, const GalerkinStepper&, const StepDiagnostics&)> on_step;
};

/// Steps the scenario from its initial state and checks the per-step
/// invariants: energy slack, density bounds, gyroscopic contraction and
/// (in variable-viscosity mode) viscosity bounds.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

/// Trajectory row at the current stepper state.
TrajectoryRow trajectory_row(const GalerkinStepper& st, const GalerkinBasis& basis);

/// (E + D - E0 - W) / max(|E + D|, |E0 + W|) at the final row; <= 0 when the
/// cumulative inequality holds.
double final_inequality_defect(const EnergyLedger& ledger);
/// Same for the nu1/nu2-bracketed inequality, relative to its budget.
double final_bracket_defect(const EnergyLedger& ledger);

/// max_k |M_k - M_0| / M_0.
double max_mass_drift(const RunResult& run);
/// max_k |M_k - M_0 - inflow_k| / M_0: mass change not explained by fluid
/// crossing the outer sphere (in the body frame the far field moves with -l).
double max_mass_balance_defect(const RunResult& run);

/// max_k |int rho_bar (w.grad u).u - 1/2 int (rho1 - rho0)/dt |u|^2| / int rho_bar |w| |grad u| |u|
double max_trilinear_defect(const RunResult& run);

struct WeakCheck {
  VecX residual;  // per basis test function
  VecX scale;     // sum of absolute term values
  double data_scale = 0.0;   // max_j scale_j
  double worst_ratio = 0.0;  // max_j |residual_j| / data_scale
};
/// Weak relation with psi, tested against every basis function; needs snapshots.
WeakCheck weak_check(const Scenario& sc, const RunResult& run, const TimePolynomial& psi = {});

struct DomainSweepReport {
  std::vector<double> R;
  std::vector<std::vector<TrajectoryRow>> trajectories;
  std::vector<std::vector<double>> energy;  // total energy per row
  std::vector<double> differences;          // max_t |l_k - l_k+1| + |r_k - r_k+1|
  bool decreasing = true;
};
DomainSweepReport domain_sweep(const Config& cfg, const std::vector<double>& Rs);

struct RefinementEntry {
  int N = 0;
  double dt = 0.0;
  double weak_ratio = 0.0;     // worst residual / scale over basis test functions
  double weak_max = 0.0;       // worst absolute residual
  double min_slack = 0.0;
  double projection_error = 0.0;  // H-distance of the vortex field to X_N
  double trajectory_diff = 0.0;   // against the previous entry, max over time
};
struct RefinementReport {
  std::vector<RefinementEntry> entries;
};
RefinementReport refinement_sweep(const Config& cfg, const std::vector<int>& Ns,
                                  const std::vector<double>& dts);

/// ||u0 - P_N u0||_H for the vortex initial field of cfg.
double projection_error(const Scenario& sc);

}  // namespace slipfsi
