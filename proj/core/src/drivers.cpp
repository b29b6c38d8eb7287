#include "slipfsi/drivers.hpp"

#include "slipfsi/bodyframe.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

namespace slipfsi {

DensityProfile make_density_profile(const Config& cfg) {
  if (cfg.density_profile == "constant") return constant_density(cfg.density_value);
  if (cfg.density_profile == "radial")
    return radial_density(cfg.density_lo, cfg.density_hi, cfg.density_radius, cfg.density_width);
  if (cfg.density_profile == "two_layer")
    return two_layer_density(cfg.density_inner, cfg.density_outer, cfg.density_radius);
  return stratified_density(cfg.density_lo, cfg.density_hi, cfg.density_width, cfg.density_axis.normalized());
}

BodyShape make_body_shape(const Config& cfg) {
  if (cfg.body_shape == "icosphere") return icosphere(cfg.body_radius, cfg.body_mesh_level);
  return Sphere{cfg.body_radius, Vec3::Zero()};
}

FieldSamples initial_field(const Config& cfg, const FluidDiscretization& disc) {
  FieldSamples u;
  u.values = Points::Zero(3, disc.volume_size());
  u.ell = cfg.initial_ell;
  u.rot = cfg.initial_rot;
  const double A = cfg.initial_amplitude;
  for (Eigen::Index p = 0; p < disc.volume_size(); ++p) {
    const Vec3 y = disc.volume_points.col(p);
    if (cfg.initial_family == "rigid") {
      u.values.col(p) = u.ell + u.rot.cross(y);
    } else if (cfg.initial_family == "spin") {
      // body spin with the decaying rotlet a^3 (rot x y) / |y|^3 around it
      const double a = cfg.body_radius;
      u.values.col(p) = std::pow(a / y.norm(), 3) * u.rot.cross(y);
    } else if (cfg.initial_family == "vortex") {
      // divergence-free swirl about e3 decaying away from the body
      u.values.col(p) = A * std::exp(-0.5 * (y.squaredNorm() - cfg.body_radius * cfg.body_radius)) *
                            Vec3::UnitZ().cross(y) +
                        u.ell + u.rot.cross(y);
    }
  }
  return u;
}

VecX initial_coefficients(const Scenario& sc) {
  const Config& cfg = sc.cfg;
  const int N = sc.basis.N;
  if (cfg.initial_family == "zero") return VecX::Zero(N);
  if (cfg.initial_family == "random") {
    std::mt19937_64 gen(cfg.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    VecX a(N);
    for (int i = 0; i < N; ++i) a[i] = nd(gen);
    return (cfg.initial_amplitude / std::sqrt(static_cast<double>(N))) * a;
  }
  const DensityField rho = make_density_field(sc.disc, sc.rho0, sc.shift);
  return project_initial(sc.basis, sc.disc, sc.geo, rho.shifted(), initial_field(cfg, sc.disc));
}

namespace {

GalerkinBasis basis_for(const Config& cfg, const FluidDiscretization& disc, const RigidGeometry& geo,
                        const VecX& rho) {
  BasisOptions bo;
  bo.N = cfg.basis_N;
  bo.potential_order = cfg.basis_potential_order;
  if (cfg.basis_cache_dir.empty()) return build_basis(disc, geo, rho, bo);
  const std::uint64_t key = basis_cache_key(disc, geo, rho, bo);
  char name[64];
  std::snprintf(name, sizeof name, "basis_%016llx.bin", static_cast<unsigned long long>(key));
  const std::filesystem::path path = std::filesystem::path(cfg.basis_cache_dir) / name;
  GalerkinBasis b;
  if (std::filesystem::exists(path) && load_basis(b, disc, path.string(), key, bo.N, bo.potential_order))
    return b;
  b = build_basis(disc, geo, rho, bo);
  std::filesystem::create_directories(cfg.basis_cache_dir);
  save_basis(b, path.string(), key);
  return b;
}

}  // namespace

std::unique_ptr<Scenario> build_scenario(const Config& cfg) {
  validate(cfg);
  auto sc = std::make_unique<Scenario>();
  sc->cfg = cfg;
  sc->shape = make_body_shape(cfg);
  sc->geo = make_rigid_geometry(sc->shape, cfg.body_density);
  DiscretizationOptions dopt;
  dopt.scheme = cfg.domain_quadrature;
  dopt.icosphere_level = cfg.body_mesh_level;
  sc->disc = build_discretization(sc->shape, cfg.domain_R, cfg.domain_resolution, dopt);
  sc->rho0 = make_density_profile(cfg);
  sc->shift = cfg.eps_shift();
  const DensityField rho = make_density_field(sc->disc, sc->rho0, sc->shift);
  sc->basis = basis_for(cfg, sc->disc, sc->geo, rho.shifted());
  sc->flux = make_flux(cfg.propulsion_family, cfg.propulsion_amplitude, cfg.propulsion_profile,
                       sc->disc.surface_S0);
  sc->flux.period = cfg.propulsion_period;
  sc->flux.ramp_time = cfg.propulsion_ramp_time;
  sc->params.nu = cfg.fluid_nu;
  sc->params.variable_viscosity = cfg.fluid_variable_viscosity;
  sc->params.nu1 = cfg.fluid_nu1;
  sc->params.nu2 = cfg.fluid_nu2;
  sc->params.alpha = cfg.coupling_alpha;
  sc->step_opts.picard_tol = cfg.picard_tol;
  sc->step_opts.picard_max_iter = cfg.picard_max_iter;
  sc->step_opts.resweep = cfg.picard_resweep;
  sc->alpha0 = initial_coefficients(*sc);
  return sc;
}

const InvariantStatus* RunResult::invariant(const std::string& name) const {
  for (const auto& s : invariants)
    if (s.name == name) return &s;
  return nullptr;
}

TrajectoryRow trajectory_row(const GalerkinStepper& st, const GalerkinBasis& basis) {
  TrajectoryRow row;
  const SimState& s = st.state();
  row.t = s.t;
  row.h = s.pose.h;
  row.q = quaternion(s.pose.Q);
  row.ell = basis.rigid_ell(s.alpha);
  row.r = basis.rigid_rot(s.alpha);
  return row;
}

namespace {

// Records one observation; returns false on a fresh breach.
bool observe(InvariantStatus& s, double value, bool ok, int step, bool larger_is_worse) {
  if (larger_is_worse ? value > s.worst : value < s.worst) s.worst = value;
  if (!ok && s.ok) {
    s.ok = false;
    s.first_failure = step;
    return false;
  }
  return true;
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  GalerkinStepper st(sc.disc, sc.geo, sc.basis, sc.params, sc.flux, sc.rho0, sc.shift,
                     sc.cfg.transport_dt_sub_factor, sc.step_opts);
  st.set_initial(sc.alpha0);
  const int steps = opts.steps >= 0 ? opts.steps : sc.cfg.steps();
  const double dt = sc.cfg.time_dt;

  RunResult out;
  const double E0 = st.ledger().E0;
  const double lo = sc.rho0.lo, hi = sc.rho0.hi;
  InvariantStatus slack{"energy slack", 0.0, -1e-8 * (1.0 + E0)};
  InvariantStatus rho_lo{"density lower bound", st.state().rho.values.minCoeff(), lo};
  InvariantStatus rho_hi{"density upper bound", st.state().rho.values.maxCoeff(), hi};
  InvariantStatus gyro{"gyroscopic contraction", 0.0, 1e-10};
  InvariantStatus nu_b{"viscosity bounds", 0.0, 0.0};
  const double nlo = sc.params.variable_viscosity ? sc.params.nu1 : sc.params.nu;
  const double nhi = sc.params.variable_viscosity ? sc.params.nu2 : sc.params.nu;

  // l . int_{|y|=R} rho n dS, the rate at which the far field carries mass in
  const SurfaceQuadrature& outer = sc.disc.surface_BR;
  const auto inflow_rate = [&]() {
    const VecX rho = st.transport().sample(outer.points);
    Vec3 m = Vec3::Zero();
    for (Eigen::Index p = 0; p < outer.size(); ++p) m += outer.weights[p] * rho[p] * outer.normals.col(p);
    return sc.basis.rigid_ell(st.state().alpha).dot(m);
  };
  double q_prev = inflow_rate();
  out.mass.push_back(mass_integral(sc.disc, st.state().rho));
  out.mass_inflow.push_back(0.0);

  out.trajectory.push_back(trajectory_row(st, sc.basis));
  if (opts.keep_snapshots) out.snapshots.push_back({0.0, st.state().alpha, st.state().rho});

  for (int k = 1; k <= steps; ++k) {
    StepDiagnostics d;
    try {
      d = st.step_to(k * dt);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(k) + ": " + e.what());
    }
    const double q = inflow_rate();
    out.mass.push_back(d.mass);
    out.mass_inflow.push_back(out.mass_inflow.back() + 0.5 * dt * (q_prev + q));
    q_prev = q;
    const LedgerRow& row = st.ledger().rows.back();
    std::vector<std::string> breached;
    if (!observe(slack, row.slack, row.slack >= slack.bound, k, false)) breached.push_back(slack.name);
    if (!observe(rho_lo, d.rho_min, d.rho_min >= lo, k, false)) breached.push_back(rho_lo.name);
    if (!observe(rho_hi, d.rho_max, d.rho_max <= hi, k, true)) breached.push_back(rho_hi.name);
    const double g = std::abs(d.gyro_contraction);
    if (!observe(gyro, g, g <= gyro.bound, k, true)) breached.push_back(gyro.name);
    const double nu_out = std::max({0.0, nlo - d.nu_min, d.nu_max - nhi});
    if (!observe(nu_b, nu_out, nu_out == 0.0, k, true)) breached.push_back(nu_b.name);

    if (k % sc.cfg.output_every == 0 || k == steps) out.trajectory.push_back(trajectory_row(st, sc.basis));
    if (opts.keep_snapshots) out.snapshots.push_back({st.state().t, st.state().alpha, st.state().rho});
    out.diagnostics.push_back(d);
    if (opts.on_step) opts.on_step(k, st, d);
    if (opts.hard_invariants && !breached.empty())
      throw Error(ErrorKind::InvariantBreach,
                  "invariant breach at step " + std::to_string(k) + ": " + breached.front());
  }
  out.steps = steps;
  out.ledger = st.ledger();
  out.final_density = st.state().rho;
  if (opts.density_grid > 1) {
    DensityGrid& g = out.density_grid;
    const int n = opts.density_grid;
    const double R = sc.disc.R;
    g.n = n;
    g.h = 2.0 * R / (n - 1);
    g.origin = Vec3::Constant(-R);
    g.t = st.state().t;
    g.values = VecX::Constant(static_cast<Eigen::Index>(n) * n * n, std::numeric_limits<double>::quiet_NaN());
    std::vector<Eigen::Index> idx;
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Vec3 y = g.origin + g.h * Vec3(i, j, k);
          if (!sc.disc.in_fluid(y)) continue;
          idx.push_back((static_cast<Eigen::Index>(i) * n + j) * n + k);
          pts.push_back(y);
        }
    Points P(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t q = 0; q < pts.size(); ++q) P.col(static_cast<Eigen::Index>(q)) = pts[q];
    const VecX v = st.transport().sample(P);
    for (std::size_t q = 0; q < idx.size(); ++q) g.values[idx[q]] = v[static_cast<Eigen::Index>(q)];
  }
  out.invariants = {slack, rho_lo, rho_hi, gyro};
  if (sc.params.variable_viscosity) out.invariants.push_back(nu_b);
  for (const auto& s : out.invariants) out.ok = out.ok && s.ok;
  return out;
}

double final_inequality_defect(const EnergyLedger& L) {
  const LedgerRow& r = L.rows.back();
  const double lhs = r.E_fluid + r.E_body + r.D_visc + r.D_slip;
  const double rhs = L.E0 + r.W_budget;
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return (lhs - rhs) / scale;
}

double final_bracket_defect(const EnergyLedger& L) {
  const LedgerRow& r = L.rows.back();
  return -r.bracket_slack / std::max(r.bracket_budget, 1e-300);
}

double max_mass_drift(const RunResult& run) {
  double worst = 0.0;
  if (run.mass.empty()) return worst;
  const double m0 = std::max(std::abs(run.mass.front()), 1e-300);
  for (double m : run.mass) worst = std::max(worst, std::abs(m - run.mass.front()) / m0);
  return worst;
}

double max_mass_balance_defect(const RunResult& run) {
  double worst = 0.0;
  if (run.mass.empty()) return worst;
  const double m0 = std::max(std::abs(run.mass.front()), 1e-300);
  for (std::size_t k = 0; k < run.mass.size(); ++k)
    worst = std::max(worst, std::abs(run.mass[k] - run.mass.front() - run.mass_inflow[k]) / m0);
  return worst;
}

double max_trilinear_defect(const RunResult& run) {
  double worst = 0.0;
  for (const auto& d : run.diagnostics) {
    if (d.trilinear_scale <= 0.0) continue;
    worst = std::max(worst, std::abs(d.trilinear_lhs - d.trilinear_rhs) / d.trilinear_scale);
  }
  return worst;
}

WeakCheck weak_check(const Scenario& sc, const RunResult& run, const TimePolynomial& psi) {
  if (run.snapshots.size() < 2) throw Error(ErrorKind::Config, "weak check needs a run with snapshots");
  const WeakTerms t = weak_terms(sc.weak_context(), run.snapshots, psi);
  WeakCheck w;
  w.residual = t.total();
  w.scale = t.scale();
  w.data_scale = w.scale.size() ? w.scale.maxCoeff() : 0.0;
  if (w.data_scale > 0.0) w.worst_ratio = w.residual.cwiseAbs().maxCoeff() / w.data_scale;
  return w;
}

namespace {

// Compared at the times both trajectories share.
double trajectory_difference(const std::vector<TrajectoryRow>& a, const std::vector<TrajectoryRow>& b) {
  double d = 0.0;
  std::size_t j = 0;
  for (const auto& ra : a) {
    while (j < b.size() && b[j].t < ra.t - 1e-9) ++j;
    if (j == b.size()) break;
    if (std::abs(b[j].t - ra.t) > 1e-9) continue;
    d = std::max(d, (ra.ell - b[j].ell).norm() + (ra.r - b[j].r).norm());
  }
  return d;
}

}  // namespace

DomainSweepReport domain_sweep(const Config& cfg, const std::vector<double>& Rs) {
  DomainSweepReport rep;
  for (double R : Rs) {
    Config c = cfg;
    c.domain_R = R;
    try {
      const auto sc = build_scenario(c);
      const RunResult run = run_scenario(*sc);
      rep.R.push_back(R);
      rep.trajectories.push_back(run.trajectory);
      std::vector<double> e;
      for (std::size_t k = 0; k < run.ledger.rows.size(); ++k) e.push_back(run.ledger.total_energy(k));
      rep.energy.push_back(std::move(e));
    } catch (const Error& e) {
      throw Error(e.kind(), "domain sweep at R = " + std::to_string(R) + ": " + e.what());
    }
  }
  for (std::size_t k = 0; k + 1 < rep.trajectories.size(); ++k)
    rep.differences.push_back(trajectory_difference(rep.trajectories[k], rep.trajectories[k + 1]));
  for (std::size_t k = 0; k + 1 < rep.differences.size(); ++k)
    rep.decreasing = rep.decreasing && rep.differences[k + 1] < rep.differences[k];
  return rep;
}

double projection_error(const Scenario& sc) {
  Config c = sc.cfg;
  c.initial_family = "vortex";
  if (c.initial_amplitude == 0.0) c.initial_amplitude = 1.0;
  const FieldSamples u = initial_field(c, sc.disc);
  const VecX rho = make_density_field(sc.disc, sc.rho0, sc.shift).shifted();
  const VecX a = project_initial(sc.basis, sc.disc, sc.geo, rho, u);
  FieldSamples pu;
  const VecX z = sc.basis.Z * a;
  pu.values = Eigen::Map<const Points>(z.data(), 3, sc.disc.volume_size());
  pu.ell = sc.basis.rigid_ell(a);
  pu.rot = sc.basis.rigid_rot(a);
  FieldSamples diff;
  diff.values = u.values - pu.values;
  diff.ell = u.ell - pu.ell;
  diff.rot = u.rot - pu.rot;
  return std::sqrt(std::max(0.0, inner_product_H(sc.disc, sc.geo, rho, diff, diff)));
}

RefinementReport refinement_sweep(const Config& cfg, const std::vector<int>& Ns,
                                  const std::vector<double>& dts) {
  RefinementReport rep;
  std::vector<TrajectoryRow> prev;
  const std::vector<int> n_list = Ns.empty() ? std::vector<int>{cfg.basis_N} : Ns;
  const std::vector<double> dt_list = dts.empty() ? std::vector<double>{cfg.time_dt} : dts;
  for (int N : n_list)
    for (double dt : dt_list) {
      Config c = cfg;
      c.basis_N = N;
      c.time_dt = dt;
      try {
        const auto sc = build_scenario(c);
        RunOptions ro;
        ro.keep_snapshots = true;
        const RunResult run = run_scenario(*sc, ro);
        const WeakCheck w = weak_check(*sc, run);
        RefinementEntry e;
        e.N = N;
        e.dt = dt;
        e.weak_ratio = w.worst_ratio;
        e.weak_max = w.residual.cwiseAbs().maxCoeff();
        e.min_slack = 0.0;
        for (const auto& r : run.ledger.rows) e.min_slack = std::min(e.min_slack, r.slack);
        e.projection_error = projection_error(*sc);
        e.trajectory_diff = prev.empty() ? 0.0 : trajectory_difference(prev, run.trajectory);
        prev = run.trajectory;
        rep.entries.push_back(e);
      } catch (const Error& e) {
        throw Error(e.kind(), "refinement sweep at N = " + std::to_string(N) + ", dt = " +
                                  std::to_string(dt) + ": " + e.what());
      }
    }
  return rep;
}

}  // namespace slipfsi
