#include "slipfsi/reports.hpp"

#include <cmath>
#include <random>

namespace slipfsi {

std::vector<SpaceTimeTest> random_test_functions(const Config& cfg, int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double a = cfg.body_radius, R = cfg.domain_R;
  const double half = 0.5 * (R - a);
  std::vector<SpaceTimeTest> out;
  for (int i = 0; i < count; ++i) {
    const double c0 = nd(gen);
    const Vec3 b = Vec3(nd(gen), nd(gen), nd(gen)) / R;
    Mat3 Q;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) Q(r, c) = nd(gen);
    Q = (0.5 * (Q + Q.transpose()) / (R * R)).eval();
    // shell bump q(|y|) = ((|y| - a)(R - |y|) / half^2)^4, zero with three derivatives at both ends
    const auto shell = [=](const Vec3& y, double& q, Vec3& dq) {
      const double r = y.norm();
      if (r <= a || r >= R) {
        q = 0.0;
        dq.setZero();
        return;
      }
      const double g = (r - a) * (R - r) / (half * half);
      const double dg = (R + a - 2.0 * r) / (half * half);
      q = std::pow(g, 4);
      dq = (4.0 * std::pow(g, 3) * dg / r) * y;
    };
    const auto poly = [=](const Vec3& y) { return c0 + b.dot(y) + y.dot(Q * y); };
    SpaceTimeTest phi;
    phi.value = [=](const Vec3& y, double t) {
      double q;
      Vec3 dq;
      shell(y, q, dq);
      return q * poly(y) * (1.0 + 0.5 * t);
    };
    phi.dt = [=](const Vec3& y, double) {
      double q;
      Vec3 dq;
      shell(y, q, dq);
      return 0.5 * q * poly(y);
    };
    phi.grad = [=](const Vec3& y, double t) -> Vec3 {
      double q;
      Vec3 dq;
      shell(y, q, dq);
      return (dq * poly(y) + q * (b + 2.0 * (Q * y))) * (1.0 + 0.5 * t);
    };
    out.push_back(std::move(phi));
  }
  return out;
}

GalerkinRelativeVelocity history_from_snapshots(const Scenario& sc, const RunResult& run) {
  GalerkinRelativeVelocity h(sc.basis);
  for (const auto& s : run.snapshots) h.push(s.t, s.alpha);
  return h;
}

namespace {

ReportLine le(const std::string& name, double value, double bound, const std::string& note = {}) {
  return ReportLine{name, value, "<=", bound, value <= bound, note};
}
ReportLine ge(const std::string& name, double value, double bound, const std::string& note = {}) {
  return ReportLine{name, value, ">=", bound, value >= bound, note};
}

}  // namespace

Report run_report(const Scenario& sc, const RunResult& run) {
  Report r;
  r.title = "run";
  r.meta = {{"steps", std::to_string(run.steps)},
            {"dt", format_double(sc.cfg.time_dt)},
            {"N", std::to_string(sc.basis.N)},
            {"R", format_double(sc.cfg.domain_R)},
            {"E0", format_double(run.ledger.E0)}};
  for (const auto& s : run.invariants) {
    const std::string note = s.ok ? std::string() : "first failure at step " + std::to_string(s.first_failure);
    if (s.name == "energy slack" || s.name == "density lower bound")
      r.lines.push_back(ge(s.name, s.worst, s.bound, note));
    else
      r.lines.push_back(le(s.name, s.worst, s.bound, note));
  }
  r.lines.push_back(le("final energy inequality", final_inequality_defect(run.ledger), 1e-6, "relative"));
  if (sc.params.variable_viscosity)
    r.lines.push_back(le("bracketed energy inequality", final_bracket_defect(run.ledger), 1e-6, "relative"));
  const double tri = max_trilinear_defect(run);
  if (sc.rho0.name == "two_layer")
    // quadrature cannot see the interface delta in grad rho; reported only
    r.lines.push_back(ReportLine{"trilinear identity", tri, "<=", 1e-3, tri <= 1e-3, "discontinuous density", true});
  else
    r.lines.push_back(le("trilinear identity", tri, 1e-3, "relative to the integrand magnitude"));
  r.lines.push_back(le("mass balance", max_mass_balance_defect(run), 1e-4, "relative, net of outer-sphere inflow"));
  r.lines.push_back(ReportLine{"mass drift", max_mass_drift(run), "<=", 1e-4, max_mass_drift(run) <= 1e-4, "includes inflow", true});
  return r;
}

Report verification_report(const Scenario& sc, const RunResult& run, std::uint64_t seed) {
  Report r = run_report(sc, run);
  r.title = "verify";
  const double dt = sc.cfg.time_dt;

  const WeakCheck w = weak_check(sc, run);
  r.lines.push_back(le("weak residual / data scale", w.worst_ratio, 10.0 * (sc.cfg.picard_tol + dt * dt),
                       "worst basis test function over the largest term scale, psi = 1"));

  // Renormalized continuity.
  const GalerkinRelativeVelocity rel = history_from_snapshots(sc, run);
  std::vector<DensityField> rho;
  for (const auto& s : run.snapshots) rho.push_back(s.rho);
  const auto tests = random_test_functions(sc.cfg, 5, seed);
  const std::vector<std::pair<std::string, std::function<double(double)>>> bs = {
      {"s", [](double s) { return s; }},
      {"s^2", [](double s) { return s * s; }},
      {"sin s", [](double s) { return std::sin(s); }}};
  for (const auto& [name, b] : bs) {
    double worst = 0.0;
    for (const auto& phi : tests) {
      const RenormalizedResult res = renormalized_residual(sc.disc, b, rho, rel, phi);
      worst = std::max(worst, res.residual / std::max(res.phi_norm, 1e-300));
    }
    r.lines.push_back(le("renormalized residual b = " + name, worst, 1e-4, "relative to ||phi||, 5 test functions"));
  }

  // Boundary algebra.
  std::mt19937_64 gen(seed + 1);
  std::normal_distribution<double> nd(0.0, 1.0);
  double lag = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 v[4];
    for (auto& x : v) x = Vec3(nd(gen), nd(gen), nd(gen));
    lag = std::max(lag, lagrange_identity_check(v[0], v[1], v[2], v[3]) /
                            std::max(lagrange_identity_scale(v[0], v[1], v[2], v[3]), 1e-300));
  }
  r.lines.push_back(le("lagrange identity", lag, 1e-12, "1000 random quadruples, relative"));

  {
    const GalerkinBasis& b = sc.basis;
    const Eigen::Index m = sc.disc.surface_S0.size();
    const VecX& a = run.snapshots.back().alpha;
    const VecX tr = b.TraceS0 * a, rig = b.RigidS0 * a;
    const Points u = Eigen::Map<const Points>(tr.data(), 3, m);
    const Points uS = Eigen::Map<const Points>(rig.data(), 3, m);
    const Points wv = sc.flux.at(run.snapshots.back().t);
    VecX xi = VecX::Zero(b.N);
    xi[b.N - 1] = 1.0;
    const VecX ptr = b.TraceS0 * xi, prig = b.RigidS0 * xi;
    const Points ph = Eigen::Map<const Points>(ptr.data(), 3, m);
    const Points phS = Eigen::Map<const Points>(prig.data(), 3, m);
    const SlipReductionResult s = slip_reduction_check(u, uS, wv, ph, phS, sc.disc.surface_S0.normals, 1e-8);
    double scale = 1e-300;
    for (Eigen::Index p = 0; p < m; ++p)
      scale = std::max(scale, (u.col(p) - uS.col(p) - wv.col(p)).norm() * (ph.col(p) - phS.col(p)).norm());
    r.lines.push_back(le("slip reduction", s.max_residual / scale, 1e-10,
                         "final state against the last basis function, relative"));
    r.lines.push_back(le("slip normal defect", s.max_normal_defect, 1e-8));
  }

  if (run.snapshots.size() >= 3) {
    const std::size_t k = run.snapshots.size() / 2;
    // Density at lattice cells from the snapshot by nearest volume node.
    const DensityField& f = run.snapshots[k].rho;
    const auto rho_at = [&](const Vec3& y) {
      Eigen::Index best = 0;
      (sc.disc.volume_points.colwise() - y).colwise().squaredNorm().minCoeff(&best);
      return f.values[best];
    };
    const PressureField p = recover_pressure(sc.weak_context(), run.snapshots[k - 1], run.snapshots[k],
                                             run.snapshots[k + 1], rho_at);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < p.p.size(); ++i) mean += p.p[i];
    r.lines.push_back(le("pressure mean", std::abs(mean) * std::pow(sc.disc.lattice.h, 3), 1e-12));
    r.lines.push_back(ReportLine{"pressure defect", p.defect, "<=", 0.25, !p.degraded, p.warning, true});
  }
  return r;
}

}  // namespace slipfsi
