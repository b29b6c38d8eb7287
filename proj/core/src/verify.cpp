#include "slipfsi/verify.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <queue>

namespace slipfsi {

namespace {

VecX repeat(const VecX& v, int k) {
  VecX out(v.size() * k);
  for (Eigen::Index p = 0; p < v.size(); ++p) out.segment(k * p, k).setConstant(v[p]);
  return out;
}

void check_context(const WeakContext& ctx, const std::vector<TrajectorySnapshot>& traj) {
  if (!ctx.basis || !ctx.disc || !ctx.geo)
    throw Error(ErrorKind::Config, "weak residual needs basis, discretization and geometry");
  if (traj.size() < 2) throw Error(ErrorKind::Config, "weak residual needs at least two snapshots");
}

// Per-snapshot pieces of the weak relation, each an N-vector.
struct SnapshotTerms {
  VecX mass, convection, determinant, dissipation, propulsion;
};

SnapshotTerms snapshot_terms(const WeakContext& ctx, const TrajectorySnapshot& s) {
  const GalerkinBasis& b = *ctx.basis;
  const FluidDiscretization& d = *ctx.disc;
  const RigidGeometry& g = *ctx.geo;
  const VecX rho = s.rho.shifted(), rho_s = s.rho.shifted_surface();
  const VecX nu = viscosity_samples(rho, ctx.params);
  const VecX nu_s = viscosity_samples(rho_s, ctx.params);
  const VecX wr = repeat(d.volume_weights.cwiseProduct(rho), 3);
  const VecX u = b.Z * s.alpha;
  const Vec3 l = b.rigid_ell(s.alpha), r = b.rigid_rot(s.alpha);
  const VecX ru = wr.cwiseProduct(u);

  SnapshotTerms t;
  t.mass = b.Z.transpose() * ru + g.mass * b.ell.transpose() * l + b.rot.transpose() * (g.inertia * r);

  const MatX Dw = directional_derivative(b, relative_velocity_nodes(b, d, s.alpha));
  t.convection = -Dw.transpose() * ru;

  VecX rxu(u.size());
  for (Eigen::Index p = 0; p < d.volume_size(); ++p)
    rxu.segment<3>(3 * p) = wr[3 * p] * r.cross(Vec3(u.segment<3>(3 * p)));
  t.determinant = b.Z.transpose() * rxu - g.mass * b.ell.transpose() * l.cross(r) -
                  b.rot.transpose() * (g.inertia * r).cross(r);

  const MatX gap = b.TraceS0 - b.RigidS0;
  const VecX wv = repeat(d.volume_weights.cwiseProduct(nu), 6);
  const VecX ws = repeat(d.surface_S0.weights.cwiseProduct(nu_s), 3);
  const double a = ctx.params.alpha;
  t.dissipation = 2.0 * b.Strain.transpose() * wv.cwiseProduct(b.Strain * s.alpha) +
                  2.0 * a * gap.transpose() * ws.cwiseProduct(gap * s.alpha);

  t.propulsion = VecX::Zero(b.N);
  if (ctx.flux && ctx.flux->samples.size()) {
    const Points w = ctx.flux->at(s.t);
    const Eigen::Map<const VecX> wvec(w.data(), w.size());
    t.propulsion = -2.0 * a * gap.transpose() * ws.cwiseProduct(wvec);
  }
  return t;
}

// Trapezoid weights over the snapshot times.
std::vector<double> trapezoid(const std::vector<TrajectorySnapshot>& traj) {
  std::vector<double> w(traj.size(), 0.0);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj[k + 1].t - traj[k].t;
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

}  // namespace

WeakTerms weak_terms(const WeakContext& ctx, const std::vector<TrajectorySnapshot>& traj,
                     const TimePolynomial& psi) {
  check_context(ctx, traj);
  const int N = ctx.basis->N;
  WeakTerms out;
  out.inertia = out.convection = out.determinant = out.dissipation = out.propulsion = VecX::Zero(N);
  const std::vector<double> tw = trapezoid(traj);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const SnapshotTerms s = snapshot_terms(ctx, traj[k]);
    const double t = traj[k].t;
    const double ps = psi.value(t);
    out.inertia -= tw[k] * psi.derivative(t) * s.mass;
    if (k == 0) out.inertia -= ps * s.mass;
    if (k + 1 == traj.size()) out.inertia += ps * s.mass;
    out.convection += tw[k] * ps * s.convection;
    out.determinant += tw[k] * ps * s.determinant;
    out.dissipation += tw[k] * ps * s.dissipation;
    out.propulsion += tw[k] * ps * s.propulsion;
  }
  return out;
}

double weak_residual(const WeakContext& ctx, const std::vector<TrajectorySnapshot>& traj,
                     const VecX& xi, const TimePolynomial& psi) {
  check_context(ctx, traj);
  const GalerkinBasis& b = *ctx.basis;
  const FluidDiscretization& d = *ctx.disc;
  const RigidGeometry& g = *ctx.geo;
  if (xi.size() != b.N) throw Error(ErrorKind::Config, "test function coefficient size mismatch");
  const Eigen::Index n = d.volume_size(), m = d.surface_S0.size();
  const double a = ctx.params.alpha;

  // Test function data, fixed in time.
  const VecX phi = b.Z * xi;
  const VecX phi_grad = b.Grad * xi;
  const VecX phi_strain = b.Strain * xi;
  const VecX phi_gap = (b.TraceS0 - b.RigidS0) * xi;
  const Vec3 phi_l = b.rigid_ell(xi), phi_r = b.rigid_rot(xi);

  const std::vector<double> tw = trapezoid(traj);
  double res = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const TrajectorySnapshot& s = traj[k];
    const VecX rho = s.rho.shifted(), rho_s = s.rho.shifted_surface();
    const VecX nu = viscosity_samples(rho, ctx.params);
    const VecX nu_s = viscosity_samples(rho_s, ctx.params);
    const VecX u = b.Z * s.alpha;
    const VecX strain = b.Strain * s.alpha;
    const VecX gap = (b.TraceS0 - b.RigidS0) * s.alpha;
    const Vec3 l = b.rigid_ell(s.alpha), r = b.rigid_rot(s.alpha);

    double mass = g.mass * l.dot(phi_l) + (g.inertia * r).dot(phi_r);
    double body = -g.mass * l.cross(r).dot(phi_l) - (g.inertia * r).cross(r).dot(phi_r);
    double vol = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      const Vec3 y = d.volume_points.col(p);
      const Vec3 up = u.segment<3>(3 * p);
      const Vec3 pp = phi.segment<3>(3 * p);
      const Vec3 w = up - l - r.cross(y);
      Vec3 wgrad;  // (w . grad) phi
      for (int c = 0; c < 3; ++c) wgrad[c] = w.dot(Vec3(phi_grad.segment<3>(9 * p + 3 * c)));
      const double wr = d.volume_weights[p] * rho[p];
      mass += wr * up.dot(pp);
      vol += wr * (-up.dot(wgrad) + pp.dot(r.cross(up)));
      vol += 2.0 * d.volume_weights[p] * nu[p] * strain.segment<6>(6 * p).dot(phi_strain.segment<6>(6 * p));
    }
    double surf = 0.0;
    const Points w = (ctx.flux && ctx.flux->samples.size()) ? ctx.flux->at(s.t) : Points::Zero(3, m);
    for (Eigen::Index p = 0; p < m; ++p) {
      const Vec3 gp = gap.segment<3>(3 * p) - w.col(p);
      surf += 2.0 * a * d.surface_S0.weights[p] * nu_s[p] * gp.dot(Vec3(phi_gap.segment<3>(3 * p)));
    }
    const double ps = psi.value(s.t);
    res += tw[k] * (-psi.derivative(s.t) * mass + ps * (vol + body + surf));
    if (k == 0) res -= ps * mass;
    if (k + 1 == traj.size()) res += ps * mass;
  }
  return res;
}

double lagrange_identity_check(const Vec3& A, const Vec3& B, const Vec3& C, const Vec3& D) {
  return std::abs(A.cross(B).dot(C.cross(D)) - A.dot(C) * B.dot(D) + A.dot(D) * B.dot(C));
}

double lagrange_identity_scale(const Vec3& A, const Vec3& B, const Vec3& C, const Vec3& D) {
  return A.norm() * B.norm() * C.norm() * D.norm();
}

SlipReductionResult slip_reduction_check(const Points& u, const Points& u_S, const Points& w,
                                         const Points& phi, const Points& phi_S,
                                         const Points& normals, double tol_div) {
  SlipReductionResult out;
  for (Eigen::Index p = 0; p < normals.cols(); ++p) {
    const Vec3 n = normals.col(p);
    const Vec3 g = u.col(p) - u_S.col(p) - w.col(p);
    const Vec3 f = phi.col(p) - phi_S.col(p);
    const double defect = std::max(std::abs(g.dot(n)), std::abs(f.dot(n)));
    out.max_normal_defect = std::max(out.max_normal_defect, defect);
    if (defect > tol_div) out.violations.push_back(static_cast<int>(p));
    out.max_residual = std::max(out.max_residual, std::abs(g.cross(n).dot(f.cross(n)) - g.dot(f)));
  }
  return out;
}

PressureField recover_pressure_from_residual(const Lattice& lat,
                                             const std::function<Vec3(const Vec3&)>& f,
                                             double degraded_tol) {
  PressureField out;
  out.lattice = &lat;
  const int n = lat.n;
  std::vector<int> local(lat.fluid_mask.size(), -1);
  std::vector<Vec3> F;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int c = lat.cell_index(i, j, k);
        if (!lat.fluid_mask[c]) continue;
        local[c] = static_cast<int>(out.cells.size());
        out.cells.push_back(c);
        F.push_back(f(lat.cell_center(i, j, k)));
      }
  const int nc = static_cast<int>(out.cells.size());
  out.p = VecX::Zero(nc);
  if (nc == 0) return out;

  // Edge equations (p_j - p_i) / h = (f_i + f_j) . e_d / 2.
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  std::vector<std::vector<int>> adj(nc);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int a = local[lat.cell_index(i, j, k)];
        if (a < 0) continue;
        const int nb[3] = {i + 1 < n ? local[lat.cell_index(i + 1, j, k)] : -1,
                           j + 1 < n ? local[lat.cell_index(i, j + 1, k)] : -1,
                           k + 1 < n ? local[lat.cell_index(i, j, k + 1)] : -1};
        for (int dd = 0; dd < 3; ++dd) {
          const int c = nb[dd];
          if (c < 0) continue;
          const int row = static_cast<int>(rhs.size());
          trip.emplace_back(row, a, -1.0 / lat.h);
          trip.emplace_back(row, c, 1.0 / lat.h);
          rhs.push_back(0.5 * (F[a][dd] + F[c][dd]));
          adj[a].push_back(c);
          adj[c].push_back(a);
        }
      }
  const Eigen::Map<const VecX> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  const double bnorm = b.norm();
  if (rhs.empty() || bnorm == 0.0) return out;

  // Pin one cell per connected component.
  std::vector<int> comp(nc, -1);
  std::vector<int> pinned;
  for (int s = 0; s < nc; ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(pinned.size());
    pinned.push_back(s);
    std::queue<int> q;
    q.push(s);
    comp[s] = id;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (comp[w] < 0) {
          comp[w] = id;
          q.push(w);
        }
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(rhs.size()), nc);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> AtA = A.transpose() * A;
  VecX Atb = A.transpose() * b;
  // Adds p_s^2 to the objective, which only fixes the free constant.
  for (int s : pinned) AtA.coeffRef(s, s) += 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(AtA);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::AssemblyNaN, "pressure system factorisation failed");
  out.p = solver.solve(Atb);
  // second pass removes what rounding left of the mean
  out.p.array() -= out.p.mean();
  out.p.array() -= out.p.mean();
  out.defect = (A * out.p - b).norm() / bnorm;
  if (out.defect > degraded_tol) {
    out.degraded = true;
    out.warning = "pressure recovery degraded: defect " + std::to_string(out.defect);
  }
  return out;
}

PressureField recover_pressure(const WeakContext& ctx, const TrajectorySnapshot& prev,
                               const TrajectorySnapshot& cur, const TrajectorySnapshot& next,
                               const std::function<double(const Vec3&)>& rho, double degraded_tol) {
  const GalerkinBasis& b = *ctx.basis;
  const double span = next.t - prev.t;
  const VecX dadt = span > 0.0 ? VecX((next.alpha - prev.alpha) / span) : VecX::Zero(b.N);
  const Vec3 l = b.rigid_ell(cur.alpha), r = b.rigid_rot(cur.alpha);
  const double h = ctx.disc->lattice.h;
  const auto nu_at = [&](const Vec3& y) { return viscosity_law(rho(y) + cur.rho.shift, ctx.params); };
  const auto f = [&](const Vec3& y) -> Vec3 {
    const CurlEval e = b.evaluate(cur.alpha, y, true, true);
    const Vec3 ut = b.velocity(dadt, y);
    const Vec3 w = e.value - l - r.cross(y);
    const double rh = rho(y) + cur.rho.shift;
    const double nu = nu_at(y);
    Vec3 out = nu * e.laplacian - rh * (ut + e.grad * w + r.cross(e.value));
    if (ctx.params.variable_viscosity) {
      Vec3 gnu;
      for (int d = 0; d < 3; ++d) {
        const Vec3 s = 0.5 * h * Vec3::Unit(d);
        gnu[d] = (nu_at(y + s) - nu_at(y - s)) / h;
      }
      out += (e.grad + e.grad.transpose()) * gnu;
    }
    return out;
  };
  return recover_pressure_from_residual(ctx.disc->lattice, f, degraded_tol);
}

}  // namespace slipfsi
