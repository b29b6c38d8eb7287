#include "slipfsi/transport.hpp"

#include "slipfsi/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace slipfsi {

DensityProfile constant_density(double value) {
  DensityProfile p;
  p.f = [value](const Vec3&) { return value; };
  p.lo = p.hi = value;
  p.name = "constant";
  return p;
}

DensityProfile stratified_density(double lo, double hi, double width, const Vec3& axis) {
  if (!(width > 0.0)) throw Error(ErrorKind::Config, "stratification width must be positive");
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  const Vec3 e = axis.normalized();
  DensityProfile p;
  p.f = [=](const Vec3& y) { return mid + half * std::tanh(e.dot(y) / width); };
  p.lo = std::min(lo, hi);
  p.hi = std::max(lo, hi);
  p.name = "stratified";
  return p;
}

DensityProfile radial_density(double lo, double hi, double radius, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::Config, "radial density width must be positive");
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  DensityProfile p;
  p.f = [=](const Vec3& y) { return mid + half * std::tanh((y.norm() - radius) / width); };
  p.lo = std::min(lo, hi);
  p.hi = std::max(lo, hi);
  p.name = "radial";
  return p;
}

DensityProfile two_layer_density(double inner, double outer, double radius) {
  DensityProfile p;
  const double r2 = radius * radius;
  p.f = [=](const Vec3& y) { return y.squaredNorm() < r2 ? inner : outer; };
  p.lo = std::min(inner, outer);
  p.hi = std::max(inner, outer);
  p.name = "two_layer";
  return p;
}

GalerkinRelativeVelocity::Level GalerkinRelativeVelocity::make_level(const VecX& alpha) const {
  Level L;
  L.pots = basis_->collapse(alpha);
  L.ell = basis_->rigid_ell(alpha);
  L.rot = basis_->rigid_rot(alpha);
  return L;
}

void GalerkinRelativeVelocity::push(double t, const VecX& alpha) {
  if (!times_.empty() && !(t > times_.back()))
    throw Error(ErrorKind::Config, "relative velocity levels must have increasing times");
  times_.push_back(t);
  levels_.push_back(make_level(alpha));
}

void GalerkinRelativeVelocity::replace_last(double t, const VecX& alpha) {
  times_.back() = t;
  levels_.back() = make_level(alpha);
}

void GalerkinRelativeVelocity::pop() {
  times_.pop_back();
  levels_.pop_back();
}

Vec3 GalerkinRelativeVelocity::eval(const Level& L0, const Level* L1, double theta,
                                    const Vec3& y) const {
  const double a = basis_->a, R = basis_->R;
  Vec3 ell = L0.ell, rot = L0.rot;
  if (L1) {
    ell = (1.0 - theta) * L0.ell + theta * L1->ell;
    rot = (1.0 - theta) * L0.rot + theta * L1->rot;
  }
  const double s = y.squaredNorm();
  if (s >= R * R) return -(ell + rot.cross(chi_R(y, R)));
  CurlEval out;
  for (int k = 0; k < kCutoffKinds; ++k) {
    if (!L1) {
      CurlEval e = eval_curl(static_cast<CutoffKind>(k), L0.pots[k], y, a, R, false, false);
      out.value += e.value;
      continue;
    }
    VectorPotential P = L0.pots[k];
    for (int comp = 0; comp < 3; ++comp) {
      P[comp].axpy(-theta, L0.pots[k][comp]);
      P[comp].axpy(theta, L1->pots[k][comp]);
    }
    out.value += eval_curl(static_cast<CutoffKind>(k), P, y, a, R, false, false).value;
  }
  return out.value - (ell + rot.cross(y));
}

Vec3 GalerkinRelativeVelocity::at_level(const Vec3& y, std::size_t k) const {
  return eval(levels_.at(k), nullptr, 0.0, y);
}

Vec3 GalerkinRelativeVelocity::operator()(const Vec3& y, double t) const {
  if (levels_.empty()) return Vec3::Zero();
  if (levels_.size() == 1 || t <= times_.front()) return eval(levels_.front(), nullptr, 0.0, y);
  if (t >= times_.back()) return eval(levels_.back(), nullptr, 0.0, y);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k1 = static_cast<std::size_t>(it - times_.begin());
  const std::size_t k0 = k1 - 1;
  const double theta = (t - times_[k0]) / (times_[k1] - times_[k0]);
  return eval(levels_[k0], &levels_[k1], theta, y);
}

Vec3 trace_characteristic(const Vec3& x, double t, const RelativeVelocity& rel, double dt_sub,
                          double t0) {
  if (!(t > t0)) return x;
  if (!(dt_sub > 0.0)) throw Error(ErrorKind::Config, "dt_sub must be positive");
  const int n = std::max(1, static_cast<int>(std::ceil((t - t0) / dt_sub - 1e-12)));
  const double h = -(t - t0) / n;
  Vec3 y = x;
  double s = t;
  for (int i = 0; i < n; ++i) {
    const Vec3 k1 = rel(y, s);
    const Vec3 k2 = rel(y + 0.5 * h * k1, s + 0.5 * h);
    const Vec3 k3 = rel(y + 0.5 * h * k2, s + 0.5 * h);
    const Vec3 k4 = rel(y + h * k3, s + h);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s = t + (i + 1) * h;
  }
  return y;
}

SphericalInterpolator::SphericalInterpolator(const SphericalGrid& grid, const Points& values)
    : grid_(&grid) {
  const int nr = grid.n_r(), nm = grid.n_mu(), np = grid.n_phi();
  modes_ = np / 2 + 1;  // the last one is the Nyquist mode, a pure sine on the offset grid
  bary_r_ = barycentric_weights(grid.r);
  bary_mu_ = barycentric_weights(grid.mu);
  inv_sin_.resize(nm);
  for (int im = 0; im < nm; ++im) inv_sin_[im] = 1.0 / std::sqrt(1.0 - grid.mu[im] * grid.mu[im]);
  cos_coef_.assign(static_cast<std::size_t>(nr) * nm * modes_, Vec3::Zero());
  sin_coef_.assign(cos_coef_.size(), Vec3::Zero());
  for (int ir = 0; ir < nr; ++ir)
    for (int im = 0; im < nm; ++im)
      for (int m = 0; m < modes_; ++m) {
        Vec3 c = Vec3::Zero(), s = Vec3::Zero();
        for (int ip = 0; ip < np; ++ip) {
          const Vec3 f = values.col(grid.index(ir, im, ip));
          c += std::cos(m * grid.phi[ip]) * f;
          s += std::sin(m * grid.phi[ip]) * f;
        }
        const bool nyquist = 2 * m == np;
        const double scale = (m == 0 || nyquist ? 1.0 : 2.0) / np * ((m % 2) ? inv_sin_[im] : 1.0);
        const std::size_t k = (static_cast<std::size_t>(ir) * nm + im) * modes_ + m;
        cos_coef_[k] = nyquist ? Vec3::Zero() : Vec3(scale * c);
        sin_coef_[k] = scale * s;
      }
}

Vec3 SphericalInterpolator::operator()(const Vec3& y) const {
  const SphericalGrid& g = *grid_;
  const int nr = g.n_r(), nm = g.n_mu();
  const double r = y.norm();
  const double mu = std::clamp(y.z() / r, -1.0, 1.0);
  const double phi = std::atan2(y.y(), y.x());
  const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  thread_local std::vector<double> Lr, Lm;
  lagrange_basis(g.r, bary_r_, r, Lr);
  lagrange_basis(g.mu, bary_mu_, mu, Lm);
  thread_local std::vector<Vec3> C, S;
  C.assign(modes_, Vec3::Zero());
  S.assign(modes_, Vec3::Zero());
  for (int ir = 0; ir < nr; ++ir) {
    if (Lr[ir] == 0.0) continue;
    for (int im = 0; im < nm; ++im) {
      const double w = Lr[ir] * Lm[im];
      if (w == 0.0) continue;
      const std::size_t base = (static_cast<std::size_t>(ir) * nm + im) * modes_;
      for (int m = 0; m < modes_; ++m) {
        C[m] += w * cos_coef_[base + m];
        S[m] += w * sin_coef_[base + m];
      }
    }
  }
  Vec3 out = Vec3::Zero();
  for (int m = 0; m < modes_; ++m) {
    const double f = (m % 2) ? st : 1.0;
    out += f * (std::cos(m * phi) * C[m] + std::sin(m * phi) * S[m]);
  }
  return out;
}

DensityField make_density_field(const FluidDiscretization& disc, const DensityProfile& rho0,
                                double shift) {
  DensityField f;
  f.values.resize(disc.volume_size());
  for (Eigen::Index p = 0; p < disc.volume_size(); ++p) f.values[p] = rho0(disc.volume_points.col(p));
  f.surface_values.resize(disc.surface_S0.size());
  for (Eigen::Index p = 0; p < disc.surface_S0.size(); ++p)
    f.surface_values[p] = rho0(disc.surface_S0.points.col(p));
  f.lo0 = rho0.lo;
  f.hi0 = rho0.hi;
  f.shift = shift;
  if (rho0.lo < 0.0) throw Error(ErrorKind::DensityNegative, "density negative in initial profile");
  return f;
}

DensityTransport::DensityTransport(const FluidDiscretization& disc, DensityProfile rho0,
                                   double shift, double dt_sub_factor)
    : disc_(&disc), rho0_(std::move(rho0)), dt_sub_factor_(dt_sub_factor) {
  if (!(dt_sub_factor > 0.0 && dt_sub_factor <= 1.0))
    throw Error(ErrorKind::Config, "transport.dt_sub_factor must lie in (0, 1]");
  const Eigen::Index n = disc.volume_size(), m = disc.surface_S0.size();
  tracked_.resize(3, n + m);
  tracked_.leftCols(n) = disc.volume_points;
  tracked_.rightCols(m) = disc.surface_S0.points;
  feet_ = tracked_;
  field_ = make_density_field(disc, rho0_, shift);
  if (disc.spherical) interp_ = SphericalInterpolator(*disc.spherical, feet_.leftCols(n));
}

Vec3 DensityTransport::project_into_fluid(const Vec3& y, std::size_t node) const {
  const double d = shape_signed_distance(disc_->shape, y);
  if (d >= 0.0) return y;
  if (-d > 0.1 * disc_->h_grid)
    throw Error(ErrorKind::CharacteristicEscape,
                "characteristic escape at node " + std::to_string(node) + ": foot lies " +
                    std::to_string(-d) + " inside the body");
  if (const auto* s = std::get_if<Sphere>(&disc_->shape)) {
    const Vec3 r = y - s->center;
    return s->center + (s->radius / r.norm()) * r;
  }
  return y;
}

DensityTransport::Proposal DensityTransport::propose(const RelativeVelocity& rel, double t0,
                                                     double t1) const {
  Proposal p;
  const double dt_sub = dt_sub_factor_ * (t1 - t0);
  const Eigen::Index n = disc_->volume_size();
  const Eigen::Index total = tracked_.cols();
  p.feet.resize(3, total);
  const double R2 = disc_->R * disc_->R;
  for (Eigen::Index i = 0; i < total; ++i) {
    const Vec3 x = tracked_.col(i);
    if (!disc_->spherical) {
      p.feet.col(i) = trace_characteristic(x, t1, rel, dt_sub, 0.0);
      continue;
    }
    Vec3 y = trace_characteristic(x, t1, rel, dt_sub, t0);
    if (y == x) {
      // Stagnant node: the map is unchanged.
      p.feet.col(i) = feet_.col(i);
      continue;
    }
    if (y.squaredNorm() >= R2) {
      // Came in through the outer sphere during this step: trace the whole history.
      p.feet.col(i) = t0 > 0.0 ? trace_characteristic(y, t0, rel, dt_sub, 0.0) : y;
      ++p.escaped_to_history;
      continue;
    }
    y = project_into_fluid(y, static_cast<std::size_t>(i));
    p.feet.col(i) = t0 > 0.0 ? interp_(y) : y;
  }
  p.field = field_;
  p.field.time = t1;
  for (Eigen::Index i = 0; i < n; ++i) p.field.values[i] = rho0_(p.feet.col(i));
  for (Eigen::Index i = n; i < total; ++i) p.field.surface_values[i - n] = rho0_(p.feet.col(i));
  return p;
}

void DensityTransport::commit(Proposal&& p) {
  feet_ = std::move(p.feet);
  field_ = std::move(p.field);
  if (disc_->spherical)
    interp_ = SphericalInterpolator(*disc_->spherical, feet_.leftCols(disc_->volume_size()));
}

VecX DensityTransport::sample(const Points& pts) const {
  VecX out(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Vec3 y = pts.col(i);
    if (disc_->spherical) {
      out[i] = field_.time > 0.0 ? rho0_(interp_(y)) : rho0_(y);
    } else {
      Eigen::Index best = 0;
      (disc_->volume_points.colwise() - y).colwise().squaredNorm().minCoeff(&best);
      out[i] = field_.values[best];
    }
  }
  return out;
}

DensityField advect_density(const FluidDiscretization& disc, const DensityProfile& rho0,
                            const RelativeVelocity& rel, double t, double dt_sub) {
  DensityTransport tr(disc, rho0, 0.0, 1.0);
  if (!(t > 0.0)) return tr.current();
  if (disc.spherical) {
    // Advance the characteristic map one substep at a time.
    const int n = std::max(1, static_cast<int>(std::ceil(t / dt_sub - 1e-12)));
    for (int k = 0; k < n; ++k) tr.commit(tr.propose(rel, t * k / n, t * (k + 1) / n));
    return tr.current();
  }
  DensityField f = tr.current();
  for (Eigen::Index p = 0; p < disc.volume_size(); ++p)
    f.values[p] = rho0(trace_characteristic(disc.volume_points.col(p), t, rel, dt_sub));
  for (Eigen::Index p = 0; p < disc.surface_S0.size(); ++p)
    f.surface_values[p] = rho0(trace_characteristic(disc.surface_S0.points.col(p), t, rel, dt_sub));
  f.time = t;
  return f;
}

double mass_integral(const FluidDiscretization& disc, const DensityField& rho) {
  return disc.volume_weights.dot(rho.values);
}

RenormalizedResult renormalized_residual(const FluidDiscretization& disc,
                                         const std::function<double(double)>& b,
                                         const std::vector<DensityField>& snapshots,
                                         const RelativeVelocity& rel, const SpaceTimeTest& phi) {
  RenormalizedResult out;
  if (snapshots.empty()) return out;
  const Eigen::Index n = disc.volume_size();
  auto boundary = [&](const DensityField& f) {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      const Vec3 y = disc.volume_points.col(p);
      s += disc.volume_weights[p] * b(f.values[p]) * phi.value(y, f.time);
    }
    return s;
  };
  std::vector<double> bulk(snapshots.size()), sq(snapshots.size());
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const DensityField& f = snapshots[k];
    double s = 0.0, q = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      const Vec3 y = disc.volume_points.col(p);
      const double v = phi.value(y, f.time);
      s += disc.volume_weights[p] * b(f.values[p]) * (phi.dt(y, f.time) + rel(y, f.time).dot(phi.grad(y, f.time)));
      q += disc.volume_weights[p] * v * v;
    }
    bulk[k] = s;
    sq[k] = q;
  }
  double integral = 0.0, norm2 = 0.0;
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    const double h = snapshots[k].time - snapshots[k - 1].time;
    integral += 0.5 * h * (bulk[k] + bulk[k - 1]);
    norm2 += 0.5 * h * (sq[k] + sq[k - 1]);
  }
  out.residual = std::abs(boundary(snapshots.back()) - boundary(snapshots.front()) - integral);
  out.phi_norm = std::sqrt(norm2);
  return out;
}

}  // namespace slipfsi
