#include "slipfsi/galerkin.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

namespace slipfsi {

namespace {

VecX repeat(const VecX& v, int k) {
  VecX out(v.size() * k);
  for (Eigen::Index p = 0; p < v.size(); ++p) out.segment(k * p, k).setConstant(v[p]);
  return out;
}

// Z^T diag(w) Y
MatX weighted_gram(const MatX& Z, const VecX& w, const MatX& Y) {
  return Z.transpose() * (Y.array().colwise() * w.array()).matrix();
}

bool finite(const MatX& m) { return m.allFinite(); }

void require_finite(const MatX& m, const char* what) {
  if (!finite(m)) throw Error(ErrorKind::AssemblyNaN, std::string("assembly NaN in ") + what);
}

MatX gap_matrix(const GalerkinBasis& b) { return b.TraceS0 - b.RigidS0; }

}  // namespace

MatX directional_derivative(const GalerkinBasis& b, const Points& w) {
  const Eigen::Index n = b.volume_nodes();
  MatX Dw = MatX::Zero(3 * n, b.N);
  for (Eigen::Index p = 0; p < n; ++p)
    for (int a = 0; a < 3; ++a)
      for (int d = 0; d < 3; ++d) Dw.row(3 * p + a) += w(d, p) * b.Grad.row(9 * p + 3 * a + d);
  return Dw;
}

double viscosity_law(double rho, const PhysicalParams& p) {
  if (!p.variable_viscosity) return p.nu;
  const double eta = std::max(rho, 0.0);
  const double v = p.nu1 + (p.nu2 - p.nu1) * eta / (1.0 + eta);
  return std::clamp(v, std::min(p.nu1, p.nu2), std::max(p.nu1, p.nu2));
}

VecX viscosity_samples(const VecX& rho, const PhysicalParams& p) {
  VecX nu(rho.size());
  const double lo = p.variable_viscosity ? p.nu1 : p.nu;
  const double hi = p.variable_viscosity ? p.nu2 : p.nu;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    nu[i] = viscosity_law(rho[i], p);
    if (!(nu[i] >= lo && nu[i] <= hi))
      throw Error(ErrorKind::ViscosityBounds,
                  "viscosity bounds violated: nu = " + std::to_string(nu[i]) + " at node " + std::to_string(i));
  }
  return nu;
}

MatX assemble_mass_fluid(const GalerkinBasis& basis, const FluidDiscretization& disc, const VecX& rho) {
  const VecX w = repeat(disc.volume_weights.cwiseProduct(rho), 3);
  MatX M = weighted_gram(basis.Z, w, basis.Z);
  M = (0.5 * (M + M.transpose())).eval();
  require_finite(M, "mass matrix");
  return M;
}

MatX assemble_mass_body(const GalerkinBasis& basis, const RigidGeometry& geo) {
  MatX M = geo.mass * basis.ell.transpose() * basis.ell + basis.rot.transpose() * geo.inertia * basis.rot;
  return 0.5 * (M + M.transpose());
}

MatX assemble_mass(const GalerkinBasis& basis, const FluidDiscretization& disc,
                   const RigidGeometry& geo, const VecX& rho) {
  return assemble_mass_fluid(basis, disc, rho) + assemble_mass_body(basis, geo);
}

Dissipation assemble_dissipation(const GalerkinBasis& basis, const FluidDiscretization& disc,
                                 const VecX& nu_vol, const VecX& nu_surf, double alpha) {
  if (alpha < 0.0) throw Error(ErrorKind::Config, "slip coefficient must be nonnegative");
  Dissipation d;
  const VecX wv = repeat(disc.volume_weights.cwiseProduct(nu_vol), 6);
  d.viscous = -2.0 * weighted_gram(basis.Strain, wv, basis.Strain);
  d.viscous = (0.5 * (d.viscous + d.viscous.transpose())).eval();
  const MatX gap = gap_matrix(basis);
  const VecX ws = repeat(disc.surface_S0.weights.cwiseProduct(nu_surf), 3);
  d.slip = -2.0 * alpha * weighted_gram(gap, ws, gap);
  d.slip = (0.5 * (d.slip + d.slip.transpose())).eval();
  require_finite(d.viscous, "dissipation matrix");
  require_finite(d.slip, "slip matrix");
  return d;
}

VecX assemble_forcing(const GalerkinBasis& basis, const FluidDiscretization& disc, const Points& w,
                      const VecX& nu_surf, double alpha) {
  if (w.size() == 0) return VecX::Zero(basis.N);
  check_tangential(w, disc.surface_S0);
  const VecX ws = repeat(disc.surface_S0.weights.cwiseProduct(nu_surf), 3);
  const Eigen::Map<const VecX> wv(w.data(), w.size());
  VecX C = 2.0 * alpha * gap_matrix(basis).transpose() * ws.cwiseProduct(wv);
  require_finite(C, "forcing vector");
  return C;
}

Points relative_velocity_nodes(const GalerkinBasis& basis, const FluidDiscretization& disc,
                               const VecX& alpha) {
  const VecX u = basis.Z * alpha;
  Points out = Eigen::Map<const Points>(u.data(), 3, disc.volume_size());
  const Vec3 ell = basis.rigid_ell(alpha), rot = basis.rigid_rot(alpha);
  for (Eigen::Index p = 0; p < out.cols(); ++p)
    out.col(p) -= ell + rot.cross(Vec3(disc.volume_points.col(p)));
  return out;
}

MatX assemble_convection_skew(const GalerkinBasis& basis, const FluidDiscretization& disc,
                              const VecX& rho, const Points& w) {
  const VecX wr = repeat(disc.volume_weights.cwiseProduct(rho), 3);
  const MatX P = weighted_gram(basis.Z, wr, directional_derivative(basis, w));
  MatX K = -0.5 * (P - P.transpose());
  require_finite(K, "convection matrix");
  return K;
}

MatX assemble_gyroscopic(const GalerkinBasis& basis, const FluidDiscretization& disc,
                         const RigidGeometry& geo, const VecX& rho, const Vec3& r) {
  const Eigen::Index n = disc.volume_size();
  const Mat3 H = hat(r);
  MatX Rz(3 * n, basis.N);
  for (Eigen::Index p = 0; p < n; ++p) Rz.middleRows<3>(3 * p) = H * basis.Z.middleRows<3>(3 * p);
  const VecX wr = repeat(disc.volume_weights.cwiseProduct(rho), 3);
  MatX G = -weighted_gram(basis.Z, wr, Rz);
  G += -geo.mass * basis.ell.transpose() * H * basis.ell;
  G += basis.rot.transpose() * hat(geo.inertia * r) * basis.rot;
  G = (0.5 * (G - G.transpose())).eval();
  require_finite(G, "gyroscopic matrix");
  return G;
}

namespace {

// Gyroscopic part of B_N(u, v) in literal form.
VecX gyroscopic_literal(const GalerkinBasis& basis, const FluidDiscretization& disc,
                        const RigidGeometry& geo, const VecX& rho, const VecX& u, const VecX& v) {
  const Eigen::Index n = disc.volume_size();
  const Vec3 ru = basis.rigid_rot(u), lu = basis.rigid_ell(u), rv = basis.rigid_rot(v);
  const VecX vf = basis.Z * v;
  VecX cross(3 * n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Vec3 vp = vf.segment<3>(3 * p);
    cross.segment<3>(3 * p) = (disc.volume_weights[p] * rho[p]) * ru.cross(vp);
  }
  // -int det(rho r_u, v, z_j) = -int rho z_j . (r_u x v)
  VecX B = -basis.Z.transpose() * cross;
  // det(m l_u, r_v, l_j) = m l_j . (l_u x r_v)
  B += geo.mass * basis.ell.transpose() * lu.cross(rv);
  // det(J0 r_u, r_v, r_j) = r_j . (J0 r_u x r_v)
  B += basis.rot.transpose() * (geo.inertia * ru).cross(rv);
  return B;
}

}  // namespace

VecX assemble_nonlinear(const GalerkinBasis& basis, const FluidDiscretization& disc,
                        const RigidGeometry& geo, const VecX& rho, const VecX& u, const VecX& v) {
  const Points wv = relative_velocity_nodes(basis, disc, v);
  const VecX wr = repeat(disc.volume_weights.cwiseProduct(rho), 3);
  const MatX P = weighted_gram(basis.Z, wr, directional_derivative(basis, wv));
  VecX B = -P * v + gyroscopic_literal(basis, disc, geo, rho, u, v);
  require_finite(B, "nonlinear vector");
  return B;
}

double gyroscopic_contraction(const GalerkinBasis& basis, const FluidDiscretization& disc,
                              const RigidGeometry& geo, const VecX& rho, const VecX& u) {
  return u.dot(gyroscopic_literal(basis, disc, geo, rho, u, u));
}

VecX project_initial(const GalerkinBasis& basis, const FluidDiscretization& disc,
                     const RigidGeometry& geo, const VecX& rho, const FieldSamples& u0) {
  const Eigen::Index n = disc.volume_size();
  VecX b = VecX::Zero(basis.N);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double w = disc.volume_weights[p] * rho[p];
    b += w * basis.Z.middleRows<3>(3 * p).transpose() * u0.values.col(p);
  }
  b += geo.mass * basis.ell.transpose() * u0.ell + basis.rot.transpose() * (geo.inertia * u0.rot);
  const MatX M = assemble_mass(basis, disc, geo, rho);
  Eigen::LLT<MatX> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::MassMatrixSingular, "mass matrix singular");
  return llt.solve(b);
}

GalerkinStepper::GalerkinStepper(const FluidDiscretization& disc, const RigidGeometry& geo,
                                 const GalerkinBasis& basis, PhysicalParams params,
                                 PropulsionFlux flux, DensityProfile rho0, double shift,
                                 double dt_sub_factor, StepOptions opts)
    : disc_(&disc),
      geo_(&geo),
      basis_(&basis),
      params_(params),
      flux_(std::move(flux)),
      opts_(opts),
      transport_(disc, std::move(rho0), shift, dt_sub_factor),
      history_(basis) {
  if (params_.alpha < 0.0) throw Error(ErrorKind::Config, "coupling.alpha must be nonnegative");
  if (flux_.samples.size() == 0) flux_.samples = Points::Zero(3, disc.surface_S0.size());
  check_tangential(flux_.samples, disc.surface_S0);
  M_body_ = assemble_mass_body(basis, geo);
  set_initial(VecX::Zero(basis.N));
}

double GalerkinStepper::energy(const VecX& alpha, const VecX& rho_shifted) const {
  return 0.5 * alpha.dot((assemble_mass_fluid(*basis_, *disc_, rho_shifted) + M_body_) * alpha);
}

void GalerkinStepper::set_initial(const VecX& alpha0) {
  if (alpha0.size() != basis_->N) throw Error(ErrorKind::Config, "initial coefficient size mismatch");
  state_ = SimState{};
  state_.alpha = alpha0;
  state_.rho = transport_.current();
  state_.t = 0.0;
  history_ = GalerkinRelativeVelocity(*basis_);
  history_.push(0.0, alpha0);
  M0_ = assemble_mass_fluid(*basis_, *disc_, state_.rho.shifted()) + M_body_;
  ledger_ = EnergyLedger{};
  LedgerRow row;
  row.E_fluid = 0.5 * alpha0.dot((M0_ - M_body_) * alpha0);
  row.E_body = 0.5 * alpha0.dot(M_body_ * alpha0);
  ledger_.E0 = row.E_fluid + row.E_body;
  ledger_.rows.push_back(row);
}

GalerkinStepper::Linearized GalerkinStepper::linearize(const VecX& v1, double t1,
                                                       const DensityTransport::Proposal* reuse) const {
  Linearized L;
  const double t0 = state_.t, dt = t1 - t0;
  const VecX& a0 = state_.alpha;
  if (opts_.freeze_density) {
    L.proposal.feet = transport_.feet();
    L.proposal.field = transport_.current();
    L.proposal.field.time = t1;
  } else if (reuse) {
    L.proposal = *reuse;
  } else {
    history_.replace_last(t1, v1);
    L.proposal = transport_.propose(history_, t0, t1);
  }
  const VecX rho0 = state_.rho.shifted(), rho0s = state_.rho.shifted_surface();
  L.rho1 = L.proposal.field.shifted();
  L.rho1_surf = L.proposal.field.shifted_surface();
  L.rho_bar = 0.5 * (rho0 + L.rho1);
  const VecX rho_bar_s = 0.5 * (rho0s + L.rho1_surf);
  L.nu_vol = viscosity_samples(L.rho_bar, params_);
  L.nu_surf = viscosity_samples(rho_bar_s, params_);

  L.M1 = assemble_mass_fluid(*basis_, *disc_, L.rho1) + M_body_;
  L.diss = assemble_dissipation(*basis_, *disc_, L.nu_vol, L.nu_surf, params_.alpha);
  const VecX C = assemble_forcing(*basis_, *disc_, flux_.at(t0 + 0.5 * dt), L.nu_surf, params_.alpha);

  const VecX vbar = 0.5 * (a0 + v1);
  MatX Lop = L.diss.total();
  if (opts_.convection)
    Lop += assemble_convection_skew(*basis_, *disc_, L.rho_bar,
                                    relative_velocity_nodes(*basis_, *disc_, vbar));
  if (opts_.gyroscopic)
    Lop += assemble_gyroscopic(*basis_, *disc_, *geo_, L.rho_bar, basis_->rigid_rot(vbar));

  const MatX dM = L.M1 - M0_;
  L.lhs = L.M1 - 0.25 * dM - 0.5 * dt * Lop;
  L.rhs_mat = M0_ + 0.25 * dM + 0.5 * dt * Lop;
  L.rhs_vec = L.rhs_mat * a0 + dt * C;
  require_finite(L.lhs, "step matrix");
  require_finite(L.rhs_vec, "step right-hand side");
  return L;
}

VecX GalerkinStepper::fixed_point_map(const VecX& v1, double dt) const {
  history_.push(state_.t + dt, v1);
  try {
    const Linearized L = linearize(v1, state_.t + dt, nullptr);
    history_.pop();
    return L.lhs.partialPivLu().solve(L.rhs_vec);
  } catch (...) {
    history_.pop();
    throw;
  }
}

StepDiagnostics GalerkinStepper::step(double dt) { return step_to(state_.t + dt); }

StepDiagnostics GalerkinStepper::step_to(double t1) {
  const double t0 = state_.t, dt = t1 - t0;
  if (!(dt > 0.0)) throw Error(ErrorKind::Config, "time step must be positive");
  StepDiagnostics diag;
  const VecX a0 = state_.alpha;
  history_.push(t1, a0);

  VecX v1 = a0, a1 = a0;
  Linearized L;
  DensityTransport::Proposal first;
  bool have_first = false;
  for (int k = 1;; ++k) {
    const bool reuse = !opts_.resweep && have_first;
    L = linearize(v1, t1, reuse ? &first : nullptr);
    if (!have_first) {
      first = L.proposal;
      have_first = true;
    }
    Eigen::LLT<MatX> llt(L.M1);
    if (llt.info() != Eigen::Success) {
      history_.pop();
      throw Error(ErrorKind::MassMatrixSingular, "mass matrix singular after density update");
    }
    a1 = L.lhs.partialPivLu().solve(L.rhs_vec);
    if (!a1.allFinite()) {
      history_.pop();
      throw Error(ErrorKind::AssemblyNaN, "assembly NaN in step solve");
    }
    const double res = (a1 - v1).lpNorm<Eigen::Infinity>();
    v1 = a1;
    diag.picard_iterations = k;
    diag.picard_residual = res;
    if (res <= opts_.picard_tol) break;
    if (k >= opts_.picard_max_iter) {
      history_.pop();
      throw Error(ErrorKind::PicardStalled,
                  "picard stalled at t = " + std::to_string(t0) + " after " + std::to_string(k) +
                      " iterations (residual " + std::to_string(res) + "); reduce time.dt");
    }
  }
  history_.replace_last(t1, a1);
  diag.history_traces = L.proposal.escaped_to_history;

  const VecX abar = 0.5 * (a0 + a1);
  const VecX rho0_raw = state_.rho.values;
  DensityField rho1_field = L.proposal.field;
  if (!opts_.freeze_density) transport_.commit(std::move(L.proposal));

  state_.pose = integrate_pose(state_.pose, basis_->rigid_ell(abar), basis_->rigid_rot(abar), dt);
  state_.alpha = a1;
  state_.rho = rho1_field;
  state_.t = t1;

  // Ledger.
  const LedgerRow& prev = ledger_.rows.back();
  LedgerRow row;
  row.t = t1;
  row.E_fluid = 0.5 * a1.dot((L.M1 - M_body_) * a1);
  row.E_body = 0.5 * a1.dot(M_body_ * a1);
  row.D_visc = prev.D_visc - dt * abar.dot(L.diss.viscous * abar);
  row.D_slip = prev.D_slip - 0.5 * dt * abar.dot(L.diss.slip * abar);
  // Young's inequality is applied to the midpoint forcing, so the budget uses w(t + dt/2).
  const double tm = t0 + 0.5 * dt;
  row.W_budget = prev.W_budget + params_.alpha * dt * flux_square_integral(flux_, disc_->surface_S0, tm, L.nu_surf);
  row.slack = ledger_.E0 + row.W_budget - row.E_fluid - row.E_body - row.D_visc - row.D_slip;

  const VecX Dbar = basis_->Strain * abar;
  double strain = 0.0;
  for (Eigen::Index p = 0; p < disc_->volume_size(); ++p)
    strain += disc_->volume_weights[p] * Dbar.segment<6>(6 * p).squaredNorm();
  const VecX gbar = (basis_->TraceS0 - basis_->RigidS0) * abar;
  double gap = 0.0;
  for (Eigen::Index p = 0; p < disc_->surface_S0.size(); ++p)
    gap += disc_->surface_S0.weights[p] * gbar.segment<3>(3 * p).squaredNorm();
  row.strain_sq = prev.strain_sq + dt * strain;
  row.gap_sq = prev.gap_sq + dt * gap;
  row.flux_sq = prev.flux_sq + dt * flux_square_integral(flux_, disc_->surface_S0, tm);
  const double nlo = params_.variable_viscosity ? params_.nu1 : params_.nu;
  const double nhi = params_.variable_viscosity ? params_.nu2 : params_.nu;
  row.bracket_budget = ledger_.E0 + nhi * params_.alpha * row.flux_sq;
  row.bracket_slack = row.bracket_budget - row.E_fluid - row.E_body - 2.0 * nlo * row.strain_sq -
                      nlo * params_.alpha * row.gap_sq;
  ledger_.rows.push_back(row);
  M0_ = L.M1;

  // Diagnostics.
  diag.gyro_contraction = gyroscopic_contraction(*basis_, *disc_, *geo_, L.rho1, a1);
  {
    const Vec3 r = basis_->rigid_rot(a1), l = basis_->rigid_ell(a1);
    const VecX uf = basis_->Z * a1;
    double s = geo_->mass * l.squaredNorm() * r.norm() + (geo_->inertia * r).norm() * r.squaredNorm();
    for (Eigen::Index p = 0; p < disc_->volume_size(); ++p)
      s += disc_->volume_weights[p] * L.rho1[p] * r.norm() * uf.segment<3>(3 * p).squaredNorm();
    diag.gyro_scale = s;
  }
  {
    const Points wbar = relative_velocity_nodes(*basis_, *disc_, abar);
    const VecX ubar = basis_->Z * abar;
    const MatX Dw = directional_derivative(*basis_, wbar);
    const VecX conv = Dw * abar;
    const VecX grad = basis_->Grad * abar;
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (Eigen::Index p = 0; p < disc_->volume_size(); ++p) {
      const double w = disc_->volume_weights[p];
      const double un = ubar.segment<3>(3 * p).norm();
      const double c = L.rho_bar[p] * conv.segment<3>(3 * p).dot(ubar.segment<3>(3 * p));
      lhs += w * c;
      // size of the factors rather than of the product, which can vanish pointwise
      scale += w * L.rho_bar[p] * wbar.col(p).norm() * grad.segment<9>(9 * p).norm() * un;
      rhs += 0.5 * w * (rho1_field.values[p] - rho0_raw[p]) / dt * ubar.segment<3>(3 * p).squaredNorm();
    }
    diag.trilinear_lhs = lhs;
    diag.trilinear_rhs = rhs;
    diag.trilinear_scale = scale;
  }
  diag.rho_min = std::min(rho1_field.values.minCoeff(),
                          rho1_field.surface_values.size() ? rho1_field.surface_values.minCoeff() : 1e300);
  diag.rho_max = std::max(rho1_field.values.maxCoeff(),
                          rho1_field.surface_values.size() ? rho1_field.surface_values.maxCoeff() : -1e300);
  diag.nu_min = std::min(L.nu_vol.minCoeff(), L.nu_surf.minCoeff());
  diag.nu_max = std::max(L.nu_vol.maxCoeff(), L.nu_surf.maxCoeff());
  diag.mass = mass_integral(*disc_, rho1_field);
  if (opts_.check_spectra) {
    Eigen::SelfAdjointEigenSolver<MatX> em(L.M1, Eigen::EigenvaluesOnly);
    diag.mass_min_eig = em.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<MatX> ea(L.diss.total(), Eigen::EigenvaluesOnly);
    diag.dissipation_max_eig = ea.eigenvalues().maxCoeff();
  }
  return diag;
}

}  // namespace slipfsi
