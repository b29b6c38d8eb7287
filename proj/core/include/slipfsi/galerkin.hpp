#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/bodyframe.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/propulsion.hpp"
#include "slipfsi/transport.hpp"
#include "slipfsi/types.hpp"

#include <string>
#include <vector>

namespace slipfsi {

struct PhysicalParams {
  double nu = 1.0;
  bool variable_viscosity = false;
  double nu1 = 0.5;
  double nu2 = 2.0;
  double alpha = 1.0;  // Navier slip coefficient
};

/// nu(eta) = nu1 + (nu2 - nu1) eta / (1 + eta), clamped to [nu1, nu2]; constant nu otherwise.
double viscosity_law(double rho, const PhysicalParams& p);
/// Samples the law and throws "viscosity bounds violated" on any value outside [nu1, nu2].
VecX viscosity_samples(const VecX& rho, const PhysicalParams& p);

/// (z_i, z_j)_H with fluid density rho at volume nodes (rho includes any shift).
MatX assemble_mass(const GalerkinBasis& basis, const FluidDiscretization& disc,
                   const RigidGeometry& geo, const VecX& rho);
MatX assemble_mass_fluid(const GalerkinBasis& basis, const FluidDiscretization& disc, const VecX& rho);
MatX assemble_mass_body(const GalerkinBasis& basis, const RigidGeometry& geo);

struct Dissipation {
  MatX viscous;  // -2 int nu D(z_i):D(z_j)
  MatX slip;     // -2 alpha oint nu (z_i - z_Si).(z_j - z_Sj)
  MatX total() const { return viscous + slip; }
};
/// nu_vol / nu_surf are viscosity samples at volume and body-surface nodes.
Dissipation assemble_dissipation(const GalerkinBasis& basis, const FluidDiscretization& disc,
                                 const VecX& nu_vol, const VecX& nu_surf, double alpha);

/// C_j = 2 alpha oint nu w.(z_j - z_Sj); w is 3 x m on body-surface nodes.
VecX assemble_forcing(const GalerkinBasis& basis, const FluidDiscretization& disc, const Points& w,
                      const VecX& nu_surf, double alpha);

/// Nonlinear vector B_N(u, v) in its literal form:
///   -sum_k v_k int [(rho (v - v_S).grad) z_k].z_j
///   + sum_{i,k} u_i v_k (-int det(rho r_i, z_k, z_j) + det(m l_i, r_k, l_j) + det(J0 r_i, r_k, r_j)).
VecX assemble_nonlinear(const GalerkinBasis& basis, const FluidDiscretization& disc,
                        const RigidGeometry& geo, const VecX& rho, const VecX& u, const VecX& v);

/// Contraction of the three determinant terms with u itself (zero in exact arithmetic).
double gyroscopic_contraction(const GalerkinBasis& basis, const FluidDiscretization& disc,
                              const RigidGeometry& geo, const VecX& rho, const VecX& u);

/// Relative velocity u - u_S at volume nodes (3 x n) for coefficients alpha.
Points relative_velocity_nodes(const GalerkinBasis& basis, const FluidDiscretization& disc,
                               const VecX& alpha);

/// Rows 3p..3p+2 hold (grad z_k)(y_p) w_p for every basis function k (3n x N).
MatX directional_derivative(const GalerkinBasis& basis, const Points& w);

/// Skew convection matrix K_jk = -1/2 int rho [z_j.(w.grad)z_k - z_k.(w.grad)z_j].
MatX assemble_convection_skew(const GalerkinBasis& basis, const FluidDiscretization& disc,
                              const VecX& rho, const Points& w);
/// Energy-neutral gyroscopic matrix for a frozen rotation rate r (and rho).
MatX assemble_gyroscopic(const GalerkinBasis& basis, const FluidDiscretization& disc,
                         const RigidGeometry& geo, const VecX& rho, const Vec3& r);

struct SimState {
  VecX alpha;
  DensityField rho;
  BodyPose pose;
  double t = 0.0;
};

struct LedgerRow {
  double t = 0.0;
  double E_fluid = 0.0;
  double E_body = 0.0;
  double D_visc = 0.0;    // cumulative 2 int int nu |D(u)|^2
  double D_slip = 0.0;    // cumulative alpha int oint nu |u - u_S|^2
  double W_budget = 0.0;  // cumulative alpha int oint nu |w|^2
  double slack = 0.0;     // E(0) + W - E - D_visc - D_slip
  // unweighted integrals for the bracketed inequality of the nu(rho) variant
  double strain_sq = 0.0;  // int int |D(u)|^2
  double gap_sq = 0.0;     // int oint |u - u_S|^2
  double flux_sq = 0.0;    // int oint |w|^2
  double bracket_budget = 0.0;  // E(0) + nu2 alpha flux_sq
  double bracket_slack = 0.0;   // budget - E - 2 nu1 strain_sq - nu1 alpha gap_sq
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
  double E0 = 0.0;
  double total_energy(std::size_t k) const { return rows[k].E_fluid + rows[k].E_body; }
};

/// Per-step diagnostics of a converged step.
struct StepDiagnostics {
  int picard_iterations = 0;
  double picard_residual = 0.0;
  double gyro_contraction = 0.0;  // literal determinant terms contracted with u_{n+1}
  double gyro_scale = 0.0;
  double trilinear_lhs = 0.0;     // int rho_bar ((u - u_S).grad u).u at the midpoint
  double trilinear_rhs = 0.0;     // 1/2 int (rho1 - rho0)/dt |u|^2
  double trilinear_scale = 0.0;   // int rho_bar |u - u_S| |grad u| |u|
  double rho_min = 0.0, rho_max = 0.0;
  double nu_min = 0.0, nu_max = 0.0;
  double mass = 0.0;
  double mass_min_eig = 0.0;
  double dissipation_max_eig = 0.0;
  int history_traces = 0;
};

struct StepOptions {
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
  bool resweep = true;             // re-advect density on every Picard sweep
  bool freeze_density = false;     // keep rho fixed (linear oracle runs)
  bool convection = true;
  bool gyroscopic = true;
  bool check_spectra = true;       // eigenvalue checks of M and A
};

/// Advances (alpha, rho, pose) by one step of the variable-mass implicit
/// midpoint scheme
///   M1 a1 - M0 a0 - 1/2 (M1 - M0) abar = dt [(A + K + G) abar + C(t + dt/2)],
/// with Picard iteration on the velocity that transports rho.
class GalerkinStepper {
 public:
  GalerkinStepper(const FluidDiscretization& disc, const RigidGeometry& geo,
                  const GalerkinBasis& basis, PhysicalParams params, PropulsionFlux flux,
                  DensityProfile rho0, double shift, double dt_sub_factor, StepOptions opts = {});

  const SimState& state() const { return state_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const DensityTransport& transport() const { return transport_; }
  const GalerkinRelativeVelocity& history() const { return history_; }
  const PhysicalParams& params() const { return params_; }
  const PropulsionFlux& flux() const { return flux_; }

  void set_initial(const VecX& alpha0);
  StepDiagnostics step(double dt);
  /// Same, ending exactly at t1 (avoids drift from accumulating dt).
  StepDiagnostics step_to(double t1);

  /// One application of the fixed-point map: given a trial end velocity v1,
  /// transport rho and solve the linear step; returns the new coefficients.
  VecX fixed_point_map(const VecX& v1, double dt) const;

  double energy(const VecX& alpha, const VecX& rho_shifted) const;

 private:
  struct Linearized {
    MatX M1, lhs, rhs_mat;
    VecX rhs_vec;
    Dissipation diss;
    VecX rho1, rho1_surf, rho_bar, nu_vol, nu_surf;
    DensityTransport::Proposal proposal;
  };
  Linearized linearize(const VecX& v1, double t1, const DensityTransport::Proposal* reuse) const;

  const FluidDiscretization* disc_;
  const RigidGeometry* geo_;
  const GalerkinBasis* basis_;
  PhysicalParams params_;
  PropulsionFlux flux_;
  StepOptions opts_;
  DensityTransport transport_;
  mutable GalerkinRelativeVelocity history_;
  SimState state_;
  EnergyLedger ledger_;
  MatX M_body_;
  MatX M0_;
};

/// H-orthogonal projection of a field (node samples plus rigid part) onto X_N.
VecX project_initial(const GalerkinBasis& basis, const FluidDiscretization& disc,
                     const RigidGeometry& geo, const VecX& rho, const FieldSamples& u0);

}  // namespace slipfsi
