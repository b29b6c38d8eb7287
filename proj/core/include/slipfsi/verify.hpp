#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/galerkin.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/propulsion.hpp"
#include "slipfsi/transport.hpp"
#include "slipfsi/types.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace slipfsi {

/// Stored state of a trajectory at one time level.
struct TrajectorySnapshot {
  double t = 0.0;
  VecX alpha;
  DensityField rho;
};

/// Everything the weak form needs besides the trajectory.
struct WeakContext {
  const GalerkinBasis* basis = nullptr;
  const FluidDiscretization* disc = nullptr;
  const RigidGeometry* geo = nullptr;
  PhysicalParams params;
  const PropulsionFlux* flux = nullptr;
};

/// psi(t) = c0 + c1 t + c2 t^2 + c3 t^3.
struct TimePolynomial {
  std::array<double, 4> c{1.0, 0.0, 0.0, 0.0};
  double value(double t) const { return c[0] + t * (c[1] + t * (c[2] + t * c[3])); }
  double derivative(double t) const { return c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]); }
};

/// The weak relation tested against every basis function z_j at once, split by
/// term. Each member is an N-vector; the residual is their sum.
///   inertia      [psi (u, z_j)_H]_0^T - int psi' (u, z_j)_H
///   convection   - int psi int rho u . ((u - u_S) . grad) z_j
///   determinant  int psi [int det(rho r, u, z_j) - (m l x r) . l_j - (J0 r x r) . r_j]
///   dissipation  int psi [2 int nu D(u):D(z_j) + 2 alpha oint nu (u - u_S).(z_j - z_Sj)]
///   propulsion   - int psi 2 alpha oint nu w . (z_j - z_Sj)
/// Time integrals use the trapezoid rule over the snapshot times.
struct WeakTerms {
  VecX inertia, convection, determinant, dissipation, propulsion;
  VecX total() const { return inertia + convection + determinant + dissipation + propulsion; }
  /// Sum of the absolute term values, per test function.
  VecX scale() const {
    return inertia.cwiseAbs() + convection.cwiseAbs() + determinant.cwiseAbs() +
           dissipation.cwiseAbs() + propulsion.cwiseAbs();
  }
};

WeakTerms weak_terms(const WeakContext& ctx, const std::vector<TrajectorySnapshot>& traj,
                     const TimePolynomial& psi);

/// Single-pass evaluation of the same relation for the test function
/// phi = xi psi(t), xi = sum_j xi_j z_j. Returns the signed residual.
double weak_residual(const WeakContext& ctx, const std::vector<TrajectorySnapshot>& traj,
                     const VecX& xi, const TimePolynomial& psi);

/// |(A x B).(C x D) - (A.C)(B.D) + (A.D)(B.C)|
double lagrange_identity_check(const Vec3& A, const Vec3& B, const Vec3& C, const Vec3& D);
/// |A| |B| |C| |D|, the natural size of either side.
double lagrange_identity_scale(const Vec3& A, const Vec3& B, const Vec3& C, const Vec3& D);

struct SlipReductionResult {
  double max_residual = 0.0;   // max over nodes of |[g x n].[f x n] - g.f|
  double max_normal_defect = 0.0;
  std::vector<int> violations;  // nodes with a normal defect above tol_div
};

/// Nodewise check of [(u - u_S - w) x n].[(phi - phi_S) x n] = (u - u_S - w).(phi - phi_S).
/// All inputs are 3 x m; u_S and phi_S are the rigid traces.
SlipReductionResult slip_reduction_check(const Points& u, const Points& u_S, const Points& w,
                                         const Points& phi, const Points& phi_S,
                                         const Points& normals, double tol_div = 1e-10);

struct PressureField {
  const Lattice* lattice = nullptr;
  std::vector<int> cells;  // lattice cell indices in the fluid
  VecX p;                  // value per listed cell, zero mean
  double defect = 0.0;     // ||grad_h p - f|| / ||f||
  bool degraded = false;
  std::string warning;
};

/// Least-squares solution of grad p = f on the fluid cells of the lattice:
/// edge differences between neighbouring fluid cells are matched to the
/// averaged f, and p is normalised to zero mean.
PressureField recover_pressure_from_residual(const Lattice& lattice,
                                             const std::function<Vec3(const Vec3&)>& f,
                                             double degraded_tol = 0.25);

/// Momentum residual field at snapshot `cur` (time derivative by central
/// differences of the neighbours) and its recovered pressure.
///   f = div(2 nu D(u)) - rho (u_t + ((u - u_S) . grad) u + r x u)
PressureField recover_pressure(const WeakContext& ctx, const TrajectorySnapshot& prev,
                               const TrajectorySnapshot& cur, const TrajectorySnapshot& next,
                               const std::function<double(const Vec3&)>& rho,
                               double degraded_tol = 0.25);

}  // namespace slipfsi
