#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace slipfsi {

/// Initial density, defined on all of R^3 (inflow through the outer sphere
/// reads it outside B_R), with its infimum and supremum.
struct DensityProfile {
  std::function<double(const Vec3&)> f;
  double lo = 1.0;
  double hi = 1.0;
  std::string name = "constant";

  double operator()(const Vec3& y) const { return f(y); }
};

DensityProfile constant_density(double value);
/// mid + half * tanh((y . axis) / width), values in (mid - half, mid + half).
DensityProfile stratified_density(double lo, double hi, double width, const Vec3& axis);
/// mid + half * tanh((|y| - radius) / width), lo inside and hi outside.
DensityProfile radial_density(double lo, double hi, double radius, double width);
/// `inner` for |y| < radius, `outer` beyond.
DensityProfile two_layer_density(double inner, double outer, double radius);

/// Relative velocity v - v_S as a function of (point, time).
class RelativeVelocity {
 public:
  virtual ~RelativeVelocity() = default;
  virtual Vec3 operator()(const Vec3& y, double t) const = 0;
};

class FunctionRelativeVelocity final : public RelativeVelocity {
 public:
  explicit FunctionRelativeVelocity(std::function<Vec3(const Vec3&, double)> f) : f_(std::move(f)) {}
  Vec3 operator()(const Vec3& y, double t) const override { return f_(y, t); }

 private:
  std::function<Vec3(const Vec3&, double)> f_;
};

/// Galerkin relative velocity, piecewise linear in time between stored
/// coefficient vectors. Beyond R the fluid part vanishes and the rigid part
/// uses chi_R(y).
class GalerkinRelativeVelocity final : public RelativeVelocity {
 public:
  explicit GalerkinRelativeVelocity(const GalerkinBasis& basis) : basis_(&basis) {}

  void push(double t, const VecX& alpha);
  /// Replaces the newest level (used for trial Picard iterates).
  void replace_last(double t, const VecX& alpha);
  void pop();
  std::size_t levels() const { return times_.size(); }
  double last_time() const { return times_.back(); }

  Vec3 operator()(const Vec3& y, double t) const override;
  Vec3 at_level(const Vec3& y, std::size_t k) const;

 private:
  struct Level {
    std::array<VectorPotential, kCutoffKinds> pots;
    Vec3 ell, rot;
  };
  Level make_level(const VecX& alpha) const;
  Vec3 eval(const Level& L0, const Level* L1, double theta, const Vec3& y) const;

  const GalerkinBasis* basis_;
  std::vector<double> times_;
  std::vector<Level> levels_;
};

/// Foot Y(t0) of the backward characteristic through (x, t), classical RK4
/// with at most dt_sub per substep.
Vec3 trace_characteristic(const Vec3& x, double t, const RelativeVelocity& rel, double dt_sub,
                          double t0 = 0.0);

/// Density samples at volume and body-surface nodes. `shift` is the positivity
/// shift carried by the dynamics; `values` exclude it.
struct DensityField {
  VecX values;
  VecX surface_values;
  double lo0 = 0.0;
  double hi0 = 0.0;
  double shift = 0.0;
  double time = 0.0;

  VecX shifted() const { return values.array() + shift; }
  VecX shifted_surface() const { return surface_values.array() + shift; }
};

/// Spectral interpolation of a vector field sampled on the spherical grid:
/// Lagrange in r and cos(theta), trigonometric interpolation in phi, with the parity
/// factor sin(theta) removed from odd azimuthal modes before interpolating.
class SphericalInterpolator {
 public:
  SphericalInterpolator() = default;
  SphericalInterpolator(const SphericalGrid& grid, const Points& values);
  Vec3 operator()(const Vec3& y) const;

 private:
  const SphericalGrid* grid_ = nullptr;
  int modes_ = 0;
  std::vector<double> bary_r_, bary_mu_;
  std::vector<double> inv_sin_;       // 1/sin(theta) at mu nodes
  std::vector<Vec3> cos_coef_, sin_coef_;  // [(ir * n_mu + im) * modes + m]
};

/// Evolves rho by composing rho_0 with the accumulated backward characteristic
/// map X(y, t) (the foot at time 0). On the spherical grid X is advanced one
/// step at a time through spectral interpolation; other discretizations trace
/// the full history.
class DensityTransport {
 public:
  DensityTransport(const FluidDiscretization& disc, DensityProfile rho0, double shift,
                   double dt_sub_factor = 0.25);

  const DensityField& current() const { return field_; }
  const DensityProfile& profile() const { return rho0_; }
  const Points& feet() const { return feet_; }

  struct Proposal {
    Points feet;
    DensityField field;
    int escaped_to_history = 0;
  };
  /// Density at t1 given the relative velocity on [0, t1]; state is untouched.
  Proposal propose(const RelativeVelocity& rel, double t0, double t1) const;
  void commit(Proposal&& p);

  /// Density at arbitrary points of F_0 at the committed time.
  VecX sample(const Points& pts) const;

 private:
  Vec3 foot_from(const Vec3& y, double t0, const RelativeVelocity& rel, double dt_sub,
                 int& escaped) const;
  Vec3 project_into_fluid(const Vec3& y, std::size_t node) const;

  const FluidDiscretization* disc_;
  DensityProfile rho0_;
  double dt_sub_factor_;
  Points tracked_;  // volume nodes then body-surface nodes
  Points feet_;
  DensityField field_;
  SphericalInterpolator interp_;
};

DensityField make_density_field(const FluidDiscretization& disc, const DensityProfile& rho0,
                                double shift);

/// Density after transport to time t by rel, with substep dt_sub.
DensityField advect_density(const FluidDiscretization& disc, const DensityProfile& rho0,
                            const RelativeVelocity& rel, double t, double dt_sub);

/// int_{F_0} rho, unshifted.
double mass_integral(const FluidDiscretization& disc, const DensityField& rho);

/// Space-time test function phi(y, t) with its time derivative and gradient.
struct SpaceTimeTest {
  std::function<double(const Vec3&, double)> value;
  std::function<double(const Vec3&, double)> dt;
  std::function<Vec3(const Vec3&, double)> grad;
};

struct RenormalizedResult {
  double residual = 0.0;
  double phi_norm = 0.0;  // space-time L2 norm of phi
};

/// |[int b(rho) phi]_0^T - int int b(rho) (phi_t + (u - u_S) . grad phi)| with
/// trapezoid in time over the snapshot times.
RenormalizedResult renormalized_residual(const FluidDiscretization& disc,
                                         const std::function<double(double)>& b,
                                         const std::vector<DensityField>& snapshots,
                                         const RelativeVelocity& rel, const SpaceTimeTest& phi);

}  // namespace slipfsi
