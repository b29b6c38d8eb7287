#pragma once

#include "slipfsi/geometry.hpp"
#include "slipfsi/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace slipfsi {

/// Radial cutoff profiles in t = (|y|^2 - a^2) / (R^2 - a^2).
///   Lift:     1 at the body with zero slope, 0 at R with zero slope.
///   Slip:     0 at the body with unit slope, 0 at R with zero slope.
///   Interior: 0 with zero slope at both ends.
enum class CutoffKind { Lift = 0, Slip = 1, Interior = 2 };
constexpr int kCutoffKinds = 3;

/// Scalar quadratic c0 + b.y + y^T Q y (Q symmetric).
struct QuadPoly {
  double c0 = 0.0;
  Vec3 b = Vec3::Zero();
  Mat3 Q = Mat3::Zero();

  double value(const Vec3& y) const { return c0 + b.dot(y) + y.dot(Q * y); }
  Vec3 grad(const Vec3& y) const { return b + 2.0 * (Q * y); }
  QuadPoly& axpy(double s, const QuadPoly& o) {
    c0 += s * o.c0;
    b += s * o.b;
    Q += s * o.Q;
    return *this;
  }
};

using VectorPotential = std::array<QuadPoly, 3>;

/// Candidate field z = curl(eta_kind(|y|^2) A(y)).
struct Candidate {
  CutoffKind kind = CutoffKind::Interior;
  VectorPotential A{};
  Vec3 ell = Vec3::Zero();  // rigid part on S_0
  Vec3 rot = Vec3::Zero();
  std::string label;
};

/// Cutoff eta and its first three derivatives with respect to s = |y|^2.
struct CutoffValues {
  double eta = 0, d1 = 0, d2 = 0, d3 = 0;
};
CutoffValues cutoff(CutoffKind kind, double s, double a, double R);

/// Value, gradient (grad(a, d) = d z_a / d y_d) and Laplacian of curl(eta A).
struct CurlEval {
  Vec3 value = Vec3::Zero();
  Mat3 grad = Mat3::Zero();
  Vec3 laplacian = Vec3::Zero();
};
CurlEval eval_curl(CutoffKind kind, const VectorPotential& A, const Vec3& y, double a, double R,
                   bool want_grad = true, bool want_laplacian = false);

/// Candidate list in a fixed order: three rotation-free translation lifts, three
/// rotation lifts, then slip and interior modes of increasing potential degree.
std::vector<Candidate> make_candidates(int potential_order);

/// One basis function sampled on a discretization.
struct BasisFunction {
  Points values;           // at volume nodes
  std::vector<Mat3> gradients;
  Vec3 ell = Vec3::Zero();
  Vec3 rot = Vec3::Zero();
  Points trace_S0;         // fluid-side values at body surface nodes
  Points strain_trace_S0;  // D(z) n at body surface nodes
};

/// Samples of a field plus its rigid part, as used by the H inner product.
struct FieldSamples {
  Points values;
  Vec3 ell = Vec3::Zero();
  Vec3 rot = Vec3::Zero();
};

struct BasisOptions {
  int N = 20;
  int potential_order = 2;
  double dependence_tol = 1e-10;  // relative squared norm left after projection
};

/// Orthonormal divergence-free Galerkin basis sampled on a fixed discretization.
///
/// Sample layouts (columns are basis functions):
///   Z      3n x N   velocity, row 3p + c
///   Grad   9n x N   gradient, row 9p + 3a + d holds d z_a / d y_d
///   Strain 6n x N   symmetric gradient (xx, yy, zz, sqrt2 xy, sqrt2 yz, sqrt2 xz)
///   TraceS0, RigidS0, StrainS0  3m x N on body surface nodes
///   TraceBR 3k x N on the outer sphere
class GalerkinBasis {
 public:
  int N = 0;
  double a = 1.0;
  double R = 4.0;
  std::vector<Candidate> candidates;  // candidates in use
  MatX coeff;                         // N x ncand, z_i = sum_j coeff(i, j) cand_j
  Points ell, rot;                    // 3 x N rigid parts

  MatX Z, Grad, Strain;
  MatX TraceS0, RigidS0, StrainS0, TraceBR;
  VecX div_max;  // max |div z_i| / max |grad z_i| over nodes
  double raw_condition = 0.0;
  MatX gram_V;  // V-form Gram after orthonormalization (identity up to rounding)

  Eigen::Index volume_nodes() const { return Z.rows() / 3; }
  Eigen::Index surface_nodes() const { return TraceS0.rows() / 3; }

  BasisFunction function(int i) const;

  /// Velocity of sum_i alpha_i z_i at an arbitrary point. Points beyond R give 0.
  Vec3 velocity(const VecX& alpha, const Vec3& y) const;
  CurlEval evaluate(const VecX& alpha, const Vec3& y, bool want_grad, bool want_laplacian) const;
  Vec3 rigid_ell(const VecX& alpha) const { return ell * alpha; }
  Vec3 rigid_rot(const VecX& alpha) const { return rot * alpha; }

  /// Summed per-kind potentials for a coefficient vector (fast pointwise evaluation).
  std::array<VectorPotential, kCutoffKinds> collapse(const VecX& alpha) const;

  /// First n functions, with all samples restricted accordingly.
  GalerkinBasis leading(int n) const;
};

/// Builds the basis. `rho` holds the volume-node density used in the V form.
GalerkinBasis build_basis(const FluidDiscretization& disc, const RigidGeometry& geo,
                          const VecX& rho, const BasisOptions& opts = {});

/// Samples coefficient combinations of candidates on a discretization.
void sample_basis(GalerkinBasis& basis, const FluidDiscretization& disc);

/// Least-squares fit phi(y) = ell + r x y. Needs at least 4 non-coplanar points.
std::pair<Vec3, Vec3> rigid_part_extraction(const Points& points, const Points& values);

/// (phi, psi)_H = int rho phi.psi + m ell.ell + J0 r.r
double inner_product_H(const FluidDiscretization& disc, const RigidGeometry& geo, const VecX& rho,
                       const FieldSamples& phi, const FieldSamples& psi);

/// Binary cache of the orthonormalization (candidates are regenerated).
void save_basis(const GalerkinBasis& basis, const std::string& path, std::uint64_t key);
bool load_basis(GalerkinBasis& basis, const FluidDiscretization& disc, const std::string& path,
                std::uint64_t key, int N, int potential_order);
std::uint64_t basis_cache_key(const FluidDiscretization& disc, const RigidGeometry& geo,
                              const VecX& rho, const BasisOptions& opts);

}  // namespace slipfsi
