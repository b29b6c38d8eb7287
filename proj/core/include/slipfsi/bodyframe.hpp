#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/types.hpp"

#include <Eigen/Geometry>

namespace slipfsi {

struct BodyPose {
  Mat3 Q = Mat3::Identity();
  Vec3 h = Vec3::Zero();
  double t = 0.0;
};

/// exp(hat(w)) by the Rodrigues formula (series near zero).
Mat3 rodrigues(const Vec3& w);

/// Nearest rotation in Frobenius norm (polar factor).
Mat3 reorthonormalize(const Mat3& Q);

/// Q <- Q exp(hat(r dt)), h <- h + dt Q(t + dt/2) ell, with (ell, r) constant over the step.
BodyPose integrate_pose(const BodyPose& pose, const Vec3& ell, const Vec3& r, double dt);

/// Unit quaternion (w, x, y, z) of Q with w >= 0.
Eigen::Vector4d quaternion(const Mat3& Q);

inline Vec3 to_body(const BodyPose& p, const Vec3& x) { return p.Q.transpose() * (x - p.h); }
inline Vec3 to_inertial(const BodyPose& p, const Vec3& y) { return p.Q * y + p.h; }

/// U(x) = Q u(Q^T (x - h)) for the Galerkin field with coefficients alpha.
/// Throws "out of sampled domain" when the body-frame point is not in F_0.
Vec3 map_to_inertial(const BodyPose& pose, const GalerkinBasis& basis, const VecX& alpha,
                     const FluidDiscretization& disc, const Vec3& x);

/// Inertial rigid velocity h' + R x (x - h) with h' = Q ell, R = Q r.
Vec3 inertial_rigid_velocity(const BodyPose& pose, const Vec3& ell, const Vec3& r, const Vec3& x);

}  // namespace slipfsi
