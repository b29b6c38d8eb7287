#include "slipfsi/bodyframe.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace slipfsi {

Mat3 rodrigues(const Vec3& w) {
  const double th2 = w.squaredNorm();
  const double th = std::sqrt(th2);
  double A, B;
  if (th < 1e-4) {
    A = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    B = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
  } else {
    A = std::sin(th) / th;
    B = (1.0 - std::cos(th)) / th2;
  }
  const Mat3 K = hat(w);
  return Mat3::Identity() + A * K + B * K * K;
}

Mat3 reorthonormalize(const Mat3& Q) {
  Eigen::JacobiSVD<Mat3> svd(Q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

BodyPose integrate_pose(const BodyPose& pose, const Vec3& ell, const Vec3& r, double dt) {
  BodyPose out;
  const Mat3 half = pose.Q * rodrigues(0.5 * dt * r);
  out.h = pose.h + dt * (half * ell);
  out.Q = reorthonormalize(pose.Q * rodrigues(dt * r));
  out.t = pose.t + dt;
  return out;
}

Eigen::Vector4d quaternion(const Mat3& Q) {
  Eigen::Quaterniond q(Q);
  q.normalize();
  Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
  if (v[0] < 0.0) v = -v;
  return v;
}

Vec3 map_to_inertial(const BodyPose& pose, const GalerkinBasis& basis, const VecX& alpha,
                     const FluidDiscretization& disc, const Vec3& x) {
  const Vec3 y = to_body(pose, x);
  if (!disc.in_fluid(y))
    throw Error(ErrorKind::OutOfSampledDomain, "out of sampled domain: body-frame point outside F_0");
  return pose.Q * basis.velocity(alpha, y);
}

Vec3 inertial_rigid_velocity(const BodyPose& pose, const Vec3& ell, const Vec3& r, const Vec3& x) {
  return pose.Q * ell + (pose.Q * r).cross(x - pose.h);
}

}  // namespace slipfsi
