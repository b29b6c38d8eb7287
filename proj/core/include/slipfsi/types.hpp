#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace slipfsi {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Points = Eigen::Matrix3Xd;

/// Failure categories raised by the library. The message carries the
/// human-readable detail; `kind()` is what callers and tests branch on.
enum class ErrorKind {
  DegenerateBody,
  GeometryOverlap,
  BasisRankDeficient,
  RigidFitDegenerate,
  DensityNegative,
  CharacteristicEscape,
  AssemblyNaN,
  ViscosityBounds,
  FluxNotTangential,
  MassMatrixSingular,
  PicardStalled,
  InvariantBreach,
  OutOfSampledDomain,
  Config,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Skew-symmetric cross-product matrix: hat(a) * b == a.cross(b).
inline Mat3 hat(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

/// det(a, b, c) = a . (b x c)
inline double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

}  // namespace slipfsi
