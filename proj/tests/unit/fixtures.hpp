#pragma once

#include "slipfsi/basis.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/transport.hpp"

#include <cmath>
#include <random>

namespace slipfsi::testing {

inline constexpr double kPi = 3.14159265358979323846;

/// Small shared setup: unit sphere in B_4, coarse shell rule, N = 12.
struct SmallSetup {
  Sphere sphere{1.0, Vec3::Zero()};
  RigidGeometry geo;
  FluidDiscretization disc;
  DensityProfile rho0;
  VecX rho;
  GalerkinBasis basis;

  SmallSetup() {
    geo = make_rigid_geometry(sphere, 1.0);
    disc = build_discretization(sphere, 4.0, 8);
    rho0 = stratified_density(1.0, 2.0, 1.0, Vec3(1, 0, 1).normalized());
    rho.resize(disc.volume_size());
    for (Eigen::Index p = 0; p < disc.volume_size(); ++p) rho[p] = rho0(disc.volume_points.col(p));
    BasisOptions o;
    o.N = 12;
    basis = build_basis(disc, geo, rho, o);
  }
};

inline const SmallSetup& small_setup() {
  static const SmallSetup s;
  return s;
}

inline VecX random_vector(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(gen);
  return v;
}

inline Vec3 random_vec3(std::mt19937_64& gen) { return random_vector(3, gen); }

}  // namespace slipfsi::testing
