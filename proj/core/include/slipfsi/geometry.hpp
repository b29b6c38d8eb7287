#pragma once

#include "slipfsi/types.hpp"

#include <array>
#include <optional>
#include <variant>
#include <vector>

namespace slipfsi {

struct Sphere {
  double radius = 1.0;
  Vec3 center = Vec3::Zero();
};

/// Closed triangulated surface with outward-oriented faces.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

using BodyShape = std::variant<Sphere, TriangleMesh>;

/// Geodesic icosahedral triangulation of a sphere (20 * 4^level faces).
TriangleMesh icosphere(double radius, int level, const Vec3& center = Vec3::Zero());

double shape_volume(const BodyShape& shape);
bool shape_contains(const BodyShape& shape, const Vec3& p);
/// Signed distance, negative inside the body. Exact for spheres.
double shape_signed_distance(const BodyShape& shape, const Vec3& p);
/// max |p| over the body, measured from the origin.
double shape_extent(const BodyShape& shape);

struct MassInertia {
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();  // about `center`
  Vec3 center = Vec3::Zero();
};

/// Mass and inertia tensor about the center of mass for a body of uniform density.
MassInertia compute_mass_inertia(const BodyShape& shape, double density);

struct RigidGeometry {
  BodyShape shape;
  double density = 1.0;
  double mass = 0.0;
  Mat3 inertia = Mat3::Identity();
  Vec3 center = Vec3::Zero();
};

RigidGeometry make_rigid_geometry(const BodyShape& shape, double density);

/// Oriented surface quadrature: points, weights and unit normals.
struct SurfaceQuadrature {
  Points points;
  VecX weights;
  Points normals;
  Eigen::Index size() const { return weights.size(); }
};

/// Surface rule on the body boundary with normals pointing into the body.
/// Spheres use a geodesic icosahedral triangulation with per-triangle centroid
/// rule (projected to the sphere, exact spherical-triangle areas); meshes use
/// their own triangles.
SurfaceQuadrature body_surface_centroid_rule(const BodyShape& shape, int icosphere_level);

enum class QuadratureScheme {
  Spherical,  // Gauss product rule on the shell a < |y| < R (centred sphere only)
  Lattice,    // clipped regular lattice, midpoint rule
};

/// Tensor grid (radius x cos(polar) x azimuth) underlying the spherical scheme.
/// Volume node (ir, im, ip) has linear index (ir * n_mu + im) * n_phi + ip.
struct SphericalGrid {
  double inner = 1.0;
  double outer = 4.0;
  std::vector<double> r, mu, phi;
  std::vector<double> wr, wmu;
  int n_r() const { return static_cast<int>(r.size()); }
  int n_mu() const { return static_cast<int>(mu.size()); }
  int n_phi() const { return static_cast<int>(phi.size()); }
  int index(int ir, int im, int ip) const { return (ir * n_mu() + im) * n_phi() + ip; }
};

/// Cell-centred lattice covering [-R, R]^3. `cell_node[c]` is the volume node
/// that represents cell c, or -1 when the cell holds no fluid.
struct Lattice {
  Vec3 origin = Vec3::Zero();  // corner of cell (0,0,0)
  double h = 0.25;
  int n = 0;  // cells per axis
  std::vector<int> cell_node;
  std::vector<unsigned char> fluid_mask;  // cell centre lies in F_0
  int cell_index(int i, int j, int k) const { return (i * n + j) * n + k; }
  Vec3 cell_center(int i, int j, int k) const {
    return origin + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
};

struct FluidDiscretization {
  QuadratureScheme scheme = QuadratureScheme::Spherical;
  BodyShape shape;
  double R = 4.0;
  int resolution = 8;
  Points volume_points;
  VecX volume_weights;
  SurfaceQuadrature surface_S0;  // normals point into S_0
  SurfaceQuadrature surface_BR;  // outward normals of B_R
  std::optional<SphericalGrid> spherical;
  Lattice lattice;
  double h_grid = 0.25;

  Eigen::Index volume_size() const { return volume_weights.size(); }
  bool in_fluid(const Vec3& y) const;
};

struct DiscretizationOptions {
  QuadratureScheme scheme = QuadratureScheme::Spherical;
  int subsamples = 8;  // per axis, for clipped lattice cells
  int icosphere_level = 3;
};

/// Builds volume and surface quadrature over F_0 = B_R \ S_0. The body must
/// satisfy S_0 within B(0, R/2).
FluidDiscretization build_discretization(const BodyShape& shape, double R, int resolution,
                                         const DiscretizationOptions& opts = {});

/// Radial cutoff map: identity inside B(0,R), radial projection onto the sphere outside.
inline Vec3 chi_R(const Vec3& y, double R) {
  const double n = y.norm();
  return n < R ? y : Vec3((R / n) * y);
}

}  // namespace slipfsi
