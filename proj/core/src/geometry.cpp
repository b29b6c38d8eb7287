#include "slipfsi/geometry.hpp"

#include "slipfsi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace slipfsi {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Closest-point distance from p to triangle (a, b, c).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

// Solid angle subtended by triangle (a, b, c) at the origin (signed).
double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double num = det3(a, b, c);
  const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  return 2.0 * std::atan2(num, den);
}

double winding_number(const TriangleMesh& m, const Vec3& p) {
  double total = 0.0;
  for (const auto& f : m.faces)
    total += solid_angle(m.vertices[f[0]] - p, m.vertices[f[1]] - p, m.vertices[f[2]] - p);
  return total / (4.0 * kPi);
}

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  // unit vectors
  const double num = std::abs(det3(a, b, c));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

// Degree-2 exact rule on the reference tetrahedron (barycentric a, b, b, b).
constexpr double kTetA = 0.5854101966249685;
constexpr double kTetB = 0.1381966011250105;

}  // namespace

TriangleMesh icosphere(double radius, int level, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int i, int j) {
      auto key = std::minmax(i, j);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[i] + v[j]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      nf.push_back({tri[0], a, c});
      nf.push_back({tri[1], b, a});
      nf.push_back({tri[2], c, b});
      nf.push_back({a, b, c});
    }
    f.swap(nf);
  }
  TriangleMesh m;
  m.faces = std::move(f);
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(center + radius * p);
  return m;
}

double shape_volume(const BodyShape& shape) {
  return std::visit(overloaded{[](const Sphere& s) { return 4.0 / 3.0 * kPi * std::pow(s.radius, 3); },
                               [](const TriangleMesh& m) {
                                 double vol = 0.0;
                                 for (const auto& f : m.faces)
                                   vol += det3(m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]);
                                 return vol / 6.0;
                               }},
                    shape);
}

bool shape_contains(const BodyShape& shape, const Vec3& p) {
  return std::visit(
      overloaded{[&](const Sphere& s) { return (p - s.center).squaredNorm() < s.radius * s.radius; },
                 [&](const TriangleMesh& m) { return winding_number(m, p) > 0.5; }},
      shape);
}

double shape_signed_distance(const BodyShape& shape, const Vec3& p) {
  return std::visit(overloaded{[&](const Sphere& s) { return (p - s.center).norm() - s.radius; },
                               [&](const TriangleMesh& m) {
                                 double d = std::numeric_limits<double>::infinity();
                                 for (const auto& f : m.faces)
                                   d = std::min(d, point_triangle_distance(p, m.vertices[f[0]],
                                                                           m.vertices[f[1]],
                                                                           m.vertices[f[2]]));
                                 return winding_number(m, p) > 0.5 ? -d : d;
                               }},
                    shape);
}

double shape_extent(const BodyShape& shape) {
  return std::visit(overloaded{[](const Sphere& s) { return s.center.norm() + s.radius; },
                               [](const TriangleMesh& m) {
                                 double e = 0.0;
                                 for (const auto& v : m.vertices) e = std::max(e, v.norm());
                                 return e;
                               }},
                    shape);
}

MassInertia compute_mass_inertia(const BodyShape& shape, double density) {
  if (!(density > 0.0)) throw Error(ErrorKind::DegenerateBody, "body density must be positive");
  const double vol = shape_volume(shape);
  if (!(vol > 1e-14)) throw Error(ErrorKind::DegenerateBody, "degenerate body: zero volume");

  // Accumulate zeroth, first and second moments with an exact rule.
  double m0 = 0.0;
  Vec3 m1 = Vec3::Zero();
  Mat3 m2 = Mat3::Zero();
  auto add = [&](const Vec3& x, double w) {
    m0 += w;
    m1 += w * x;
    m2 += w * x * x.transpose();
  };

  std::visit(overloaded{[&](const Sphere& s) {
                          const auto rr = gauss_legendre(3, 0.0, s.radius);
                          const auto mu = gauss_legendre(3);
                          const int nphi = 6;
                          for (int i = 0; i < 3; ++i)
                            for (int j = 0; j < 3; ++j)
                              for (int k = 0; k < nphi; ++k) {
                                const double phi = 2.0 * kPi * k / nphi;
                                const double st = std::sqrt(1.0 - mu.nodes[j] * mu.nodes[j]);
                                const Vec3 dir(st * std::cos(phi), st * std::sin(phi), mu.nodes[j]);
                                const double w = rr.weights[i] * rr.nodes[i] * rr.nodes[i] *
                                                 mu.weights[j] * 2.0 * kPi / nphi;
                                add(s.center + rr.nodes[i] * dir, w);
                              }
                        },
                        [&](const TriangleMesh& m) {
                          Vec3 apex = Vec3::Zero();
                          for (const auto& v : m.vertices) apex += v;
                          apex /= static_cast<double>(m.vertices.size());
                          for (const auto& f : m.faces) {
                            const Vec3& a = m.vertices[f[0]];
                            const Vec3& b = m.vertices[f[1]];
                            const Vec3& c = m.vertices[f[2]];
                            const double v = det3(a - apex, b - apex, c - apex) / 6.0;
                            const Vec3 verts[4] = {apex, a, b, c};
                            for (int q = 0; q < 4; ++q) {
                              Vec3 x = Vec3::Zero();
                              for (int r = 0; r < 4; ++r) x += (r == q ? kTetA : kTetB) * verts[r];
                              add(x, 0.25 * v);
                            }
                          }
                        }},
             shape);

  MassInertia out;
  out.mass = density * m0;
  out.center = m1 / m0;
  const Mat3 second = m2 - m0 * out.center * out.center.transpose();  // central second moment
  out.inertia = density * (second.trace() * Mat3::Identity() - second);
  return out;
}

RigidGeometry make_rigid_geometry(const BodyShape& shape, double density) {
  const MassInertia mi = compute_mass_inertia(shape, density);
  RigidGeometry g;
  g.shape = shape;
  g.density = density;
  g.mass = mi.mass;
  g.inertia = mi.inertia;
  g.center = mi.center;
  return g;
}

SurfaceQuadrature body_surface_centroid_rule(const BodyShape& shape, int icosphere_level) {
  SurfaceQuadrature q;
  std::visit(overloaded{[&](const Sphere& s) {
                          const TriangleMesh m = icosphere(1.0, icosphere_level);
                          const auto nf = static_cast<Eigen::Index>(m.faces.size());
                          q.points.resize(3, nf);
                          q.normals.resize(3, nf);
                          q.weights.resize(nf);
                          for (Eigen::Index i = 0; i < nf; ++i) {
                            const auto& f = m.faces[i];
                            const Vec3& a = m.vertices[f[0]];
                            const Vec3& b = m.vertices[f[1]];
                            const Vec3& c = m.vertices[f[2]];
                            const Vec3 dir = (a + b + c).normalized();
                            q.points.col(i) = s.center + s.radius * dir;
                            q.normals.col(i) = -dir;
                            q.weights[i] = s.radius * s.radius * spherical_triangle_area(a, b, c);
                          }
                        },
                        [&](const TriangleMesh& m) {
                          const auto nf = static_cast<Eigen::Index>(m.faces.size());
                          q.points.resize(3, nf);
                          q.normals.resize(3, nf);
                          q.weights.resize(nf);
                          for (Eigen::Index i = 0; i < nf; ++i) {
                            const auto& f = m.faces[i];
                            const Vec3& a = m.vertices[f[0]];
                            const Vec3& b = m.vertices[f[1]];
                            const Vec3& c = m.vertices[f[2]];
                            const Vec3 cr = (b - a).cross(c - a);
                            q.points.col(i) = (a + b + c) / 3.0;
                            q.normals.col(i) = -cr.normalized();
                            q.weights[i] = 0.5 * cr.norm();
                          }
                        }},
             shape);
  return q;
}

bool FluidDiscretization::in_fluid(const Vec3& y) const {
  return y.squaredNorm() < R * R && !shape_contains(shape, y);
}

namespace {

// Product Gauss x trapezoid rule on a sphere of radius rad. Returns directions and
// unit-sphere weights.
void angular_rule(int n_mu, int n_phi, Points& dirs, VecX& w) {
  const auto mu = gauss_legendre(n_mu);
  dirs.resize(3, n_mu * n_phi);
  w.resize(n_mu * n_phi);
  for (int im = 0; im < n_mu; ++im) {
    const double st = std::sqrt(1.0 - mu.nodes[im] * mu.nodes[im]);
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi = 2.0 * kPi * (ip + 0.5) / n_phi;
      const int k = im * n_phi + ip;
      dirs.col(k) = Vec3(st * std::cos(phi), st * std::sin(phi), mu.nodes[im]);
      w[k] = mu.weights[im] * 2.0 * kPi / n_phi;
    }
  }
}

double body_length(const BodyShape& shape) {
  return std::cbrt(3.0 * shape_volume(shape) / (4.0 * kPi));
}

Lattice build_lattice(const BodyShape& shape, double R, double h) {
  Lattice lat;
  lat.n = static_cast<int>(std::ceil(2.0 * R / h - 1e-12));
  lat.h = h;
  const double half = 0.5 * lat.n * h;
  lat.origin = Vec3(-half, -half, -half);
  const std::size_t ncell = static_cast<std::size_t>(lat.n) * lat.n * lat.n;
  lat.cell_node.assign(ncell, -1);
  lat.fluid_mask.assign(ncell, 0);
  for (int i = 0; i < lat.n; ++i)
    for (int j = 0; j < lat.n; ++j)
      for (int k = 0; k < lat.n; ++k) {
        const Vec3 c = lat.cell_center(i, j, k);
        if (c.squaredNorm() < R * R && !shape_contains(shape, c)) lat.fluid_mask[lat.cell_index(i, j, k)] = 1;
      }
  return lat;
}

}  // namespace

FluidDiscretization build_discretization(const BodyShape& shape, double R, int resolution,
                                         const DiscretizationOptions& opts) {
  if (resolution < 2) throw Error(ErrorKind::Config, "domain.resolution must be at least 2");
  const double vol = shape_volume(shape);
  if (!(vol > 1e-14)) throw Error(ErrorKind::DegenerateBody, "degenerate body: zero volume");
  if (shape_extent(shape) > 0.5 * R)
    throw Error(ErrorKind::GeometryOverlap, "geometry overlap: body does not fit in B(0, R/2)");

  FluidDiscretization d;
  d.scheme = opts.scheme;
  d.shape = shape;
  d.R = R;
  d.resolution = resolution;
  d.h_grid = 2.0 * body_length(shape) / resolution;

  // Outer sphere, shared by both schemes.
  {
    const int n_mu = std::max(resolution, 4);
    Points dirs;
    VecX w;
    angular_rule(n_mu, 2 * n_mu, dirs, w);
    d.surface_BR.points = R * dirs;
    d.surface_BR.normals = dirs;
    d.surface_BR.weights = (R * R) * w;
  }

  if (opts.scheme == QuadratureScheme::Spherical) {
    const auto* s = std::get_if<Sphere>(&shape);
    if (!s || s->center.norm() > 1e-12)
      throw Error(ErrorKind::Config, "spherical quadrature needs a sphere centred at the origin");
    const double a = s->radius;
    SphericalGrid g;
    g.inner = a;
    g.outer = R;
    const auto rr = gauss_legendre(resolution, a, R);
    const auto mu = gauss_legendre(resolution);
    g.r = rr.nodes;
    g.wr = rr.weights;
    g.mu = mu.nodes;
    g.wmu = mu.weights;
    const int n_phi = 2 * resolution;
    for (int ip = 0; ip < n_phi; ++ip) g.phi.push_back(2.0 * kPi * (ip + 0.5) / n_phi);

    const int nv = g.n_r() * g.n_mu() * n_phi;
    d.volume_points.resize(3, nv);
    d.volume_weights.resize(nv);
    for (int ir = 0; ir < g.n_r(); ++ir)
      for (int im = 0; im < g.n_mu(); ++im) {
        const double st = std::sqrt(1.0 - g.mu[im] * g.mu[im]);
        for (int ip = 0; ip < n_phi; ++ip) {
          const Vec3 dir(st * std::cos(g.phi[ip]), st * std::sin(g.phi[ip]), g.mu[im]);
          const int k = g.index(ir, im, ip);
          d.volume_points.col(k) = g.r[ir] * dir;
          d.volume_weights[k] = g.wr[ir] * g.r[ir] * g.r[ir] * g.wmu[im] * 2.0 * kPi / n_phi;
        }
      }

    Points dirs;
    VecX w;
    angular_rule(resolution, n_phi, dirs, w);
    d.surface_S0.points = a * dirs;
    d.surface_S0.normals = -dirs;
    d.surface_S0.weights = (a * a) * w;
    d.spherical = std::move(g);
    d.lattice = build_lattice(shape, R, d.h_grid);
    return d;
  }

  // Clipped lattice with midpoint rule; boundary cells are subsampled.
  d.lattice = build_lattice(shape, R, d.h_grid);
  Lattice& lat = d.lattice;
  const double h = lat.h;
  const double hd = 0.5 * std::sqrt(3.0) * h;
  const int ns = std::max(1, opts.subsamples);
  std::vector<Vec3> pts;
  std::vector<double> wts;
  for (int i = 0; i < lat.n; ++i)
    for (int j = 0; j < lat.n; ++j)
      for (int k = 0; k < lat.n; ++k) {
        const Vec3 c = lat.cell_center(i, j, k);
        const double dball = R - c.norm();
        if (dball < -hd) continue;
        const double dbody = shape_signed_distance(shape, c);
        if (dbody < -hd) continue;
        Vec3 node = c;
        double w = h * h * h;
        if (dball <= hd || dbody <= hd) {
          int count = 0;
          Vec3 sum = Vec3::Zero();
          std::vector<Vec3> inside;
          for (int a = 0; a < ns; ++a)
            for (int b = 0; b < ns; ++b)
              for (int e = 0; e < ns; ++e) {
                const Vec3 p = lat.origin +
                               h * Vec3(i + (a + 0.5) / ns, j + (b + 0.5) / ns, k + (e + 0.5) / ns);
                if (p.squaredNorm() < R * R && !shape_contains(shape, p)) {
                  ++count;
                  sum += p;
                  inside.push_back(p);
                }
              }
          if (count == 0) continue;
          w *= static_cast<double>(count) / (ns * ns * ns);
          node = sum / count;
          if (!(node.squaredNorm() < R * R && !shape_contains(shape, node))) {
            node = *std::min_element(inside.begin(), inside.end(), [&](const Vec3& p, const Vec3& q) {
              return (p - node).squaredNorm() < (q - node).squaredNorm();
            });
          }
        }
        lat.cell_node[lat.cell_index(i, j, k)] = static_cast<int>(pts.size());
        pts.push_back(node);
        wts.push_back(w);
      }
  d.volume_points.resize(3, static_cast<Eigen::Index>(pts.size()));
  d.volume_weights.resize(static_cast<Eigen::Index>(wts.size()));
  for (std::size_t p = 0; p < pts.size(); ++p) {
    d.volume_points.col(static_cast<Eigen::Index>(p)) = pts[p];
    d.volume_weights[static_cast<Eigen::Index>(p)] = wts[p];
  }
  d.surface_S0 = body_surface_centroid_rule(shape, opts.icosphere_level);
  return d;
}

}  // namespace slipfsi
