#include "slipfsi/basis.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string_view>

namespace slipfsi {

CutoffValues cutoff(CutoffKind kind, double s, double a, double R) {
  const double k = 1.0 / (R * R - a * a);
  const double t = (s - a * a) * k;
  CutoffValues c;
  if (t >= 1.0) return c;
  double e = 0, e1 = 0, e2 = 0, e3 = 0;
  switch (kind) {
    case CutoffKind::Lift:
      e = 1.0 - 3.0 * t * t + 2.0 * t * t * t;
      e1 = -6.0 * t + 6.0 * t * t;
      e2 = -6.0 + 12.0 * t;
      e3 = 12.0;
      break;
    case CutoffKind::Slip:
      e = t * (1.0 - t) * (1.0 - t);
      e1 = 1.0 - 4.0 * t + 3.0 * t * t;
      e2 = -4.0 + 6.0 * t;
      e3 = 6.0;
      break;
    case CutoffKind::Interior:
      e = t * t * (1.0 - t) * (1.0 - t);
      e1 = 2.0 * t - 6.0 * t * t + 4.0 * t * t * t;
      e2 = 2.0 - 12.0 * t + 12.0 * t * t;
      e3 = -24.0 + 24.0 * t;
      break;
  }
  c.eta = e;
  c.d1 = k * e1;
  c.d2 = k * k * e2;
  c.d3 = k * k * k * e3;
  return c;
}

namespace {

inline Vec3 curl_of_jacobian(const Mat3& J) {
  // J(c, b) = d f_c / d y_b
  return Vec3(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
}

void accumulate_curl(const CutoffValues& c, const VectorPotential& A, const Vec3& y, bool want_grad,
                     bool want_lap, CurlEval& out) {
  const double s = y.squaredNorm();
  Mat3 J;
  std::array<double, 3> Av;
  std::array<Vec3, 3> dA;
  for (int comp = 0; comp < 3; ++comp) {
    Av[comp] = A[comp].value(y);
    dA[comp] = A[comp].grad(y);
    J.row(comp) = (2.0 * c.d1 * Av[comp]) * y.transpose() + c.eta * dA[comp].transpose();
  }
  out.value += curl_of_jacobian(J);
  if (want_grad) {
    // H_c = Hessian of eta A_c; grad(a, d) = eps_abc H_c(b, d)
    std::array<Mat3, 3> H;
    for (int comp = 0; comp < 3; ++comp) {
      const Vec3& g = dA[comp];
      H[comp] = (4.0 * c.d2 * Av[comp]) * (y * y.transpose()) +
                (2.0 * c.d1 * Av[comp]) * Mat3::Identity() +
                (2.0 * c.d1) * (y * g.transpose() + g * y.transpose()) + (2.0 * c.eta) * A[comp].Q;
    }
    for (int d = 0; d < 3; ++d) {
      out.grad(0, d) += H[2](1, d) - H[1](2, d);
      out.grad(1, d) += H[0](2, d) - H[2](0, d);
      out.grad(2, d) += H[1](0, d) - H[0](1, d);
    }
  }
  if (want_lap) {
    // Laplacian commutes with curl: lap z = curl(g), g_c = lap(eta A_c).
    const double lap_eta = 4.0 * s * c.d2 + 6.0 * c.d1;
    const Vec3 grad_lap_eta = (2.0 * (10.0 * c.d2 + 4.0 * s * c.d3)) * y;
    Mat3 Jg;
    for (int comp = 0; comp < 3; ++comp) {
      const Vec3& g = dA[comp];
      const double trQ2 = 2.0 * A[comp].Q.trace();
      const Vec3 Qy2 = 2.0 * (A[comp].Q * y);
      const Vec3 dg = grad_lap_eta * Av[comp] + lap_eta * g + (8.0 * c.d2 * y.dot(g)) * y +
                      (4.0 * c.d1) * (g + Qy2) + (2.0 * c.d1 * trQ2) * y;
      Jg.row(comp) = dg.transpose();
    }
    out.laplacian += curl_of_jacobian(Jg);
  }
}

QuadPoly monomial(int degree, int index) {
  QuadPoly p;
  if (degree == 0) {
    p.c0 = 1.0;
  } else if (degree == 1) {
    p.b[index] = 1.0;
  } else {
    static const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}};
    const int i = pairs[index][0], j = pairs[index][1];
    if (i == j) {
      p.Q(i, i) = 1.0;
    } else {
      p.Q(i, j) = 0.5;
      p.Q(j, i) = 0.5;
    }
  }
  return p;
}

int monomial_count(int degree) { return degree == 0 ? 1 : (degree == 1 ? 3 : 6); }

// Candidate samples at points: values (3n x nc) and optionally gradients (9n x nc).
void sample_candidates(const std::vector<Candidate>& cands, const Points& pts, double a, double R,
                       MatX& vals, MatX* grads) {
  const Eigen::Index n = pts.cols();
  const auto nc = static_cast<Eigen::Index>(cands.size());
  vals.setZero(3 * n, nc);
  if (grads) grads->setZero(9 * n, nc);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Vec3 y = pts.col(p);
    const double s = y.squaredNorm();
    std::array<CutoffValues, kCutoffKinds> cv;
    for (int k = 0; k < kCutoffKinds; ++k) cv[k] = cutoff(static_cast<CutoffKind>(k), s, a, R);
    for (Eigen::Index j = 0; j < nc; ++j) {
      CurlEval e;
      accumulate_curl(cv[static_cast<int>(cands[j].kind)], cands[j].A, y, grads != nullptr, false, e);
      vals.block<3, 1>(3 * p, j) = e.value;
      if (grads)
        for (int r = 0; r < 3; ++r)
          for (int d = 0; d < 3; ++d) (*grads)(9 * p + 3 * r + d, j) = e.grad(r, d);
    }
  }
}

void finalize_rigid(GalerkinBasis& b) {
  const auto nc = static_cast<Eigen::Index>(b.candidates.size());
  Points cl(3, nc), cr(3, nc);
  for (Eigen::Index j = 0; j < nc; ++j) {
    cl.col(j) = b.candidates[j].ell;
    cr.col(j) = b.candidates[j].rot;
  }
  b.ell = cl * b.coeff.transpose();
  b.rot = cr * b.coeff.transpose();
}

}  // namespace

CurlEval eval_curl(CutoffKind kind, const VectorPotential& A, const Vec3& y, double a, double R,
                   bool want_grad, bool want_laplacian) {
  CurlEval out;
  const CutoffValues c = cutoff(kind, y.squaredNorm(), a, R);
  accumulate_curl(c, A, y, want_grad, want_laplacian, out);
  return out;
}

std::vector<Candidate> make_candidates(int potential_order) {
  if (potential_order < 0 || potential_order > 2)
    throw Error(ErrorKind::Config, "basis.potential_order must be 0, 1 or 2");
  std::vector<Candidate> out;
  for (int i = 0; i < 3; ++i) {
    Candidate c;
    c.kind = CutoffKind::Lift;
    // curl(1/2 e_i x y) = e_i
    const Vec3 e = Vec3::Unit(i);
    for (int comp = 0; comp < 3; ++comp) c.A[comp].b = 0.5 * e.cross(Vec3::Unit(comp)) * -1.0;
    c.ell = e;
    c.label = "lift_l" + std::to_string(i);
    out.push_back(c);
  }
  for (int i = 0; i < 3; ++i) {
    Candidate c;
    c.kind = CutoffKind::Lift;
    // curl(-1/2 |y|^2 e_i) = e_i x y
    c.A[i].Q = -0.5 * Mat3::Identity();
    c.rot = Vec3::Unit(i);
    c.label = "lift_r" + std::to_string(i);
    out.push_back(c);
  }
  for (int deg = 0; deg <= potential_order; ++deg) {
    for (CutoffKind kind : {CutoffKind::Slip, CutoffKind::Interior}) {
      for (int m = 0; m < monomial_count(deg); ++m) {
        for (int comp = 0; comp < 3; ++comp) {
          Candidate c;
          c.kind = kind;
          c.A[comp] = monomial(deg, m);
          c.label = std::string(kind == CutoffKind::Slip ? "slip" : "int") + "_d" +
                    std::to_string(deg) + "_m" + std::to_string(m) + "_c" + std::to_string(comp);
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

BasisFunction GalerkinBasis::function(int i) const {
  BasisFunction f;
  const Eigen::Index n = volume_nodes();
  const Eigen::Index m = surface_nodes();
  f.values = Eigen::Map<const Points>(Z.col(i).data(), 3, n);
  f.gradients.resize(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p)
    for (int r = 0; r < 3; ++r)
      for (int d = 0; d < 3; ++d) f.gradients[p](r, d) = Grad(9 * p + 3 * r + d, i);
  f.ell = ell.col(i);
  f.rot = rot.col(i);
  f.trace_S0 = Eigen::Map<const Points>(TraceS0.col(i).data(), 3, m);
  f.strain_trace_S0 = Eigen::Map<const Points>(StrainS0.col(i).data(), 3, m);
  return f;
}

std::array<VectorPotential, kCutoffKinds> GalerkinBasis::collapse(const VecX& alpha) const {
  std::array<VectorPotential, kCutoffKinds> pots{};
  const VecX beta = coeff.transpose() * alpha;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double bj = beta[static_cast<Eigen::Index>(j)];
    if (bj == 0.0) continue;
    auto& P = pots[static_cast<int>(candidates[j].kind)];
    for (int comp = 0; comp < 3; ++comp) P[comp].axpy(bj, candidates[j].A[comp]);
  }
  return pots;
}

CurlEval GalerkinBasis::evaluate(const VecX& alpha, const Vec3& y, bool want_grad,
                                 bool want_laplacian) const {
  CurlEval out;
  const double s = y.squaredNorm();
  if (s >= R * R) return out;
  const auto pots = collapse(alpha);
  for (int k = 0; k < kCutoffKinds; ++k)
    accumulate_curl(cutoff(static_cast<CutoffKind>(k), s, a, R), pots[k], y, want_grad,
                    want_laplacian, out);
  return out;
}

Vec3 GalerkinBasis::velocity(const VecX& alpha, const Vec3& y) const {
  return evaluate(alpha, y, false, false).value;
}

GalerkinBasis GalerkinBasis::leading(int n) const {
  if (n < 1 || n > N) throw Error(ErrorKind::Config, "leading(): count out of range");
  GalerkinBasis b = *this;
  b.N = n;
  b.coeff = coeff.topRows(n);
  b.ell = ell.leftCols(n);
  b.rot = rot.leftCols(n);
  b.Z = Z.leftCols(n);
  b.Grad = Grad.leftCols(n);
  b.Strain = Strain.leftCols(n);
  b.TraceS0 = TraceS0.leftCols(n);
  b.RigidS0 = RigidS0.leftCols(n);
  b.StrainS0 = StrainS0.leftCols(n);
  b.TraceBR = TraceBR.leftCols(n);
  b.div_max = div_max.head(n);
  b.gram_V = gram_V.topLeftCorner(n, n);
  return b;
}

void sample_basis(GalerkinBasis& b, const FluidDiscretization& disc) {
  const Eigen::Index n = disc.volume_size();
  MatX vals, grads;
  sample_candidates(b.candidates, disc.volume_points, b.a, b.R, vals, &grads);
  const MatX Ct = b.coeff.transpose();
  b.Z = vals * Ct;
  b.Grad = grads * Ct;
  b.Strain.resize(6 * n, b.N);
  const double r2 = std::sqrt(2.0);
  b.div_max = VecX::Zero(b.N);
  for (int i = 0; i < b.N; ++i) {
    double gmax = 0.0, dmax = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      auto g = [&](int r, int d) { return b.Grad(9 * p + 3 * r + d, i); };
      b.Strain(6 * p + 0, i) = g(0, 0);
      b.Strain(6 * p + 1, i) = g(1, 1);
      b.Strain(6 * p + 2, i) = g(2, 2);
      b.Strain(6 * p + 3, i) = r2 * 0.5 * (g(0, 1) + g(1, 0));
      b.Strain(6 * p + 4, i) = r2 * 0.5 * (g(1, 2) + g(2, 1));
      b.Strain(6 * p + 5, i) = r2 * 0.5 * (g(0, 2) + g(2, 0));
      for (int r = 0; r < 9; ++r) gmax = std::max(gmax, std::abs(b.Grad(9 * p + r, i)));
      dmax = std::max(dmax, std::abs(g(0, 0) + g(1, 1) + g(2, 2)));
    }
    b.div_max[i] = gmax > 0 ? dmax / gmax : 0.0;
  }

  finalize_rigid(b);
  const auto& S0 = disc.surface_S0;
  const Eigen::Index m = S0.size();
  MatX sv, sg;
  sample_candidates(b.candidates, S0.points, b.a, b.R, sv, &sg);
  b.TraceS0 = sv * Ct;
  const MatX SG = sg * Ct;
  b.RigidS0.resize(3 * m, b.N);
  b.StrainS0.resize(3 * m, b.N);
  for (int i = 0; i < b.N; ++i)
    for (Eigen::Index p = 0; p < m; ++p) {
      const Vec3 y = S0.points.col(p);
      b.RigidS0.block<3, 1>(3 * p, i) = b.ell.col(i) + b.rot.col(i).cross(y);
      Mat3 G;
      for (int r = 0; r < 3; ++r)
        for (int d = 0; d < 3; ++d) G(r, d) = SG(9 * p + 3 * r + d, i);
      b.StrainS0.block<3, 1>(3 * p, i) = 0.5 * (G + G.transpose()) * S0.normals.col(p);
    }
  MatX bv;
  sample_candidates(b.candidates, disc.surface_BR.points, b.a, b.R, bv, nullptr);
  b.TraceBR = bv * Ct;
}

GalerkinBasis build_basis(const FluidDiscretization& disc, const RigidGeometry& geo, const VecX& rho,
                          const BasisOptions& opts) {
  if (opts.N < 6) throw Error(ErrorKind::Config, "basis.N must be at least 6");
  const auto* sph = std::get_if<Sphere>(&disc.shape);
  if (!sph) throw Error(ErrorKind::Config, "the curl basis needs a spherical body");
  if (rho.size() != disc.volume_size())
    throw Error(ErrorKind::Config, "density sample count does not match the discretization");
  if ((rho.array() < 0.0).any()) throw Error(ErrorKind::DensityNegative, "density negative");

  GalerkinBasis b;
  b.N = opts.N;
  b.a = sph->radius;
  b.R = disc.R;
  b.candidates = make_candidates(opts.potential_order);
  const auto nc = static_cast<Eigen::Index>(b.candidates.size());
  const Eigen::Index n = disc.volume_size();

  // V-form Gram of the raw candidates.
  MatX vals, grads;
  sample_candidates(b.candidates, disc.volume_points, b.a, b.R, vals, &grads);
  VecX wv(3 * n), wg(9 * n);
  for (Eigen::Index p = 0; p < n; ++p) {
    wv.segment<3>(3 * p).setConstant(rho[p] * disc.volume_weights[p]);
    wg.segment<9>(9 * p).setConstant(disc.volume_weights[p]);
  }
  Points cl(3, nc), cr(3, nc);
  for (Eigen::Index j = 0; j < nc; ++j) {
    cl.col(j) = b.candidates[j].ell;
    cr.col(j) = b.candidates[j].rot;
  }
  MatX G = vals.transpose() * wv.asDiagonal() * vals + grads.transpose() * wg.asDiagonal() * grads;
  G += geo.mass * cl.transpose() * cl + cr.transpose() * geo.inertia * cr;
  G = (0.5 * (G + G.transpose())).eval();

  // Greedy modified Gram-Schmidt in coefficient space, twice per vector.
  std::vector<VecX> accepted;
  auto try_add = [&](Eigen::Index j) {
    VecX v = VecX::Unit(nc, j);
    const double n0 = G(j, j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : accepted) v -= q.dot(G * v) * q;
    const double n2 = v.dot(G * v);
    if (!(n2 > opts.dependence_tol * n0)) return false;
    accepted.push_back(v / std::sqrt(n2));
    return true;
  };
  const int want_free = opts.N - 6;
  for (Eigen::Index j = 6; j < nc && static_cast<int>(accepted.size()) < want_free; ++j) try_add(j);
  if (static_cast<int>(accepted.size()) < want_free)
    throw Error(ErrorKind::BasisRankDeficient,
                "basis rank deficient: achieved rank " + std::to_string(accepted.size() + 6) +
                    " < N = " + std::to_string(opts.N) + " (raise basis.potential_order)");
  const std::size_t n_free = accepted.size();
  for (Eigen::Index j = 0; j < 6; ++j)
    if (!try_add(j))
      throw Error(ErrorKind::BasisRankDeficient,
                  "basis rank deficient: rigid lift " + std::to_string(j) + " is dependent");

  b.coeff.resize(opts.N, nc);
  for (int i = 0; i < 6; ++i) b.coeff.row(i) = accepted[n_free + i].transpose();
  for (std::size_t i = 0; i < n_free; ++i) b.coeff.row(6 + static_cast<Eigen::Index>(i)) = accepted[i].transpose();

  // Condition of the raw Gram restricted to the candidates in use.
  {
    std::vector<Eigen::Index> used;
    for (Eigen::Index j = 0; j < nc; ++j)
      if (b.coeff.col(j).cwiseAbs().maxCoeff() > 0.0) used.push_back(j);
    MatX Gu(used.size(), used.size());
    for (std::size_t i = 0; i < used.size(); ++i)
      for (std::size_t k = 0; k < used.size(); ++k) Gu(i, k) = G(used[i], used[k]);
    Eigen::SelfAdjointEigenSolver<MatX> es(Gu, Eigen::EigenvaluesOnly);
    b.raw_condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  }
  b.gram_V = b.coeff * G * b.coeff.transpose();
  sample_basis(b, disc);
  return b;
}

std::pair<Vec3, Vec3> rigid_part_extraction(const Points& points, const Points& values) {
  const Eigen::Index n = points.cols();
  if (n < 4 || values.cols() != n) throw Error(ErrorKind::RigidFitDegenerate, "rigid fit degenerate: need at least 4 samples");
  const Vec3 c = points.rowwise().mean();
  const Points d = points.colwise() - c;
  const Mat3 cov = d * d.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0) || es.eigenvalues().minCoeff() <= 1e-10 * lmax)
    throw Error(ErrorKind::RigidFitDegenerate, "rigid fit degenerate: samples are coplanar");
  MatX A(3 * n, 6);
  VecX rhs(3 * n);
  for (Eigen::Index p = 0; p < n; ++p) {
    A.block<3, 3>(3 * p, 0) = Mat3::Identity();
    A.block<3, 3>(3 * p, 3) = -hat(points.col(p));
    rhs.segment<3>(3 * p) = values.col(p);
  }
  const VecX x = A.colPivHouseholderQr().solve(rhs);
  return {x.head<3>(), x.tail<3>()};
}

double inner_product_H(const FluidDiscretization& disc, const RigidGeometry& geo, const VecX& rho,
                       const FieldSamples& phi, const FieldSamples& psi) {
  if ((rho.array() < 0.0).any()) throw Error(ErrorKind::DensityNegative, "density negative");
  double s = 0.0;
  for (Eigen::Index p = 0; p < disc.volume_size(); ++p)
    s += disc.volume_weights[p] * rho[p] * phi.values.col(p).dot(psi.values.col(p));
  return s + geo.mass * phi.ell.dot(psi.ell) + phi.rot.dot(geo.inertia * psi.rot);
}

std::uint64_t basis_cache_key(const FluidDiscretization& disc, const RigidGeometry& geo,
                              const VecX& rho, const BasisOptions& opts) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t len) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  };
  const double head[3] = {disc.R, geo.mass, geo.inertia.trace()};
  mix(head, sizeof head);
  const int ints[4] = {disc.resolution, static_cast<int>(disc.scheme), opts.N, opts.potential_order};
  mix(ints, sizeof ints);
  mix(disc.volume_points.data(), sizeof(double) * disc.volume_points.size());
  mix(rho.data(), sizeof(double) * rho.size());
  return h;
}

namespace {
constexpr char kMagic[8] = {'S', 'F', 'B', 'A', 'S', 'I', 'S', '1'};
}

void save_basis(const GalerkinBasis& b, const std::string& path, std::uint64_t key) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write basis cache " + path);
  f.write(kMagic, sizeof kMagic);
  const std::int64_t dims[3] = {b.N, b.coeff.cols(), 0};
  f.write(reinterpret_cast<const char*>(&key), sizeof key);
  f.write(reinterpret_cast<const char*>(dims), sizeof dims);
  f.write(reinterpret_cast<const char*>(b.coeff.data()), sizeof(double) * b.coeff.size());
  f.write(reinterpret_cast<const char*>(&b.raw_condition), sizeof(double));
  f.write(reinterpret_cast<const char*>(b.gram_V.data()), sizeof(double) * b.gram_V.size());
}

bool load_basis(GalerkinBasis& b, const FluidDiscretization& disc, const std::string& path,
                std::uint64_t key, int N, int potential_order) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  char magic[8];
  std::uint64_t k = 0;
  std::int64_t dims[3];
  f.read(magic, sizeof magic);
  f.read(reinterpret_cast<char*>(&k), sizeof k);
  f.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0 || k != key || dims[0] != N) return false;
  GalerkinBasis out;
  out.N = N;
  const auto* sph = std::get_if<Sphere>(&disc.shape);
  if (!sph) return false;
  out.a = sph->radius;
  out.R = disc.R;
  out.candidates = make_candidates(potential_order);
  if (static_cast<std::int64_t>(out.candidates.size()) != dims[1]) return false;
  out.coeff.resize(N, dims[1]);
  out.gram_V.resize(N, N);
  f.read(reinterpret_cast<char*>(out.coeff.data()), sizeof(double) * out.coeff.size());
  f.read(reinterpret_cast<char*>(&out.raw_condition), sizeof(double));
  f.read(reinterpret_cast<char*>(out.gram_V.data()), sizeof(double) * out.gram_V.size());
  if (!f) return false;
  sample_basis(out, disc);
  b = std::move(out);
  return true;
}

}  // namespace slipfsi
