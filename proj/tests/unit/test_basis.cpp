#include <doctest.h>

#include "fixtures.hpp"
#include "slipfsi/basis.hpp"

#include <cstdio>
#include <filesystem>

using namespace slipfsi;
using testing::small_setup;

namespace {

// V-form Gram recomputed from the per-function samples, independently of the
// coefficient-space Gram used during construction.
MatX gram_from_samples(const testing::SmallSetup& s) {
  const int N = s.basis.N;
  std::vector<BasisFunction> f;
  for (int i = 0; i < N; ++i) f.push_back(s.basis.function(i));
  MatX G(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double g = s.geo.mass * f[i].ell.dot(f[j].ell) + f[i].rot.dot(s.geo.inertia * f[j].rot);
      for (Eigen::Index p = 0; p < s.disc.volume_size(); ++p) {
        const double w = s.disc.volume_weights[p];
        g += w * s.rho[p] * f[i].values.col(p).dot(f[j].values.col(p));
        g += w * (f[i].gradients[p].array() * f[j].gradients[p].array()).sum();
      }
      G(i, j) = g;
    }
  return G;
}

Points rigid_samples(const Points& y, const Vec3& ell, const Vec3& r) {
  Points v(3, y.cols());
  for (Eigen::Index p = 0; p < y.cols(); ++p) v.col(p) = ell + r.cross(y.col(p));
  return v;
}

}  // namespace

TEST_CASE("basis is orthonormal in the V form") {
  const auto& s = small_setup();
  const MatX G = gram_from_samples(s);
  CHECK((G - MatX::Identity(s.basis.N, s.basis.N)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((s.basis.gram_V - MatX::Identity(s.basis.N, s.basis.N)).cwiseAbs().maxCoeff() < 1e-8);
  Eigen::SelfAdjointEigenSolver<MatX> es(G);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(s.basis.raw_condition > 1.0);
}

TEST_CASE("rigid parts span R^6 and interior modes carry none") {
  const auto& s = small_setup();
  MatX rp(6, s.basis.N);
  rp.topRows(3) = s.basis.ell;
  rp.bottomRows(3) = s.basis.rot;
  Eigen::FullPivLU<MatX> lu(rp);
  CHECK(lu.rank() == 6);
  for (int i = 6; i < s.basis.N; ++i) {
    CHECK(s.basis.ell.col(i).norm() == 0.0);
    CHECK(s.basis.rot.col(i).norm() == 0.0);
  }
  const GalerkinBasis b6 = s.basis.leading(6);
  MatX rp6(6, 6);
  rp6.topRows(3) = b6.ell;
  rp6.bottomRows(3) = b6.rot;
  CHECK(Eigen::FullPivLU<MatX>(rp6).rank() == 6);
}

TEST_CASE("basis functions are divergence free at every node") {
  const auto& s = small_setup();
  for (int i = 0; i < s.basis.N; ++i) {
    const BasisFunction f = s.basis.function(i);
    double gmax = 0.0, dmax = 0.0;
    for (const auto& g : f.gradients) {
      gmax = std::max(gmax, g.cwiseAbs().maxCoeff());
      dmax = std::max(dmax, std::abs(g.trace()));
    }
    CHECK(dmax <= 1e-6 * gmax);
    CHECK(s.basis.div_max[i] <= 1e-6);
  }
}

TEST_CASE("normal trace matches the rigid part on the body and the field vanishes at R") {
  const auto& s = small_setup();
  const auto& S = s.disc.surface_S0;
  for (int i = 0; i < s.basis.N; ++i) {
    const BasisFunction f = s.basis.function(i);
    double scale = 1e-300;
    for (const auto& g : f.gradients) scale = std::max(scale, g.cwiseAbs().maxCoeff());
    for (Eigen::Index q = 0; q < S.size(); ++q) {
      const Vec3 zs = f.ell + f.rot.cross(S.points.col(q));
      CHECK(std::abs((f.trace_S0.col(q) - zs).dot(S.normals.col(q))) <= 1e-6 * scale);
    }
    CHECK(s.basis.TraceBR.col(i).cwiseAbs().maxCoeff() <= 1e-6 * scale);
  }
}

TEST_CASE("rigid lifts reproduce the rigid velocity on the body") {
  const auto& s = small_setup();
  const auto& S = s.disc.surface_S0;
  for (int i = 0; i < 6; ++i) {
    const BasisFunction f = s.basis.function(i);
    // lift part is exact; slip modes in the mix only add a tangential part
    for (Eigen::Index q = 0; q < S.size(); ++q) {
      const Vec3 n = S.normals.col(q);
      const Vec3 zs = f.ell + f.rot.cross(S.points.col(q));
      CHECK(std::abs((f.trace_S0.col(q) - zs).dot(n)) < 1e-10);
    }
  }
}

TEST_CASE("pointwise evaluation agrees with samples and with finite differences") {
  const auto& s = small_setup();
  std::mt19937_64 gen(11);
  const VecX alpha = testing::random_vector(s.basis.N, gen);
  const VecX zs = s.basis.Z * alpha;
  for (Eigen::Index p = 0; p < s.disc.volume_size(); p += 97) {
    const Vec3 y = s.disc.volume_points.col(p);
    CHECK((s.basis.velocity(alpha, y) - zs.segment<3>(3 * p)).norm() < 1e-12 * (1.0 + zs.norm()));
  }
  const double h = 1e-5;
  for (const Vec3& y : {Vec3(1.5, 0.3, -0.2), Vec3(-0.4, 2.2, 1.1), Vec3(0.1, -0.2, 3.1)}) {
    const CurlEval e = s.basis.evaluate(alpha, y, true, false);
    Mat3 fd;
    for (int d = 0; d < 3; ++d) {
      const Vec3 dy = h * Vec3::Unit(d);
      fd.col(d) = (s.basis.velocity(alpha, y + dy) - s.basis.velocity(alpha, y - dy)) / (2 * h);
    }
    CHECK((fd - e.grad).norm() < 1e-6 * (1.0 + e.grad.norm()));
    CHECK(std::abs(fd.trace()) < 1e-6 * (1.0 + fd.norm()));
  }
  CHECK(s.basis.velocity(alpha, Vec3(0, 0, 4.5)).norm() == 0.0);
}

TEST_CASE("cutoff profiles hit their end values") {
  const double a = 1.0, R = 4.0;
  const auto lift_in = cutoff(CutoffKind::Lift, a * a, a, R);
  const auto lift_out = cutoff(CutoffKind::Lift, R * R, a, R);
  CHECK(lift_in.eta == doctest::Approx(1.0));
  CHECK(lift_in.d1 == doctest::Approx(0.0));
  CHECK(lift_out.eta == doctest::Approx(0.0));
  CHECK(lift_out.d1 == doctest::Approx(0.0));
  for (auto k : {CutoffKind::Slip, CutoffKind::Interior}) {
    CHECK(cutoff(k, a * a, a, R).eta == doctest::Approx(0.0));
    CHECK(cutoff(k, R * R, a, R).eta == doctest::Approx(0.0));
    CHECK(cutoff(k, R * R, a, R).d1 == doctest::Approx(0.0));
  }
  CHECK(cutoff(CutoffKind::Interior, a * a, a, R).d1 == doctest::Approx(0.0));
  CHECK(cutoff(CutoffKind::Slip, a * a, a, R).d1 != doctest::Approx(0.0));
}

TEST_CASE("rigid part extraction examples") {
  const Points y = small_setup().disc.surface_S0.points;
  {
    const auto [l, r] = rigid_part_extraction(y, rigid_samples(y, Vec3(1, 2, 3), Vec3::Zero()));
    CHECK((l - Vec3(1, 2, 3)).norm() < 1e-12);
    CHECK(r.norm() < 1e-12);
  }
  {
    const auto [l, r] = rigid_part_extraction(y, rigid_samples(y, Vec3::Zero(), Vec3::UnitZ()));
    CHECK(l.norm() < 1e-12);
    CHECK((r - Vec3::UnitZ()).norm() < 1e-12);
  }
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 l0 = testing::random_vec3(gen), r0 = testing::random_vec3(gen);
    const auto [l, r] = rigid_part_extraction(y, rigid_samples(y, l0, r0));
    CHECK((l - l0).norm() < 1e-12 * (1 + l0.norm()));
    CHECK((r - r0).norm() < 1e-12 * (1 + r0.norm()));
  }
}

TEST_CASE("rigid part extraction with noise matches the normal equations") {
  const Points y = small_setup().disc.volume_points.leftCols(400);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 1e-3);
  const Vec3 l0(0.3, -1.0, 0.5), r0(0.2, 0.7, -0.4);
  Points v = rigid_samples(y, l0, r0);
  for (Eigen::Index p = 0; p < v.cols(); ++p)
    for (int c = 0; c < 3; ++c) v(c, p) += noise(gen);
  const auto [l, r] = rigid_part_extraction(y, v);
  CHECK((l - l0).norm() < 1e-2);
  CHECK((r - r0).norm() < 1e-2);

  // Normal equations A^T A x = A^T b solved by Cholesky.
  Eigen::Matrix<double, 6, 6> AtA = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> Atb = Eigen::Matrix<double, 6, 1>::Zero();
  for (Eigen::Index p = 0; p < y.cols(); ++p) {
    Eigen::Matrix<double, 3, 6> A;
    A << Mat3::Identity(), -hat(y.col(p));
    AtA += A.transpose() * A;
    Atb += A.transpose() * v.col(p);
  }
  const Eigen::Matrix<double, 6, 1> x = AtA.llt().solve(Atb);
  CHECK((x.head<3>() - l).norm() < 1e-10);
  CHECK((x.tail<3>() - r).norm() < 1e-10);
}

TEST_CASE("rigid part extraction rejects degenerate samples") {
  Points flat(3, 10);
  for (int i = 0; i < 10; ++i) flat.col(i) = Vec3(i, i * i, 0.0);
  const Points v = Points::Zero(3, 10);
  try {
    rigid_part_extraction(flat, v);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RigidFitDegenerate);
  }
  CHECK_THROWS_AS(rigid_part_extraction(flat.leftCols(3), v.leftCols(3)), Error);
}

TEST_CASE("H inner product") {
  const auto& s = small_setup();
  const Eigen::Index n = s.disc.volume_size();
  RigidGeometry g2 = s.geo;
  g2.mass = 2.0;
  FieldSamples e1{Points::Zero(3, n), Vec3::UnitX(), Vec3::Zero()};
  CHECK(inner_product_H(s.disc, g2, s.rho, e1, e1) == doctest::Approx(2.0).epsilon(1e-15));

  const BasisFunction f7 = s.basis.function(7), f9 = s.basis.function(9);
  const FieldSamples a{f7.values, f7.ell, f7.rot}, b{f9.values, f9.ell, f9.rot};
  CHECK(inner_product_H(s.disc, s.geo, s.rho, a, b) == inner_product_H(s.disc, s.geo, s.rho, b, a));

  const VecX one = VecX::Ones(n);
  double l2 = 0.0;
  for (Eigen::Index p = 0; p < n; ++p) l2 += s.disc.volume_weights[p] * a.values.col(p).squaredNorm();
  CHECK(inner_product_H(s.disc, s.geo, one, a, a) == doctest::Approx(l2).epsilon(1e-12));

  VecX neg = one;
  neg[3] = -1e-3;
  try {
    inner_product_H(s.disc, s.geo, neg, a, a);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DensityNegative);
  }
}

TEST_CASE("basis construction errors") {
  const auto& s = small_setup();
  BasisOptions o;
  o.N = 5;
  CHECK_THROWS_AS(build_basis(s.disc, s.geo, s.rho, o), Error);
  o.N = 400;
  o.potential_order = 1;
  try {
    build_basis(s.disc, s.geo, s.rho, o);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BasisRankDeficient);
  }
}

TEST_CASE("basis cache round trip") {
  const auto& s = small_setup();
  BasisOptions o;
  o.N = 12;
  const auto key = basis_cache_key(s.disc, s.geo, s.rho, o);
  const auto path = (std::filesystem::temp_directory_path() / "slipfsi_basis_test.bin").string();
  save_basis(s.basis, path, key);
  GalerkinBasis b;
  REQUIRE(load_basis(b, s.disc, path, key, 12, 2));
  CHECK((b.Z - s.basis.Z).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(load_basis(b, s.disc, path, key + 1, 12, 2));
  std::remove(path.c_str());
}
