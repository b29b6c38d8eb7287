#include <doctest.h>

#include "fixtures.hpp"
#include "slipfsi/galerkin.hpp"
#include "slipfsi/propulsion.hpp"

#include <cmath>

using namespace slipfsi;
using testing::small_setup;

namespace {

MatX strain_oracle(const testing::SmallSetup& s, const VecX& nu) {
  // -2 int nu D(z_i):D(z_j) from the per-function gradient samples
  const int N = s.basis.N;
  std::vector<BasisFunction> f;
  for (int i = 0; i < N; ++i) f.push_back(s.basis.function(i));
  MatX A(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double a = 0.0;
      for (Eigen::Index p = 0; p < s.disc.volume_size(); ++p) {
        const Mat3 Di = 0.5 * (f[i].gradients[p] + f[i].gradients[p].transpose());
        const Mat3 Dj = 0.5 * (f[j].gradients[p] + f[j].gradients[p].transpose());
        a += s.disc.volume_weights[p] * nu[p] * (Di.array() * Dj.array()).sum();
      }
      A(i, j) = -2.0 * a;
    }
  return A;
}

double max_eig(const MatX& A) {
  return Eigen::SelfAdjointEigenSolver<MatX>(A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double min_eig(const MatX& A) {
  return Eigen::SelfAdjointEigenSolver<MatX>(A, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

PropulsionFlux swirl(const FluidDiscretization& d, double amp = 1.0) {
  return make_flux(FluxFamily::Swirl, amp, TimeProfile::Constant, d.surface_S0);
}

GalerkinStepper make_stepper(const testing::SmallSetup& s, PropulsionFlux w, PhysicalParams p = {},
                             StepOptions o = {}) {
  return GalerkinStepper(s.disc, s.geo, s.basis, p, std::move(w), s.rho0, 0.0, 0.25, o);
}

}  // namespace

TEST_CASE("mass matrix is symmetric positive definite and bilinear in density") {
  const auto& s = small_setup();
  const MatX M = assemble_mass(s.basis, s.disc, s.geo, s.rho);
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(min_eig(M) > 0.0);

  const MatX F1 = assemble_mass_fluid(s.basis, s.disc, s.rho);
  const MatX F3 = assemble_mass_fluid(s.basis, s.disc, 3.0 * s.rho);
  CHECK((F3 - 3.0 * F1).cwiseAbs().maxCoeff() < 1e-12 * F1.cwiseAbs().maxCoeff());
  const MatX B = assemble_mass_body(s.basis, s.geo);
  CHECK((M - F1 - B).cwiseAbs().maxCoeff() < 1e-14);

  // rho = 1, interior modes: plain L2 product
  const VecX one = VecX::Ones(s.disc.volume_size());
  const MatX M1 = assemble_mass(s.basis, s.disc, s.geo, one);
  const BasisFunction f7 = s.basis.function(7), f10 = s.basis.function(10);
  double l2 = 0.0;
  for (Eigen::Index p = 0; p < s.disc.volume_size(); ++p)
    l2 += s.disc.volume_weights[p] * f7.values.col(p).dot(f10.values.col(p));
  CHECK(M1(7, 10) == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("dissipation matrix is symmetric negative semidefinite and linear in nu and alpha") {
  const auto& s = small_setup();
  const VecX nu = VecX::Ones(s.disc.volume_size()), nus = VecX::Ones(s.disc.surface_S0.size());
  const Dissipation D = assemble_dissipation(s.basis, s.disc, nu, nus, 1.0);
  CHECK((D.viscous - D.viscous.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_eig(D.total()) <= 1e-12);
  CHECK(max_eig(D.slip) <= 1e-12);

  const MatX oracle = strain_oracle(s, nu);
  CHECK((D.viscous - oracle).cwiseAbs().maxCoeff() < 1e-10 * oracle.cwiseAbs().maxCoeff());

  const Dissipation D2 = assemble_dissipation(s.basis, s.disc, 2.0 * nu, 2.0 * nus, 1.0);
  CHECK((D2.total() - 2.0 * D.total()).cwiseAbs().maxCoeff() < 1e-12 * D.total().cwiseAbs().maxCoeff());
  const Dissipation Da = assemble_dissipation(s.basis, s.disc, nu, nus, 2.0);
  CHECK((Da.slip - 2.0 * D.slip).cwiseAbs().maxCoeff() < 1e-13 * D.slip.cwiseAbs().maxCoeff());
  CHECK((Da.viscous - D.viscous).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(assemble_dissipation(s.basis, s.disc, nu, nus, -1.0), Error);

  // no slip gap, no slip dissipation
  const Dissipation D0 = assemble_dissipation(s.basis, s.disc, nu, nus, 0.0);
  CHECK(D0.slip.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forcing vector") {
  const auto& s = small_setup();
  const VecX nus = VecX::Ones(s.disc.surface_S0.size());
  CHECK(assemble_forcing(s.basis, s.disc, Points::Zero(3, s.disc.surface_S0.size()), nus, 1.0).norm() == 0.0);

  // Oracle on a finer surface rule, evaluating the basis pointwise.
  const PropulsionFlux w = swirl(s.disc, 0.8);
  const VecX C = assemble_forcing(s.basis, s.disc, w.samples, nus, 1.5);
  const FluidDiscretization fine = build_discretization(s.sphere, 4.0, 16);
  const auto& S = fine.surface_S0;
  VecX oracle = VecX::Zero(s.basis.N);
  for (int j = 0; j < s.basis.N; ++j) {
    const VecX e = VecX::Unit(s.basis.N, j);
    const Vec3 l = s.basis.rigid_ell(e), r = s.basis.rigid_rot(e);
    for (Eigen::Index q = 0; q < S.size(); ++q) {
      const Vec3 y = S.points.col(q);
      const Vec3 wq = 0.8 * Vec3::UnitZ().cross(Vec3(S.normals.col(q)));
      oracle[j] += 2.0 * 1.5 * S.weights[q] * wq.dot(s.basis.velocity(e, y) - (l + r.cross(y)));
    }
  }
  CHECK((C - oracle).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + oracle.cwiseAbs().maxCoeff()));

  Points bad = w.samples;
  bad.col(0) += s.disc.surface_S0.normals.col(0);
  try {
    assemble_forcing(s.basis, s.disc, bad, nus, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FluxNotTangential);
  }
}

TEST_CASE("nonlinear vector vanishes at zero and the gyroscopic terms are energy neutral") {
  const auto& s = small_setup();
  const VecX z = VecX::Zero(s.basis.N);
  CHECK(assemble_nonlinear(s.basis, s.disc, s.geo, s.rho, z, z).norm() == 0.0);
  CHECK(det3(2.0 * Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()) == 2.0);
  const Vec3 l(0.3, -0.1, 0.8), r(1.0, 0.2, -0.5);
  CHECK(det3(2.0 * l, r, l) == doctest::Approx(0.0).scale(1.0));

  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const VecX u = testing::random_vector(s.basis.N, gen);
    CHECK(std::abs(gyroscopic_contraction(s.basis, s.disc, s.geo, s.rho, u)) <= 1e-10 * u.squaredNorm());
  }
}

TEST_CASE("skew convection and gyroscopic matrices are antisymmetric") {
  const auto& s = small_setup();
  std::mt19937_64 gen(12);
  const VecX v = testing::random_vector(s.basis.N, gen);
  const Points w = relative_velocity_nodes(s.basis, s.disc, v);
  const MatX K = assemble_convection_skew(s.basis, s.disc, s.rho, w);
  CHECK((K + K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const MatX G = assemble_gyroscopic(s.basis, s.disc, s.geo, s.rho, Vec3(0.3, -1.0, 0.4));
  CHECK((G + G.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const VecX u = testing::random_vector(s.basis.N, gen);
  CHECK(std::abs(u.dot(K * u)) < 1e-12 * (u.squaredNorm() * K.norm()));
}

TEST_CASE("gyroscopic matrix vanishes without rotation and is linear in r") {
  const auto& s = small_setup();
  CHECK(assemble_gyroscopic(s.basis, s.disc, s.geo, s.rho, Vec3::Zero()).norm() == 0.0);
  const Vec3 r1(0.2, -0.4, 1.0), r2(-0.7, 0.1, 0.3);
  const MatX G1 = assemble_gyroscopic(s.basis, s.disc, s.geo, s.rho, r1);
  const MatX G2 = assemble_gyroscopic(s.basis, s.disc, s.geo, s.rho, r2);
  const MatX G12 = assemble_gyroscopic(s.basis, s.disc, s.geo, s.rho, r1 + 2.0 * r2);
  CHECK((G12 - G1 - 2.0 * G2).cwiseAbs().maxCoeff() < 1e-12 * G12.cwiseAbs().maxCoeff());
}

TEST_CASE("relative velocity subtracts the rigid motion") {
  const auto& s = small_setup();
  const VecX z = VecX::Zero(s.basis.N);
  CHECK(relative_velocity_nodes(s.basis, s.disc, z).norm() == 0.0);
  std::mt19937_64 gen(2);
  const VecX a = testing::random_vector(s.basis.N, gen);
  const Points w = relative_velocity_nodes(s.basis, s.disc, a);
  const VecX u = s.basis.Z * a;
  const Vec3 y = s.disc.volume_points.col(5);
  const Vec3 expect = u.segment<3>(15) - (s.basis.rigid_ell(a) + s.basis.rigid_rot(a).cross(y));
  CHECK((w.col(5) - expect).norm() < 1e-14 * (1.0 + expect.norm()));
}

TEST_CASE("viscosity law stays inside its bounds") {
  PhysicalParams p;
  p.variable_viscosity = true;
  p.nu1 = 0.5;
  p.nu2 = 2.0;
  const VecX rho = VecX::LinSpaced(50, 0.0, 100.0);
  const VecX nu = viscosity_samples(rho, p);
  CHECK(nu.minCoeff() >= 0.5);
  CHECK(nu.maxCoeff() <= 2.0);
  CHECK(viscosity_law(0.0, p) == 0.5);
  CHECK(viscosity_law(1.0, p) == doctest::Approx(1.25));
  PhysicalParams c;
  c.nu = 0.3;
  CHECK(viscosity_law(7.0, c) == 0.3);
}

TEST_CASE("zero data stays exactly zero") {
  const auto& s = small_setup();
  PropulsionFlux none;
  GalerkinStepper st = make_stepper(s, none);
  CHECK(st.fixed_point_map(VecX::Zero(s.basis.N), 0.01).norm() == 0.0);
  for (int k = 0; k < 20; ++k) {
    const StepDiagnostics d = st.step(0.01);
    CHECK(d.picard_iterations == 1);
  }
  CHECK(st.state().alpha.norm() == 0.0);
  for (const auto& row : st.ledger().rows) {
    CHECK(row.E_fluid == 0.0);
    CHECK(row.E_body == 0.0);
    CHECK(row.D_visc == 0.0);
    CHECK(row.D_slip == 0.0);
    CHECK(row.W_budget == 0.0);
    CHECK(row.slack == 0.0);
  }
  CHECK(st.state().pose.h.norm() == 0.0);
}

TEST_CASE("without propulsion the energy does not increase") {
  const auto& s = small_setup();
  PropulsionFlux none;
  GalerkinStepper st = make_stepper(s, none);
  std::mt19937_64 gen(31);
  st.set_initial(0.3 * testing::random_vector(s.basis.N, gen));
  const auto& L = st.ledger();
  for (int k = 0; k < 20; ++k) {
    st.step(0.01);
    const std::size_t n = L.rows.size();
    CHECK(L.total_energy(n - 1) <= L.total_energy(n - 2) + 1e-8);
  }
  CHECK(L.total_energy(L.rows.size() - 1) < L.E0);
}

TEST_CASE("ledger with propulsion: slack, monotone dissipation, bookkeeping") {
  const auto& s = small_setup();
  GalerkinStepper st = make_stepper(s, swirl(s.disc));
  std::mt19937_64 gen(32);
  st.set_initial(0.2 * testing::random_vector(s.basis.N, gen));
  const double E0 = st.ledger().E0;
  for (int k = 0; k < 20; ++k) {
    const StepDiagnostics d = st.step(0.01);
    CHECK(d.mass_min_eig > 0.0);
    CHECK(d.dissipation_max_eig <= 1e-12);
    CHECK(std::abs(d.gyro_contraction) <= 1e-10 * std::max(1.0, d.gyro_scale));
    CHECK(d.rho_min >= 1.0);
    CHECK(d.rho_max <= 2.0);
  }
  const auto& rows = st.ledger().rows;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].slack >= -1e-8 * (1.0 + E0));
    CHECK(rows[k].D_visc >= rows[k - 1].D_visc);
    CHECK(rows[k].D_slip >= rows[k - 1].D_slip);
    CHECK(rows[k].W_budget >= rows[k - 1].W_budget);
    CHECK(rows[k].D_slip >= 0.0);
  }
  // energy from the ledger matches the state
  const auto& state = st.state();
  CHECK(rows.back().E_fluid + rows.back().E_body ==
        doctest::Approx(st.energy(state.alpha, state.rho.shifted())).epsilon(1e-12));
  CHECK(rows.back().t == doctest::Approx(0.2));
}

TEST_CASE("doubling alpha doubles the slip dissipation for the same gap") {
  const auto& s = small_setup();
  std::mt19937_64 gen(3);
  const VecX a = testing::random_vector(s.basis.N, gen);
  const VecX nu = VecX::Ones(s.disc.volume_size()), nus = VecX::Ones(s.disc.surface_S0.size());
  const double s1 = -a.dot(assemble_dissipation(s.basis, s.disc, nu, nus, 0.7).slip * a);
  const double s2 = -a.dot(assemble_dissipation(s.basis, s.disc, nu, nus, 1.4).slip * a);
  CHECK(s1 > 0.0);
  CHECK(s2 == doctest::Approx(2.0 * s1).epsilon(1e-13));
}

TEST_CASE("fixed point map is a contraction for small steps") {
  const auto& s = small_setup();
  GalerkinStepper st = make_stepper(s, swirl(s.disc));
  std::mt19937_64 gen(44);
  st.set_initial(0.2 * testing::random_vector(s.basis.N, gen));
  double q = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const VecX v1 = st.state().alpha + 0.05 * testing::random_vector(s.basis.N, gen);
    const VecX v2 = st.state().alpha + 0.05 * testing::random_vector(s.basis.N, gen);
    q = std::max(q, (st.fixed_point_map(v1, 0.005) - st.fixed_point_map(v2, 0.005)).norm() / (v1 - v2).norm());
  }
  MESSAGE("Lipschitz estimate " << q);
  CHECK(q < 1.0);
}

TEST_CASE("converged step is a fixed point and halving dt does not add iterations") {
  const auto& s = small_setup();
  std::mt19937_64 gen(45);
  const VecX a0 = 0.2 * testing::random_vector(s.basis.N, gen);
  int prev = 1 << 30;
  for (double dt : {0.02, 0.01, 0.005}) {
    GalerkinStepper st = make_stepper(s, swirl(s.disc));
    st.set_initial(a0);
    const StepDiagnostics d = st.step(dt);
    CHECK(d.picard_residual <= 1e-8);
    CHECK(d.picard_iterations <= prev);
    prev = d.picard_iterations;
  }
}

TEST_CASE("step errors") {
  const auto& s = small_setup();
  GalerkinStepper st = make_stepper(s, swirl(s.disc));
  CHECK_THROWS_AS(st.step(0.0), Error);
  CHECK_THROWS_AS(st.set_initial(VecX::Zero(3)), Error);
  PhysicalParams p;
  p.alpha = -1.0;
  CHECK_THROWS_AS(make_stepper(s, swirl(s.disc), p), Error);

  StepOptions o;
  o.picard_max_iter = 1;
  o.picard_tol = 1e-300;
  GalerkinStepper stall = make_stepper(s, swirl(s.disc), {}, o);
  std::mt19937_64 gen(1);
  stall.set_initial(testing::random_vector(s.basis.N, gen));
  try {
    stall.step(0.01);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PicardStalled);
  }
}

TEST_CASE("initial projection reproduces fields in the span") {
  const auto& s = small_setup();
  std::mt19937_64 gen(9);
  const VecX a = testing::random_vector(s.basis.N, gen);
  const VecX u = s.basis.Z * a;
  const FieldSamples f{Eigen::Map<const Points>(u.data(), 3, s.disc.volume_size()), s.basis.rigid_ell(a),
                       s.basis.rigid_rot(a)};
  const VecX b = project_initial(s.basis, s.disc, s.geo, s.rho, f);
  CHECK((b - a).norm() < 1e-10 * a.norm());
}
