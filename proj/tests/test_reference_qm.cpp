#include "realens/reference_qm.hpp"

#include "realens/angles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace realens;
using std::numbers::pi;

namespace {

ModelSpec sigma_x() {
  ModelSpec s = ModelSpec::zeros(2);
  s.coupling(0, 1) = s.coupling(1, 0) = 1.0;
  return s;
}

std::vector<double> densities(const QuantumState& q) {
  std::vector<double> r;
  for (Eigen::Index a = 0; a < q.amplitudes.size(); ++a) r.push_back(std::norm(q.amplitudes(a)));
  return r;
}

}  // namespace

TEST_CASE("ensemble to Madelung") {
  const auto e = make_aligned_ensemble(std::vector<std::size_t>{3, 1}, std::vector<double>{0.1, 0.2});
  const auto m = ensemble_to_madelung(e, 2);
  CHECK(m.rho == std::vector<double>{0.75, 0.25});
  CHECK(m.phi[0] == doctest::Approx(0.1));
  CHECK(m.phi[1] == doctest::Approx(0.2));

  const auto f = make_aligned_ensemble(std::vector<std::size_t>{4, 0}, std::vector<double>{0.0, 0.0});
  const auto mf = ensemble_to_madelung(f, 2);
  CHECK(mf.rho == std::vector<double>{1.0, 0.0});
  CHECK_FALSE(mf.has_phase(1));

  auto per = e;
  per.mode = EnsembleMode::kPerMember;
  CHECK_THROWS_AS(ensemble_to_madelung(per, 2), EnsembleError);
}

TEST_CASE("Madelung and amplitude conversions") {
  const QuantumState q = madelung_to_quantum({{1.0, 0.0}, {0.0, NAN}});
  CHECK(q.amplitudes(0) == std::complex<double>(1.0, 0.0));
  CHECK(q.amplitudes(1) == std::complex<double>(0.0, 0.0));

  const QuantumState h = madelung_to_quantum({{0.5, 0.5}, {0.0, pi / 2}});
  CHECK(std::abs(h.amplitudes(0) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(h.amplitudes(1) - std::complex<double>(0.0, -1.0 / std::sqrt(2.0))) < 1e-15);

  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const MadelungState m = testing::random_madelung(rng, 5, 0.01);
    const MadelungState back = quantum_to_madelung(madelung_to_quantum(m));
    for (std::size_t a = 0; a < 5; ++a) {
      CHECK(back.rho[a] == doctest::Approx(m.rho[a]).epsilon(1e-14));
      CHECK(circular_distance(back.phi[a], m.phi[a]) < 1e-13);
    }
  }
  CHECK_THROWS(madelung_to_quantum({{0.5, 0.6}, {0.0, 0.0}}));
}

TEST_CASE("Schrodinger propagation") {
  const Hamiltonian h = spec_to_hamiltonian(sigma_x());
  const QuantumState q0{Eigen::Vector2cd(1.0, 0.0)};
  const auto same = evolve_schrodinger(q0, h, 0.0);
  CHECK((same.amplitudes - q0.amplitudes).norm() < 1e-15);

  for (double t : {0.3, 1.0, pi / 2, 2.7}) {
    const auto r = densities(evolve_schrodinger(q0, h, t));
    CHECK(r[0] == doctest::Approx(std::cos(t) * std::cos(t)).epsilon(1e-13));
  }
  const auto half = densities(evolve_schrodinger(q0, h, pi / 2));
  CHECK(half[0] < 1e-28 + 1e-15);
  CHECK(half[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("unitarity and spectral invariance") {
  Rng rng(17);
  for (int k = 0; k < 10; ++k) {
    const Hamiltonian h = testing::random_hermitian(rng, 6);
    const QuantumState q = madelung_to_quantum(testing::random_madelung(rng, 6));
    const SchrodingerPropagator prop(h);
    for (double t : {0.5, 10.0, 1000.0}) CHECK(std::abs(prop.evolve(q, t).norm() - 1.0) <= 1e-12);

    Hamiltonian shifted = h;
    shifted.matrix.diagonal().array() += 3.7;
    const auto a = densities(evolve_schrodinger(q, h, 2.0));
    const auto b = densities(evolve_schrodinger(q, shifted, 2.0));
    CHECK(testing::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("Madelung right-hand side matches the Schrodinger derivative") {
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const ModelSpec s = testing::random_spec(rng, 4);
    const MadelungState m = testing::random_madelung(rng, 4);
    std::vector<double> drho, dphi;
    madelung_rhs(s, m.rho, m.phi, drho, dphi);
    const double h = 1e-5;
    const SchrodingerPropagator prop(spec_to_hamiltonian(s));
    const auto plus = quantum_to_madelung(prop.evolve(madelung_to_quantum(m), h));
    const auto minus = quantum_to_madelung(prop.evolve(madelung_to_quantum(m), -h));
    for (std::size_t a = 0; a < 4; ++a) {
      CHECK((plus.rho[a] - minus.rho[a]) / (2 * h) == doctest::Approx(drho[a]).epsilon(1e-6));
      CHECK(wrap_signed(plus.phi[a] - minus.phi[a]) / (2 * h) == doctest::Approx(dphi[a]).epsilon(1e-6));
    }
  }
}

TEST_CASE("integrate_madelung") {
  ModelSpec free = ModelSpec::zeros(3);
  free.omega = {1.0, -2.0, 0.5};
  const MadelungState m{{0.2, 0.3, 0.5}, {0.0, 1.0, 2.0}};
  const auto out = integrate_madelung(m, free, 1.3, 0.01);
  CHECK(out.rho == m.rho);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(circular_distance(out.phi[a], m.phi[a] + free.omega[a] * 1.3) < 1e-12);
  }

  Rng rng(23);
  for (int k = 0; k < 5; ++k) {
    const ModelSpec s = testing::random_spec(rng, 4);
    const MadelungState m0 = testing::random_madelung(rng, 4, 0.05);
    const auto ode = integrate_madelung(m0, s, 1.0, 1e-3);
    const auto ref = densities(evolve_schrodinger(madelung_to_quantum(m0), spec_to_hamiltonian(s), 1.0));
    CHECK(testing::max_abs_diff(ode.rho, ref) <= 1e-8);
    double sum = 0.0;
    for (double r : ode.rho) sum += r;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("global phase shifts leave densities unchanged") {
  Rng rng(31);
  const ModelSpec s = testing::random_spec(rng, 3);
  MadelungState m = testing::random_madelung(rng, 3);
  const auto a = integrate_madelung(m, s, 2.0, 1e-3);
  for (double& p : m.phi) p += 1.234;
  const auto b = integrate_madelung(m, s, 2.0, 1e-3);
  CHECK(testing::max_abs_diff(a.rho, b.rho) < 1e-12);
}

TEST_CASE("node proximity") {
  const MadelungState start{{1.0, 0.0}, {0.0, NAN}};
  CHECK_THROWS_AS(integrate_madelung(start, sigma_x(), 1.0, 1e-3), NodeProximityError);

  // ρ_1 = cos²t passes through zero near π/2
  const MadelungState nearly{{1.0 - 1e-6, 1e-6}, {0.0, pi / 2}};
  try {
    integrate_madelung(nearly, sigma_x(), 3.0, 1e-3);
    FAIL("expected a node error");
  } catch (const NodeProximityError& e) {
    CHECK(e.cls == 0);
    CHECK(e.time == doctest::Approx(pi / 2).epsilon(0.01));
  }
}

TEST_CASE("sampled paths and observation probability") {
  const MadelungState m{{0.75, 0.25}, {0.0, 0.0}};
  CHECK(observation_probability(m, 0) == 0.75);
  CHECK(observation_probability(m, 1) == 0.25);
  CHECK_THROWS(observation_probability(m, 2));

  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto path = integrate_madelung_path(m, sigma_x(), times, 1e-3);
  REQUIRE(path.size() == 3);
  CHECK(path[0].rho == m.rho);
  const auto direct = integrate_madelung(m, sigma_x(), 1.0, 1e-3);
  CHECK(testing::max_abs_diff(path[2].rho, direct.rho) < 1e-12);
}
