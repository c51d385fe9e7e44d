#include "realens/phase_alignment.hpp"

#include "realens/angles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace realens;
using std::numbers::pi;

namespace {

AlignmentState random_state(Rng& rng, std::size_t n, std::size_t dim, double f) {
  AlignmentState s;
  s.stiffness = f;
  for (std::size_t i = 0; i < n; ++i) {
    s.beables.push_back(i % dim);
    s.phases.push_back(testing::uniform(rng, 0, kTwoPi));
    s.momenta.push_back(testing::uniform(rng, -1, 1));
  }
  return s;
}

}  // namespace

TEST_CASE("alignment energy examples") {
  Rng rng(1);
  const ModelSpec spec = testing::random_spec(rng, 3);
  const auto e = make_aligned_ensemble(std::vector<std::size_t>{4, 2, 3}, std::vector<double>{0.3, 1.0, 5.0});
  CHECK(alignment_energy(alignment_from_ensemble(e, 7.0), spec) == 0.0);

  const auto singles = make_aligned_ensemble(std::vector<std::size_t>{1, 1, 1}, std::vector<double>{0.3, 1.0, 5.0});
  CHECK(alignment_energy(alignment_from_ensemble(singles, 7.0), spec) == 0.0);

  AlignmentState one{{0.4}, {1.0}, {0}, 2.0, 0.0};
  CHECK(alignment_energy(one, ModelSpec::zeros(1)) == 0.5);
}

TEST_CASE("potential is invariant under permutations within a class") {
  Rng rng(2);
  const ModelSpec spec = testing::random_spec(rng, 2);
  AlignmentState s = random_state(rng, 10, 2, 3.0);
  std::fill(s.momenta.begin(), s.momenta.end(), 0.0);
  const double v = alignment_energy_terms(s, spec).potential;
  std::swap(s.phases[0], s.phases[4]);
  std::swap(s.phases[1], s.phases[7]);
  CHECK(alignment_energy_terms(s, spec).potential == doctest::Approx(v).epsilon(1e-13));
}

TEST_CASE("drift gradient contraction matches finite differences") {
  Rng rng(3);
  const ModelSpec spec = testing::random_spec(rng, 3);
  const AlignmentState s = random_state(rng, 9, 3, 1.0);
  const auto exact = drift_gradient_contraction(s, spec);
  const double h = 1e-6;
  for (std::size_t i = 0; i < s.size(); ++i) {
    AlignmentState p = s, m = s;
    p.phases[i] += h;
    m.phases[i] -= h;
    const auto wp = alignment_drifts(p, spec), wm = alignment_drifts(m, spec);
    double fd = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) fd += s.momenta[k] * (wp[k] - wm[k]) / (2 * h);
    CHECK(exact[i] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("rates are Hamilton's equations of the energy") {
  Rng rng(4);
  const ModelSpec spec = testing::random_spec(rng, 3);
  const AlignmentState s = random_state(rng, 9, 3, 2.5);
  const auto r = alignment_rates(s, spec);
  const double h = 1e-6;
  for (std::size_t i = 0; i < s.size(); ++i) {
    AlignmentState a = s, b = s;
    a.phases[i] += h;
    b.phases[i] -= h;
    const double dh_dphi = (alignment_energy(a, spec) - alignment_energy(b, spec)) / (2 * h);
    a = s;
    b = s;
    a.momenta[i] += h;
    b.momenta[i] -= h;
    const double dh_dpi = (alignment_energy(a, spec) - alignment_energy(b, spec)) / (2 * h);
    CHECK(r.dphi[i] == doctest::Approx(dh_dpi).epsilon(1e-7));
    CHECK(r.dpi[i] == doctest::Approx(-dh_dphi).epsilon(1e-7));
  }
}

TEST_CASE("aligned zero-momentum states are a fixed point of the momenta") {
  Rng rng(5);
  const ModelSpec spec = testing::random_spec(rng, 3);
  const auto e = make_aligned_ensemble(std::vector<std::size_t>{5, 4, 6}, std::vector<double>{0.2, 2.0, 4.0});
  AlignmentState s = alignment_from_ensemble(e, 20.0);
  const auto r = alignment_rates(s, spec);
  for (double x : r.dpi) CHECK(x == 0.0);

  const double dt = 0.004;
  for (int k = 0; k < 250; ++k) s = step_alignment(s, spec, dt);
  double pmax = 0.0;
  for (double p : s.momenta) pmax = std::max(pmax, std::abs(p));
  CHECK(pmax <= 1e-10);
  const auto drift = advance_phases(e, spec, 1.0, 1e-3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(circular_distance(s.phases[i], drift.members[i].phase) <= 1e-10);
  }
  for (double x : phase_spread(s, 3)) CHECK(x <= 1e-12);
}

TEST_CASE("small spreads oscillate at f sqrt(n)") {
  const ModelSpec spec = ModelSpec::zeros(1);
  const double f = 10.0, amp = 1e-4;
  const std::vector<double> dev{amp, -amp, 0.5 * amp, -0.5 * amp};
  AlignmentState s;
  s.stiffness = f;
  for (double d : dev) {
    s.beables.push_back(0);
    s.phases.push_back(1.0 + d);
    s.momenta.push_back(0.0);
  }
  const double omega = f * 2.0;  // n = 4
  const double dt = 0.005;
  double worst = 0.0;
  for (int k = 1; k <= 400; ++k) {
    s = step_alignment(s, spec, dt);
    worst = std::max(worst, std::abs((s.phases[0] - 1.0) - amp * std::cos(omega * s.time)));
  }
  CHECK(worst <= 1e-3 * amp);
}

TEST_CASE("energy is conserved") {
  Rng rng(6);
  const ModelSpec spec = testing::random_spec(rng, 2);
  AlignmentState s = random_state(rng, 6, 2, 5.0);
  for (double& p : s.momenta) p *= 0.1;
  const auto e0 = alignment_energy_terms(s, spec);
  const double dt = 0.01 / s.stiffness;
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    s = step_alignment(s, spec, dt);
    if (k % 1000 == 0) worst = std::max(worst, std::abs(alignment_energy(s, spec) - e0.total()));
  }
  CHECK(worst / e0.scale() <= 1e-6);
}

TEST_CASE("step size bound and validation") {
  const ModelSpec spec = ModelSpec::zeros(1);
  AlignmentState s{{0.0, 0.1}, {0.0, 0.0}, {0, 0}, 10.0, 0.0};
  CHECK_THROWS_AS(step_alignment(s, spec, 0.011), std::invalid_argument);
  CHECK_NOTHROW(step_alignment(s, spec, 0.01));
  s.stiffness = 0.0;
  CHECK_THROWS_AS(step_alignment(s, spec, 0.001), std::invalid_argument);
  AlignmentState bad{{0.0}, {}, {0}, 1.0, 0.0};
  CHECK_THROWS_AS(alignment_energy(bad, spec), std::invalid_argument);
}

TEST_CASE("spread and class means") {
  AlignmentState s{{0.2, 0.2, 0.0, pi, 1.0}, {0, 0, 0, 0, 0}, {0, 0, 1, 1, 2}, 1.0, 0.0};
  const auto spread = phase_spread(s, 4);
  CHECK(spread[0] == 0.0);
  CHECK(std::isinf(spread[1]));
  CHECK(spread[2] == 0.0);
  CHECK(spread[3] == 0.0);

  AlignmentState g{{0.1, 0.5, 0.2}, {0, 0, 0}, {0, 0, 0}, 1.0, 0.0};
  const double before = phase_spread(g, 1)[0];
  for (double& p : g.phases) p += 2.0;
  CHECK(phase_spread(g, 1)[0] == doctest::Approx(before).epsilon(1e-12));

  AlignmentState m{{0.1, 0.3, 4.0}, {0, 0, 0}, {0, 0, 1}, 1.0, 0.0};
  CHECK(mean_class_phase(m, 0) == doctest::Approx(0.2));
  CHECK(mean_class_phase(m, 1) == doctest::Approx(4.0));
  std::swap(m.phases[0], m.phases[1]);
  CHECK(mean_class_phase(m, 0) == doctest::Approx(0.2));
  CHECK_THROWS(mean_class_phase(m, 2));
}
