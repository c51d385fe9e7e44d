#pragma once

#include "realens/model_spec.hpp"
#include "realens/reference_qm.hpp"
#include "realens/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace realens::testing {

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Fully connected spec with R in [0, rmax], ω in [−1, 1], δ in (−π, π].
inline ModelSpec random_spec(Rng& rng, std::size_t dim, double rmax = 1.0, double hbar = 1.0) {
  ModelSpec s = ModelSpec::zeros(dim, hbar);
  for (std::size_t a = 0; a < dim; ++a) {
    s.omega[a] = uniform(rng, -1.0, 1.0);
    for (std::size_t b = a + 1; b < dim; ++b) {
      const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
      s.coupling(i, j) = s.coupling(j, i) = uniform(rng, 0.0, rmax);
      const double d = uniform(rng, -std::numbers::pi, std::numbers::pi);
      s.phase_offset(i, j) = d;
      s.phase_offset(j, i) = -d;
    }
  }
  return s;
}

/// A + A† with Gaussian entries.
inline Hamiltonian random_hermitian(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> g;
  const auto p = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = {g(rng), g(rng)};
  }
  Eigen::MatrixXcd h = a + a.adjoint();
  for (Eigen::Index i = 0; i < p; ++i) h(i, i) = h(i, i).real();
  return Hamiltonian{h};
}

/// Random Madelung state with every ρ_a ≥ floor.
inline MadelungState random_madelung(Rng& rng, std::size_t dim, double floor = 0.05) {
  std::vector<double> w(dim);
  double total = 0.0;
  for (double& x : w) total += (x = -std::log1p(-uniform01(rng)));
  MadelungState m;
  const double free = 1.0 - floor * static_cast<double>(dim);
  for (double x : w) {
    m.rho.push_back(floor + free * x / total);
    m.phi.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
  }
  return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace realens::testing
