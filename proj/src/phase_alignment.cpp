#include "realens/phase_alignment.hpp"

#include "realens/angles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace realens {

namespace {

using cplx = std::complex<double>;

OccupationCounts counts_of(const AlignmentState& s, std::size_t dim) {
  OccupationCounts n{std::vector<std::size_t>(dim, 0), std::vector<std::size_t>(dim, 0)};
  for (std::size_t a : s.beables) ++n.counts.at(a);
  return n;
}

// First phase of each class; intra-class sums are taken relative to it so an
// aligned class produces exact zeros.
std::vector<double> class_reference(const AlignmentState& s, std::size_t dim) {
  std::vector<double> ref(dim, 0.0);
  std::vector<bool> seen(dim, false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!seen[s.beables[i]]) {
      ref[s.beables[i]] = s.phases[i];
      seen[s.beables[i]] = true;
    }
  }
  return ref;
}

}  // namespace

void validate_alignment(const AlignmentState& s, const ModelSpec& spec) {
  if (s.momenta.size() != s.size() || s.beables.size() != s.size()) {
    throw std::invalid_argument("alignment state vectors differ in length");
  }
  if (!(s.stiffness > 0.0) || !std::isfinite(s.stiffness)) {
    throw std::invalid_argument("stiffness must be positive and finite");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.beables[i] >= spec.dim) throw std::invalid_argument("beable out of range");
    if (!std::isfinite(s.phases[i]) || !std::isfinite(s.momenta[i])) {
      throw std::invalid_argument("alignment state has non-finite entries");
    }
  }
}


double AlignmentEnergy::scale() const {
  return std::abs(kinetic) + std::abs(coupling) + std::abs(potential);
}

AlignmentEnergy alignment_energy_terms(const AlignmentState& s, const ModelSpec& spec) {
  validate_alignment(s, spec);
  const auto omega = alignment_drifts(s, spec);
  AlignmentEnergy e;
  for (std::size_t i = 0; i < s.size(); ++i) {
    e.kinetic += 0.5 * s.momenta[i] * s.momenta[i];
    e.coupling += s.momenta[i] * omega[i];
  }
  std::vector<std::vector<std::size_t>> by_class(spec.dim);
  for (std::size_t i = 0; i < s.size(); ++i) by_class[s.beables[i]].push_back(i);
  const double half_f2 = 0.5 * s.stiffness * s.stiffness;
  for (const auto& members : by_class) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        const double d = std::sin(s.phases[members[x]] - s.phases[members[y]]);
        e.potential += half_f2 * d * d;
      }
    }
  }
  return e;
}

double alignment_energy(const AlignmentState& s, const ModelSpec& spec) {
  return alignment_energy_terms(s, spec).total();
}

namespace {

std::vector<cplx> unit_phasors(const AlignmentState& s) {
  std::vector<cplx> z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = std::polar(1.0, s.phases[i]);
  return z;
}

// Same sums as member_drifts, reusing the member phasors.
std::vector<double> drifts_from(const AlignmentState& s, const ModelSpec& spec,
                                const OccupationCounts& n, const std::vector<cplx>& z) {
  const std::size_t p = spec.dim;
  std::vector<cplx> sums(p, cplx{});
  for (std::size_t j = 0; j < s.size(); ++j) sums[s.beables[j]] += std::conj(z[j]);
  std::vector<cplx> folded(p * p, cplx{});
  for (std::size_t a = 0; a < p; ++a) {
    if (n.counts[a] == 0) continue;
    for (std::size_t b = 0; b < p; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      const double r = spec.coupling(ia, ib);
      if (b == a || r == 0.0 || n.counts[b] == 0) continue;
      const double k = r / std::sqrt(static_cast<double>(n.counts[a]) * static_cast<double>(n.counts[b]));
      folded[a * p + b] = k * std::polar(1.0, spec.phase_offset(ia, ib)) * sums[b];
    }
  }
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t a = s.beables[i];
    double drift = spec.omega[a];
    for (std::size_t b = 0; b < p; ++b) drift += (z[i] * folded[a * p + b]).real();
    out[i] = drift + drift_correction(i);
  }
  return out;
}

std::vector<double> contraction_from(const AlignmentState& s, const ModelSpec& spec,
                                     const OccupationCounts& n, const std::vector<cplx>& z) {
  const std::size_t p = spec.dim;
  // u_b = Σ_{K∈b} e^{−iφ_K},  v_b = Σ_{K∈b} π_K e^{iφ_K}
  std::vector<cplx> u(p, cplx{}), v(p, cplx{});
  for (std::size_t k = 0; k < s.size(); ++k) {
    u[s.beables[k]] += std::conj(z[k]);
    v[s.beables[k]] += s.momenta[k] * z[k];
  }
  // folded per class: A_a = Σ_b k_ab e^{iδ_ba} v_b,  B_a = Σ_b k_ab e^{iδ_ab} u_b
  std::vector<cplx> fa(p, cplx{}), fb(p, cplx{});
  for (std::size_t a = 0; a < p; ++a) {
    if (n.counts[a] == 0) continue;
    for (std::size_t b = 0; b < p; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      const double r = spec.coupling(ia, ib);
      if (b == a || r == 0.0 || n.counts[b] == 0) continue;
      const double k = r / std::sqrt(static_cast<double>(n.counts[a]) * static_cast<double>(n.counts[b]));
      fa[a] += k * std::polar(1.0, spec.phase_offset(ib, ia)) * v[b];
      fb[a] += k * std::polar(1.0, spec.phase_offset(ia, ib)) * u[b];
    }
  }
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t a = s.beables[i];
    // Σ_{K∉a} π_K k sin(φ_K − φ_I + δ_{ba})  −  π_I Σ_{J∉a} k sin(φ_I − φ_J + δ_{ab})
    out[i] = (std::conj(z[i]) * fa[a]).imag() - s.momenta[i] * (z[i] * fb[a]).imag();
  }
  return out;
}

}  // namespace

std::vector<double> alignment_drifts(const AlignmentState& s, const ModelSpec& spec) {
  return drifts_from(s, spec, counts_of(s, spec.dim), unit_phasors(s));
}

std::vector<double> drift_gradient_contraction(const AlignmentState& s, const ModelSpec& spec) {
  return contraction_from(s, spec, counts_of(s, spec.dim), unit_phasors(s));
}

AlignmentRates alignment_rates(const AlignmentState& s, const ModelSpec& spec) {
  const std::size_t p = spec.dim;
  const auto z = unit_phasors(s);
  const auto n = counts_of(s, p);
  const auto omega = drifts_from(s, spec, n, z);
  const auto contraction = contraction_from(s, spec, n, z);
  const auto ref = class_reference(s, p);
  // Σ_J sin(φ_I−φ_J)cos(φ_I−φ_J) = ½ Im(e^{2iΔ_I} Σ_J e^{−2iΔ_J}), Δ relative to the class reference
  std::vector<cplx> zref(p);
  for (std::size_t a = 0; a < p; ++a) zref[a] = std::polar(1.0, -ref[a]);
  std::vector<cplx> w(p, cplx{});
  std::vector<cplx> rel(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    const cplx d = z[j] * zref[s.beables[j]];
    rel[j] = d * d;
    w[s.beables[j]] += std::conj(rel[j]);
  }
  const double f2 = s.stiffness * s.stiffness;
  AlignmentRates out{std::vector<double>(s.size()), std::vector<double>(s.size())};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double pull = 0.5 * (rel[i] * w[s.beables[i]]).imag();
    out.dphi[i] = s.momenta[i] + omega[i];
    out.dpi[i] = -f2 * pull - contraction[i];
  }
  return out;
}

AlignmentState step_alignment(const AlignmentState& s, const ModelSpec& spec, double dt) {
  validate_alignment(s, spec);
  if (!(dt > 0.0) || dt * s.stiffness > kAlignmentStepBudget * (1.0 + 1e-12)) {
    throw std::invalid_argument("alignment step violates dt*f <= 0.1");
  }
  // Gauss–Legendre, two stages
  const double r3 = std::sqrt(3.0);
  const double a11 = 0.25, a12 = 0.25 - r3 / 6.0;
  const double a21 = 0.25 + r3 / 6.0, a22 = 0.25;
  const std::size_t n = s.size();

  AlignmentState y1 = s, y2 = s;
  AlignmentRates k1 = alignment_rates(s, spec);
  AlignmentRates k2 = k1;
  double magnitude = 1.0;
  for (std::size_t i = 0; i < n; ++i) magnitude = std::max({magnitude, std::abs(s.phases[i]), std::abs(s.momenta[i])});
  constexpr int kMaxIterations = 100;
  double previous = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < kMaxIterations && !converged; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      y1.phases[i] = s.phases[i] + dt * (a11 * k1.dphi[i] + a12 * k2.dphi[i]);
      y1.momenta[i] = s.momenta[i] + dt * (a11 * k1.dpi[i] + a12 * k2.dpi[i]);
      y2.phases[i] = s.phases[i] + dt * (a21 * k1.dphi[i] + a22 * k2.dphi[i]);
      y2.momenta[i] = s.momenta[i] + dt * (a21 * k1.dpi[i] + a22 * k2.dpi[i]);
    }
    AlignmentRates n1 = alignment_rates(y1, spec);
    AlignmentRates n2 = alignment_rates(y2, spec);
    double change = 0.0, size = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max({change, std::abs(n1.dphi[i] - k1.dphi[i]), std::abs(n2.dphi[i] - k2.dphi[i]),
                         std::abs(n1.dpi[i] - k1.dpi[i]), std::abs(n2.dpi[i] - k2.dpi[i])});
      size = std::max({size, std::abs(n1.dphi[i]), std::abs(n1.dpi[i]), std::abs(n2.dphi[i]),
                       std::abs(n2.dpi[i])});
    }
    k1 = std::move(n1);
    k2 = std::move(n2);
    // stop at round-off in the state, or once the iteration stops contracting
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * magnitude;
    converged = dt * change <= floor || (change <= 1e-10 * std::max(size, 1.0) && change >= previous);
    previous = change;
  }
  if (!converged) throw std::runtime_error("alignment stage equations did not converge");

  AlignmentState out = s;
  for (std::size_t i = 0; i < n; ++i) {
    out.phases[i] = s.phases[i] + 0.5 * dt * (k1.dphi[i] + k2.dphi[i]);
    out.momenta[i] = s.momenta[i] + 0.5 * dt * (k1.dpi[i] + k2.dpi[i]);
  }
  out.time = s.time + dt;
  return out;
}

std::vector<double> phase_spread(const AlignmentState& s, std::size_t dim) {
  std::vector<std::vector<double>> by_class(dim);
  for (std::size_t i = 0; i < s.size(); ++i) by_class.at(s.beables[i]).push_back(s.phases[i]);
  std::vector<double> out(dim, 0.0);
  for (std::size_t a = 0; a < dim; ++a) out[a] = circular_std(by_class[a]);
  return out;
}

double mean_class_phase(const AlignmentState& s, std::size_t a) {
  std::vector<double> members;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.beables[i] == a) members.push_back(s.phases[i]);
  }
  if (members.empty()) throw std::invalid_argument("mean_class_phase: empty class");
  return circular_mean(members);
}

AlignmentState alignment_from_ensemble(const EnsembleState& e, double stiffness) {
  AlignmentState s;
  s.stiffness = stiffness;
  s.time = e.time;
  for (const auto& m : e.members) {
    s.phases.push_back(m.phase);
    s.momenta.push_back(0.0);
    s.beables.push_back(m.beable);
  }
  return s;
}

}  // namespace realens
