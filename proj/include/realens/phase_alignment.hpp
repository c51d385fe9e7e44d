#pragma once

#include "realens/ensemble.hpp"
#include "realens/model_spec.hpp"

#include <cstddef>
#include <vector>

namespace realens {

/// Phases, conjugate momenta and stiffness f of the alignment model. Beable
/// values are frozen: the alignment dynamics has no copy events.
struct AlignmentState {
  std::vector<double> phases;
  std::vector<double> momenta;
  std::vector<std::size_t> beables;
  double stiffness = 1.0;
  double time = 0.0;

  std::size_t size() const { return phases.size(); }
};

/// Throws std::invalid_argument on length mismatch, non-finite entries,
/// nonpositive stiffness or beables out of range.
void validate_alignment(const AlignmentState& s, const ModelSpec& spec);

/// Ω_I for every member (the ensemble phase drift with these phases).
std::vector<double> alignment_drifts(const AlignmentState& s, const ModelSpec& spec);

/// Pieces of H = Σ_I ½π_I² + π_I Ω_I + V, with V = (f²/2) Σ over unordered
/// same-class pairs of sin²(φ_I − φ_J).
struct AlignmentEnergy {
  double kinetic = 0.0;
  double coupling = 0.0;
  double potential = 0.0;

  double total() const { return kinetic + coupling + potential; }
  /// Sum of magnitudes, used as the scale for relative energy drift.
  double scale() const;
};

AlignmentEnergy alignment_energy_terms(const AlignmentState& s, const ModelSpec& spec);
double alignment_energy(const AlignmentState& s, const ModelSpec& spec);

/// Hamilton's equations: φ̇_I = π_I + Ω_I,
///   π̇_I = −f² Σ_{J∈a_I} sin(φ_I−φ_J) cos(φ_I−φ_J) − Σ_K π_K ∂Ω_K/∂φ_I.
struct AlignmentRates {
  std::vector<double> dphi;
  std::vector<double> dpi;
};
AlignmentRates alignment_rates(const AlignmentState& s, const ModelSpec& spec);

/// Σ_K π_K ∂Ω_K/∂φ_I for every I, in O(N·P).
std::vector<double> drift_gradient_contraction(const AlignmentState& s, const ModelSpec& spec);

/// Largest permitted Δt·f.
inline constexpr double kAlignmentStepBudget = 0.1;

/// One step of the two-stage Gauss–Legendre collocation method (symplectic,
/// symmetric, fourth order). Throws if Δt·f > 0.1 or the stage equations do
/// not converge.
AlignmentState step_alignment(const AlignmentState& s, const ModelSpec& spec, double dt);

/// Circular standard deviation of the phases in each class (0 for classes with
/// fewer than two members).
std::vector<double> phase_spread(const AlignmentState& s, std::size_t dim);

/// Circular mean of the phases in class a; throws for an empty class.
double mean_class_phase(const AlignmentState& s, std::size_t a);

/// Alignment state taken from an ensemble, with zero momenta.
AlignmentState alignment_from_ensemble(const EnsembleState& e, double stiffness);

}  // namespace realens
