#pragma once

#include "realens/model_spec.hpp"
#include "realens/rng.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace realens {

enum class EnsembleMode { kPerMember, kAligned };

/// One member of the real ensemble: its beable value a_I (0-based here, 1-based
/// in files) and its phase φ_I in [0, 2π). Pinned members are spectators: they
/// can be copied but never copy anyone, so their class never empties.
struct MemberState {
  std::size_t beable = 0;
  double phase = 0.0;
  bool pinned = false;

  bool operator==(const MemberState&) const = default;
};

struct EnsembleState {
  std::vector<MemberState> members;
  double time = 0.0;
  EnsembleMode mode = EnsembleMode::kAligned;

  std::size_t size() const { return members.size(); }
  bool operator==(const EnsembleState&) const = default;
};

/// n_a per class, plus how many of those members are pinned spectators.
struct OccupationCounts {
  std::vector<std::size_t> counts;
  std::vector<std::size_t> pinned;

  std::size_t total() const;
  std::size_t copiers(std::size_t a) const { return counts[a] - pinned[a]; }
};

class EnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N ≥ 1, beables in range, finite phases, and in aligned mode equal phases
/// within each class. Throws EnsembleError.
void validate_ensemble(const EnsembleState& e, std::size_t dim);

OccupationCounts occupation_counts(const EnsembleState& e, std::size_t dim);

/// Small-occupation corrections to the copy rate and to the drift. Both are
/// zero in this model; they are the places to add such terms.
constexpr double copy_rate_correction(std::size_t /*copier*/, std::size_t /*source*/) {
  return 0.0;
}
constexpr double drift_correction(std::size_t /*member*/) { return 0.0; }

/// Rate at which member `copier` adopts the (beable, phase) of member `source`:
///   kCopyGain · R_{a_I a_J} / √(n_{a_I} n_{a_J}) · sin⁺(φ_J − φ_I + δ_{a_J a_I}).
/// Zero when both share a beable value, and zero for pinned copiers.
double copy_rate(const EnsembleState& e, const OccupationCounts& n, std::size_t copier,
                 std::size_t source, const ModelSpec& spec);
double copy_rate(const EnsembleState& e, std::size_t copier, std::size_t source,
                 const ModelSpec& spec);

/// φ̇_I = ω_{a_I} + Σ_{J≠I} R_{a_I a_J} / √(n_{a_I} n_{a_J}) cos(φ_I − φ_J + δ_{a_I a_J}).
double phase_drift(const EnsembleState& e, const OccupationCounts& n, std::size_t member,
                   const ModelSpec& spec);
double phase_drift(const EnsembleState& e, std::size_t member, const ModelSpec& spec);

/// phase_drift for every member at once, O(N·P) through per-class phasor sums.
/// Members with identical (beable, phase) get bit-identical drifts.
std::vector<double> member_drifts(std::span<const std::size_t> beables,
                                  std::span<const double> phases, const OccupationCounts& n,
                                  const ModelSpec& spec);

/// Per-class circular mean phase; NaN for empty classes.
std::vector<double> class_phases(const EnsembleState& e, std::size_t dim);

/// Aligned-mode drift of each class phase,
///   φ̇_a = ω_a + Σ_b √(n_b/n_a) R_ab cos(φ_a − φ_b + δ_ab);
/// zero for empty classes.
std::vector<double> class_drifts(const OccupationCounts& n, std::span<const double> phases,
                                 const ModelSpec& spec);

/// Total b → a flow (members of b adopting a) in an aligned ensemble:
///   copiers_b · n_a · per-pair rate = kCopyGain √(n_a n_b) R_ab sin⁺(φ_a − φ_b + δ_ab)
/// when nothing is pinned. Zero when either class is empty.
double aggregate_class_rate(const OccupationCounts& n, std::span<const double> phases,
                            const ModelSpec& spec, std::size_t a, std::size_t b);
/// As above, reading counts and phases from `e`; throws in per-member mode.
double aggregate_class_rate(const EnsembleState& e, const ModelSpec& spec, std::size_t a,
                            std::size_t b);

/// Largest total outgoing copy rate of any member in the current state.
double max_member_rate(const EnsembleState& e, const ModelSpec& spec);

/// Upper bound on any member's total outgoing rate over every state reachable
/// with N members: kCopyGain √(N−1) max_a ‖R_a·‖₂.
double member_rate_bound(const ModelSpec& spec, std::size_t members);

/// Largest tau-leap step permitted for a rate λ: Δt·λ ≤ 0.1.
inline constexpr double kTauLeapRateBudget = 0.1;

/// Deterministic phase flow only (no copy events) over `duration`, classical
/// RK4 with steps no longer than `substep`.
EnsembleState advance_phases(EnsembleState e, const ModelSpec& spec, double duration,
                             double substep);

/// Piecewise-deterministic evolution up to the absolute time `horizon`:
/// phases follow the drift between events; copy events are drawn by thinning
/// against the bound obtained from sin⁺ ≤ 1.
EnsembleState step_exact_event(EnsembleState e, const ModelSpec& spec, double horizon,
                               double phase_substep, Rng& rng);

/// One synchronous fixed step: every non-pinned member copies at most once,
/// with probability 1 − exp(−λ_I Δt), choosing its source proportionally to
/// the snapshot rates; then phases advance over Δt. Throws if Δt·max λ > 0.1.
EnsembleState step_tau_leap(EnsembleState e, const ModelSpec& spec, double dt,
                            double phase_substep, Rng& rng);

enum class StepperKind { kExactEvent, kTauLeap };

struct StepSchedule {
  StepperKind stepper = StepperKind::kExactEvent;
  double tau_step = 0.0;        // tau-leap only
  double phase_substep = 1e-3;  // longest RK4 step for the phase flow
  double duration = 0.0;
  std::vector<double> sample_times;  // relative to the start; empty → {0, duration}

  /// Throws EnsembleError on nonpositive steps or unordered/out-of-range samples.
  void validate() const;
  std::vector<double> resolved_samples() const;
};

struct Trajectory {
  std::size_t dim = 0;
  std::size_t members = 0;
  std::vector<double> times;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> phases;  // per-class mean, NaN when empty
};

struct RunResult {
  Trajectory trajectory;
  EnsembleState final_state;
};

/// Evolves `e` under the schedule and samples occupation counts and class
/// phases. Deterministic given the inputs and the state of `rng`.
RunResult run(EnsembleState e, const ModelSpec& spec, const StepSchedule& schedule, Rng& rng);

/// Appends `per_class` pinned members to every class, with the class phase
/// (0 for empty classes).
EnsembleState add_spectators(EnsembleState e, std::size_t per_class, std::size_t dim);

/// Aligned ensemble with the given class counts and class phases.
EnsembleState make_aligned_ensemble(std::span<const std::size_t> counts,
                                    std::span<const double> phases);

/// Aligned ensemble whose N members draw their class independently from ρ.
EnsembleState sample_aligned_ensemble(std::span<const double> rho, std::span<const double> phases,
                                      std::size_t members, Rng& rng);

}  // namespace realens
