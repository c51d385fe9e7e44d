#pragma once

#include "realens/ensemble.hpp"
#include "realens/model_spec.hpp"
#include "realens/reference_qm.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace realens {

/// ½ Σ_a |p_a − q_a|. Both inputs must sum to 1 within 1e-9, be nonnegative
/// and have equal length; otherwise std::invalid_argument.
double total_variation(std::span<const double> p, std::span<const double> q);

/// max_a |p_a − q_a|.
double max_class_deviation(std::span<const double> p, std::span<const double> q);

/// n_a / Σ n.
std::vector<double> empirical_distribution(std::span<const std::size_t> counts);

/// |ψ(t)|² from the exact propagator at each time.
std::vector<std::vector<double>> reference_densities(const ModelSpec& spec,
                                                     const QuantumState& initial,
                                                     std::span<const double> times);

struct SampleMetrics {
  double time = 0.0;
  double total_variation = 0.0;
  double max_deviation = 0.0;
};

struct ComparisonReport {
  std::vector<SampleMetrics> samples;
  double mean_tv = 0.0;
  double max_tv = 0.0;
  double mean_max_deviation = 0.0;
  std::size_t seeds = 1;
  std::size_t members = 0;
};

/// Per-sample TV between the trajectory's relative frequencies and `reference`
/// (one distribution per trajectory sample). Time averages are plain means
/// over the samples.
ComparisonReport compare_to_reference(const Trajectory& traj,
                                      const std::vector<std::vector<double>>& reference);

/// Least-squares polynomial coefficients, lowest order first.
std::vector<double> polynomial_fit(std::span<const double> x, std::span<const double> y,
                                   std::size_t degree);

struct ConvergenceRow {
  std::size_t members = 0;
  double mean_tv = 0.0;
  double standard_error = 0.0;
  std::vector<double> per_seed;  // time-averaged TV, in seed order
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // of log(mean TV) against log(N); NaN with fewer than two usable rows
};

struct ConvergenceOptions {
  std::vector<std::size_t> ladder;  // ensemble sizes N
  std::vector<std::uint64_t> seeds;
  StepSchedule schedule;
  std::size_t spectators = 0;  // pinned members added per class
  std::size_t workers = 1;     // wall time only; results do not depend on it
};

/// For each (N, seed): draw N members from ρ with the initial phases, add
/// spectators, run the schedule and average the TV against the exact
/// evolution over the sample times. Seeds run concurrently; results are
/// reduced in seed order.
ConvergenceStudy convergence_study(const ModelSpec& spec, const MadelungState& initial,
                                   const ConvergenceOptions& options);

struct NodeEpisode {
  std::size_t cls = 0;
  double first_empty = 0.0;
  double dwell = 0.0;  // last empty sample time minus first_empty
};

/// Maximal runs of samples with n_a = 0 exactly, in order of class then time.
std::vector<NodeEpisode> node_report(const Trajectory& traj);

/// Integrate forward t, negate φ, integrate t under the time-reversed spec,
/// negate φ; returns max|ρ − ρ₀| + max circular distance of φ from φ₀.
double time_reversal_check(const ModelSpec& spec, const MadelungState& m, double t,
                           double step = 1e-3);

}  // namespace realens
