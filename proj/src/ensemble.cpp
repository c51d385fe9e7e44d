#include "realens/ensemble.hpp"

#include "realens/angles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <numeric>
#include <sstream>

namespace realens {

namespace {

using cplx = std::complex<double>;

double sin_plus(double x) { return std::max(0.0, std::sin(x)); }

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

double coupling(const ModelSpec& s, std::size_t a, std::size_t b) {
  return s.coupling(ix(a), ix(b));
}
double offset(const ModelSpec& s, std::size_t a, std::size_t b) {
  return s.phase_offset(ix(a), ix(b));
}

// Members grouped by class, with positions for O(1) moves. Copiers are the
// non-pinned members.
class ClassIndex {
 public:
  ClassIndex(std::span<const std::size_t> beables, std::span<const bool> pinned, std::size_t dim)
      : all_(dim), copiers_(dim), pos_all_(beables.size()), pos_copier_(beables.size(), kNone) {
    for (std::size_t i = 0; i < beables.size(); ++i) {
      pos_all_[i] = all_[beables[i]].size();
      all_[beables[i]].push_back(i);
      if (!pinned[i]) {
        pos_copier_[i] = copiers_[beables[i]].size();
        copiers_[beables[i]].push_back(i);
      }
    }
  }

  std::size_t count(std::size_t a) const { return all_[a].size(); }
  std::size_t copiers(std::size_t a) const { return copiers_[a].size(); }
  std::size_t member(std::size_t a, std::size_t k) const { return all_[a][k]; }
  std::size_t copier(std::size_t a, std::size_t k) const { return copiers_[a][k]; }

  void move(std::size_t i, std::size_t from, std::size_t to) {
    erase(all_, pos_all_, i, from);
    pos_all_[i] = all_[to].size();
    all_[to].push_back(i);
    if (pos_copier_[i] != kNone) {
      erase(copiers_, pos_copier_, i, from);
      pos_copier_[i] = copiers_[to].size();
      copiers_[to].push_back(i);
    }
  }

  OccupationCounts occupation() const {
    OccupationCounts n;
    for (std::size_t a = 0; a < all_.size(); ++a) {
      n.counts.push_back(all_[a].size());
      n.pinned.push_back(all_[a].size() - copiers_[a].size());
    }
    return n;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  static void erase(std::vector<std::vector<std::size_t>>& lists, std::vector<std::size_t>& pos,
                    std::size_t i, std::size_t cls) {
    auto& list = lists[cls];
    const std::size_t p = pos[i];
    const std::size_t last = list.back();
    list[p] = last;
    pos[last] = p;
    list.pop_back();
  }

  std::vector<std::vector<std::size_t>> all_;
  std::vector<std::vector<std::size_t>> copiers_;
  std::vector<std::size_t> pos_all_;
  std::vector<std::size_t> pos_copier_;
};

std::size_t pick_uniform(double u, std::size_t n) {
  return std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
}

// Index drawn with probability proportional to weights[k]; `u` in [0,1).
std::size_t pick_weighted(std::span<const double> weights, double total, double u) {
  double target = u * total;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    if (target < weights[k]) return k;
    target -= weights[k];
  }
  return last_positive;
}

// Classical RK4 on a vector state, steps of at most `substep`.
template <class Rhs>
void rk4_advance(std::vector<double>& y, double duration, double substep, Rhs&& rhs) {
  if (duration <= 0.0) return;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / substep - 1e-9));
  const double h = duration / static_cast<double>(std::max<std::size_t>(steps, 1));
  const std::size_t n = y.size();
  std::vector<double> tmp(n);
  for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
    const auto k1 = rhs(y);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    const auto k4 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
}

// Mutable working copy of an ensemble used by the steppers.
struct Work {
  Work(const EnsembleState& e, const ModelSpec& spec)
      : spec(spec), mode(e.mode), time(e.time) {
    const std::size_t n = e.size();
    beables.resize(n);
    phases.resize(n);
    pinned.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      beables[i] = e.members[i].beable;
      phases[i] = e.members[i].phase;
      pinned[i] = e.members[i].pinned;
    }
    index.emplace(beables, std::span<const bool>(pinned.data(), pinned.size()), spec.dim);
    if (mode == EnsembleMode::kAligned) {
      class_phase.assign(spec.dim, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t a = 0; a < spec.dim; ++a) {
        if (index->count(a) > 0) class_phase[a] = phases[index->member(a, 0)];
      }
    }
  }

  // std::vector<bool> has no contiguous storage, so pinned flags live in a
  // plain bool array.
  struct BoolVec {
    std::unique_ptr<bool[]> data_;
    std::size_t size_ = 0;
    void resize(std::size_t n) {
      data_ = std::make_unique<bool[]>(n);
      size_ = n;
    }
    bool& operator[](std::size_t i) { return data_[i]; }
    bool operator[](std::size_t i) const { return data_[i]; }
    const bool* data() const { return data_.get(); }
    std::size_t size() const { return size_; }
  };

  EnsembleState to_state() const {
    EnsembleState e;
    e.mode = mode;
    e.time = time;
    e.members.resize(beables.size());
    for (std::size_t i = 0; i < beables.size(); ++i) {
      const double phi =
          mode == EnsembleMode::kAligned ? class_phase[beables[i]] : phases[i];
      e.members[i] = MemberState{beables[i], wrap_angle(phi), pinned[i]};
    }
    return e;
  }

  OccupationCounts occupation() const { return index->occupation(); }

  void advance(double duration, double substep) {
    if (duration <= 0.0) return;
    const auto n = occupation();
    if (mode == EnsembleMode::kAligned) {
      rk4_advance(class_phase, duration, substep,
                  [&](const std::vector<double>& y) { return class_drifts(n, y, spec); });
      for (auto& p : class_phase) {
        if (!std::isnan(p)) p = wrap_angle(p);
      }
    } else {
      rk4_advance(phases, duration, substep, [&](const std::vector<double>& y) {
        return member_drifts(beables, y, n, spec);
      });
      for (auto& p : phases) p = wrap_angle(p);
    }
  }

  double phase_of(std::size_t member) const {
    return mode == EnsembleMode::kAligned ? class_phase[beables[member]] : phases[member];
  }

  // Thinning bound per ordered class pair (copier class a, source class b).
  double bound_weights(std::vector<double>& w) const {
    const std::size_t p = spec.dim;
    w.assign(p * p, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      const std::size_t ca = index->copiers(a);
      const std::size_t na = index->count(a);
      if (ca == 0) continue;
      for (std::size_t b = 0; b < p; ++b) {
        const std::size_t nb = index->count(b);
        if (b == a || nb == 0) continue;
        const double r = coupling(spec, a, b);
        if (r == 0.0) continue;
        const double weight = static_cast<double>(ca) * static_cast<double>(nb) * kCopyGain * r /
                              std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
        w[a * p + b] = weight;
        total += weight;
      }
    }
    return total;
  }

  void copy(std::size_t copier, std::size_t source) {
    const std::size_t from = beables[copier];
    const std::size_t to = beables[source];
    if (mode == EnsembleMode::kPerMember) phases[copier] = phases[source];
    if (from == to) return;
    beables[copier] = to;
    index->move(copier, from, to);
  }

  const ModelSpec& spec;
  EnsembleMode mode;
  double time;
  std::vector<std::size_t> beables;
  std::vector<double> phases;  // per member (per-member mode)
  BoolVec pinned;
  std::vector<double> class_phase;  // aligned mode
  std::optional<ClassIndex> index;
};

}  // namespace

std::size_t OccupationCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

void validate_ensemble(const EnsembleState& e, std::size_t dim) {
  if (e.members.empty()) throw EnsembleError("ensemble must have at least one member");
  if (!std::isfinite(e.time)) throw EnsembleError("ensemble time is not finite");
  std::vector<double> first(dim, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& m = e.members[i];
    if (m.beable >= dim) {
      throw EnsembleError("member " + std::to_string(i + 1) + " has beable " +
                          std::to_string(m.beable + 1) + " outside [1," + std::to_string(dim) +
                          "]");
    }
    if (!std::isfinite(m.phase)) {
      throw EnsembleError("member " + std::to_string(i + 1) + " has a non-finite phase");
    }
    if (e.mode == EnsembleMode::kAligned) {
      if (std::isnan(first[m.beable])) {
        first[m.beable] = m.phase;
      } else if (circular_distance(first[m.beable], m.phase) > 1e-12) {
        throw EnsembleError("aligned ensemble has unequal phases in class " +
                            std::to_string(m.beable + 1));
      }
    }
  }
}

OccupationCounts occupation_counts(const EnsembleState& e, std::size_t dim) {
  OccupationCounts n{std::vector<std::size_t>(dim, 0), std::vector<std::size_t>(dim, 0)};
  for (const auto& m : e.members) {
    if (m.beable >= dim) throw EnsembleError("beable index out of range");
    ++n.counts[m.beable];
    if (m.pinned) ++n.pinned[m.beable];
  }
  return n;
}

double copy_rate(const EnsembleState& e, const OccupationCounts& n, std::size_t copier,
                 std::size_t source, const ModelSpec& spec) {
  if (copier == source) throw EnsembleError("copy_rate: a member cannot copy itself");
  if (copier >= e.size() || source >= e.size()) throw EnsembleError("copy_rate: index out of range");
  const auto& mi = e.members[copier];
  const auto& mj = e.members[source];
  if (mi.pinned) return 0.0;
  const std::size_t a = mi.beable;
  const std::size_t b = mj.beable;
  if (a == b) return 0.0;
  const double scale = kCopyGain * coupling(spec, a, b) /
                       std::sqrt(static_cast<double>(n.counts[a]) * static_cast<double>(n.counts[b]));
  return scale * sin_plus(mj.phase - mi.phase + offset(spec, b, a)) +
         copy_rate_correction(copier, source);
}

double copy_rate(const EnsembleState& e, std::size_t copier, std::size_t source,
                 const ModelSpec& spec) {
  return copy_rate(e, occupation_counts(e, spec.dim), copier, source, spec);
}

double phase_drift(const EnsembleState& e, const OccupationCounts& n, std::size_t member,
                   const ModelSpec& spec) {
  if (member >= e.size()) throw EnsembleError("phase_drift: index out of range");
  const auto& mi = e.members[member];
  const std::size_t a = mi.beable;
  double drift = spec.omega[a];
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (j == member) continue;
    const std::size_t b = e.members[j].beable;
    const double r = coupling(spec, a, b);
    if (r == 0.0) continue;
    drift += r / std::sqrt(static_cast<double>(n.counts[a]) * static_cast<double>(n.counts[b])) *
             std::cos(mi.phase - e.members[j].phase + offset(spec, a, b));
  }
  return drift + drift_correction(member);
}

double phase_drift(const EnsembleState& e, std::size_t member, const ModelSpec& spec) {
  return phase_drift(e, occupation_counts(e, spec.dim), member, spec);
}

std::vector<double> member_drifts(std::span<const std::size_t> beables,
                                  std::span<const double> phases, const OccupationCounts& n,
                                  const ModelSpec& spec) {
  const std::size_t p = spec.dim;
  std::vector<cplx> sums(p, cplx{0.0, 0.0});
  for (std::size_t j = 0; j < beables.size(); ++j) sums[beables[j]] += std::polar(1.0, -phases[j]);
  // coefficient R_ab/√(n_a n_b) · e^{iδ_ab} · Σ_{J∈b} e^{−iφ_J}, folded per class pair
  std::vector<cplx> folded(p * p, cplx{0.0, 0.0});
  for (std::size_t a = 0; a < p; ++a) {
    if (n.counts[a] == 0) continue;
    for (std::size_t b = 0; b < p; ++b) {
      const double r = coupling(spec, a, b);
      if (b == a || r == 0.0 || n.counts[b] == 0) continue;
      const double k =
          r / std::sqrt(static_cast<double>(n.counts[a]) * static_cast<double>(n.counts[b]));
      folded[a * p + b] = k * std::polar(1.0, offset(spec, a, b)) * sums[b];
    }
  }
  std::vector<double> out(beables.size());
  for (std::size_t i = 0; i < beables.size(); ++i) {
    const std::size_t a = beables[i];
    const cplx z = std::polar(1.0, phases[i]);
    double drift = spec.omega[a];
    for (std::size_t b = 0; b < p; ++b) drift += (z * folded[a * p + b]).real();
    out[i] = drift + drift_correction(i);
  }
  return out;
}

std::vector<double> class_phases(const EnsembleState& e, std::size_t dim) {
  std::vector<std::vector<double>> by_class(dim);
  for (const auto& m : e.members) by_class.at(m.beable).push_back(m.phase);
  std::vector<double> out(dim, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < dim; ++a) {
    if (!by_class[a].empty()) out[a] = circular_mean(by_class[a]);
  }
  return out;
}

std::vector<double> class_drifts(const OccupationCounts& n, std::span<const double> phases,
                                 const ModelSpec& spec) {
  const std::size_t p = spec.dim;
  std::vector<double> out(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    if (n.counts[a] == 0) continue;
    double drift = spec.omega[a];
    for (std::size_t b = 0; b < p; ++b) {
      const double r = coupling(spec, a, b);
      if (b == a || r == 0.0 || n.counts[b] == 0) continue;
      drift += std::sqrt(static_cast<double>(n.counts[b]) / static_cast<double>(n.counts[a])) * r *
               std::cos(phases[a] - phases[b] + offset(spec, a, b));
    }
    out[a] = drift;
  }
  return out;
}

double aggregate_class_rate(const OccupationCounts& n, std::span<const double> phases,
                            const ModelSpec& spec, std::size_t a, std::size_t b) {
  if (a >= spec.dim || b >= spec.dim) throw EnsembleError("aggregate_class_rate: class out of range");
  if (a == b || n.counts[a] == 0 || n.counts[b] == 0) return 0.0;
  const double na = static_cast<double>(n.counts[a]);
  const double nb = static_cast<double>(n.counts[b]);
  const double per_pair = kCopyGain * coupling(spec, a, b) / std::sqrt(na * nb) *
                          sin_plus(phases[a] - phases[b] + offset(spec, a, b));
  return static_cast<double>(n.copiers(b)) * na * per_pair;
}

double aggregate_class_rate(const EnsembleState& e, const ModelSpec& spec, std::size_t a,
                            std::size_t b) {
  if (e.mode != EnsembleMode::kAligned) {
    throw EnsembleError("aggregate_class_rate requires an aligned ensemble");
  }
  return aggregate_class_rate(occupation_counts(e, spec.dim), class_phases(e, spec.dim), spec, a,
                              b);
}

namespace {

// Per-class total outgoing rate of one copier in an aligned ensemble.
std::vector<double> aligned_member_rates(const OccupationCounts& n, std::span<const double> phases,
                                         const ModelSpec& spec) {
  const std::size_t p = spec.dim;
  std::vector<double> out(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    if (n.counts[a] == 0) continue;
    for (std::size_t b = 0; b < p; ++b) {
      if (b == a || n.counts[b] == 0) continue;
      const double nb = static_cast<double>(n.counts[b]);
      out[a] += nb * kCopyGain * coupling(spec, a, b) /
                std::sqrt(static_cast<double>(n.counts[a]) * nb) *
                sin_plus(phases[b] - phases[a] + offset(spec, b, a));
    }
  }
  return out;
}

}  // namespace

double max_member_rate(const EnsembleState& e, const ModelSpec& spec) {
  const auto n = occupation_counts(e, spec.dim);
  double best = 0.0;
  if (e.mode == EnsembleMode::kAligned) {
    const auto rates = aligned_member_rates(n, class_phases(e, spec.dim), spec);
    for (std::size_t a = 0; a < spec.dim; ++a) {
      if (n.copiers(a) > 0) best = std::max(best, rates[a]);
    }
    return best;
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (j != i) total += copy_rate(e, n, i, j, spec);
    }
    best = std::max(best, total);
  }
  return best;
}

double member_rate_bound(const ModelSpec& spec, std::size_t members) {
  double row = 0.0;
  for (std::size_t a = 0; a < spec.dim; ++a) {
    row = std::max(row, spec.coupling.row(ix(a)).norm());
  }
  return kCopyGain * std::sqrt(static_cast<double>(members > 0 ? members - 1 : 0)) * row;
}

EnsembleState advance_phases(EnsembleState e, const ModelSpec& spec, double duration,
                             double substep) {
  validate_spec(spec);
  validate_ensemble(e, spec.dim);
  if (duration < 0.0 || !(substep > 0.0)) throw EnsembleError("advance_phases: bad duration or step");
  Work w(e, spec);
  w.advance(duration, substep);
  w.time += duration;
  return w.to_state();
}

EnsembleState step_exact_event(EnsembleState e, const ModelSpec& spec, double horizon,
                               double phase_substep, Rng& rng) {
  validate_spec(spec);
  validate_ensemble(e, spec.dim);
  if (!(phase_substep > 0.0)) throw EnsembleError("phase substep must be positive");
  if (horizon < e.time) throw EnsembleError("horizon lies before the ensemble clock");
  Work w(e, spec);
  std::vector<double> weights;
  double bound = w.bound_weights(weights);
  const std::size_t p = spec.dim;
  while (true) {
    if (!std::isfinite(bound)) throw EnsembleError("non-finite copy rate bound");
    if (bound <= 0.0) break;
    const double wait = exponential(rng, bound);
    if (w.time + wait >= horizon) break;
    w.advance(wait, phase_substep);
    w.time += wait;
    const std::size_t pair = pick_weighted(weights, bound, uniform01(rng));
    const std::size_t a = pair / p;
    const std::size_t b = pair % p;
    const std::size_t copier = w.index->copier(a, pick_uniform(uniform01(rng), w.index->copiers(a)));
    const std::size_t source = w.index->member(b, pick_uniform(uniform01(rng), w.index->count(b)));
    const double accept = sin_plus(w.phase_of(source) - w.phase_of(copier) + offset(spec, b, a)) +
                          copy_rate_correction(copier, source);
    if (uniform01(rng) < accept) {
      w.copy(copier, source);
      bound = w.bound_weights(weights);
    }
  }
  w.advance(horizon - w.time, phase_substep);
  w.time = horizon;
  return w.to_state();
}

EnsembleState step_tau_leap(EnsembleState e, const ModelSpec& spec, double dt,
                            double phase_substep, Rng& rng) {
  validate_spec(spec);
  validate_ensemble(e, spec.dim);
  if (!(dt > 0.0) || !(phase_substep > 0.0)) throw EnsembleError("tau-leap steps must be positive");
  const std::size_t p = spec.dim;
  const std::size_t n_members = e.size();
  const auto n = occupation_counts(e, p);
  const std::uint64_t key = rng();

  // snapshot
  std::vector<std::size_t> beables(n_members);
  std::vector<double> phases(n_members);
  for (std::size_t i = 0; i < n_members; ++i) {
    beables[i] = e.members[i].beable;
    phases[i] = e.members[i].phase;
  }

  std::vector<std::size_t> source_of(n_members, n_members);
  double max_rate = 0.0;
  if (e.mode == EnsembleMode::kAligned) {
    const auto cls_phase = class_phases(e, p);
    const auto member_rate = aligned_member_rates(n, cls_phase, spec);
    std::vector<std::vector<std::size_t>> by_class(p);
    for (std::size_t i = 0; i < n_members; ++i) by_class[beables[i]].push_back(i);
    std::vector<double> class_weight(p * p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
      if (n.copiers(a) == 0) continue;
      max_rate = std::max(max_rate, member_rate[a]);
      for (std::size_t b = 0; b < p; ++b) {
        if (b == a || n.counts[b] == 0) continue;
        const double nb = static_cast<double>(n.counts[b]);
        class_weight[a * p + b] = nb * kCopyGain * coupling(spec, a, b) /
                                  std::sqrt(static_cast<double>(n.counts[a]) * nb) *
                                  sin_plus(cls_phase[b] - cls_phase[a] + offset(spec, b, a));
      }
    }
    if (dt * max_rate > kTauLeapRateBudget * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "tau-leap step " << dt << " exceeds the bound 0.1/" << max_rate;
      throw EnsembleError(os.str());
    }
    for (std::size_t i = 0; i < n_members; ++i) {
      if (e.members[i].pinned) continue;
      const std::size_t a = beables[i];
      const double lambda = member_rate[a];
      if (lambda <= 0.0) continue;
      SplitMix64 sub(derive_seed(key, i));
      if (sub.uniform() >= -std::expm1(-lambda * dt)) continue;
      const std::size_t b =
          pick_weighted(std::span<const double>(class_weight).subspan(a * p, p), lambda, sub.uniform());
      source_of[i] = by_class[b][pick_uniform(sub.uniform(), by_class[b].size())];
    }
  } else {
    std::vector<double> rates(n_members);
    std::vector<double> totals(n_members, 0.0);
    for (std::size_t i = 0; i < n_members; ++i) {
      if (e.members[i].pinned) continue;
      for (std::size_t j = 0; j < n_members; ++j) {
        if (j != i) totals[i] += copy_rate(e, n, i, j, spec);
      }
      max_rate = std::max(max_rate, totals[i]);
    }
    if (dt * max_rate > kTauLeapRateBudget * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "tau-leap step " << dt << " exceeds the bound 0.1/" << max_rate;
      throw EnsembleError(os.str());
    }
    for (std::size_t i = 0; i < n_members; ++i) {
      if (totals[i] <= 0.0) continue;
      SplitMix64 sub(derive_seed(key, i));
      if (sub.uniform() >= -std::expm1(-totals[i] * dt)) continue;
      for (std::size_t j = 0; j < n_members; ++j) rates[j] = j == i ? 0.0 : copy_rate(e, n, i, j, spec);
      source_of[i] = pick_weighted(rates, totals[i], sub.uniform());
    }
  }

  // commit
  for (std::size_t i = 0; i < n_members; ++i) {
    const std::size_t j = source_of[i];
    if (j == n_members) continue;
    e.members[i].beable = beables[j];
    e.members[i].phase = phases[j];
  }
  Work w(e, spec);
  w.advance(dt, std::min(dt, phase_substep));
  w.time += dt;
  return w.to_state();
}

void StepSchedule::validate() const {
  if (!std::isfinite(duration) || duration < 0.0) throw EnsembleError("duration must be >= 0");
  if (!(phase_substep > 0.0)) throw EnsembleError("phase substep must be positive");
  if (stepper == StepperKind::kTauLeap && !(tau_step > 0.0)) {
    throw EnsembleError("tau-leap step must be positive");
  }
  double prev = 0.0;
  for (double t : sample_times) {
    if (!std::isfinite(t) || t < prev || t > duration) {
      throw EnsembleError("sample times must be nondecreasing within [0, duration]");
    }
    prev = t;
  }
}

std::vector<double> StepSchedule::resolved_samples() const {
  if (!sample_times.empty()) return sample_times;
  if (duration == 0.0) return {0.0};
  return {0.0, duration};
}

RunResult run(EnsembleState e, const ModelSpec& spec, const StepSchedule& schedule, Rng& rng) {
  validate_spec(spec);
  validate_ensemble(e, spec.dim);
  schedule.validate();
  const double start = e.time;
  Trajectory traj;
  traj.dim = spec.dim;
  traj.members = e.size();
  const auto record = [&](const EnsembleState& s) {
    traj.times.push_back(s.time);
    traj.counts.push_back(occupation_counts(s, spec.dim).counts);
    traj.phases.push_back(class_phases(s, spec.dim));
  };
  for (double offset_t : schedule.resolved_samples()) {
    const double target = start + offset_t;
    if (schedule.stepper == StepperKind::kExactEvent) {
      if (target > e.time) e = step_exact_event(std::move(e), spec, target, schedule.phase_substep, rng);
    } else {
      while (target - e.time > 1e-12 * std::max(1.0, std::abs(target))) {
        const double dt = std::min(schedule.tau_step, target - e.time);
        e = step_tau_leap(std::move(e), spec, dt, schedule.phase_substep, rng);
      }
      e.time = std::max(e.time, target);
    }
    record(e);
  }
  return {std::move(traj), std::move(e)};
}

EnsembleState add_spectators(EnsembleState e, std::size_t per_class, std::size_t dim) {
  const auto phases = class_phases(e, dim);
  for (std::size_t a = 0; a < dim; ++a) {
    const double phi = std::isnan(phases[a]) ? 0.0 : phases[a];
    for (std::size_t k = 0; k < per_class; ++k) e.members.push_back(MemberState{a, phi, true});
  }
  return e;
}

EnsembleState make_aligned_ensemble(std::span<const std::size_t> counts,
                                    std::span<const double> phases) {
  if (counts.size() != phases.size()) throw EnsembleError("counts and phases differ in length");
  EnsembleState e;
  e.mode = EnsembleMode::kAligned;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    for (std::size_t k = 0; k < counts[a]; ++k) {
      e.members.push_back(MemberState{a, wrap_angle(phases[a]), false});
    }
  }
  return e;
}

EnsembleState sample_aligned_ensemble(std::span<const double> rho, std::span<const double> phases,
                                      std::size_t members, Rng& rng) {
  if (rho.size() != phases.size()) throw EnsembleError("rho and phases differ in length");
  const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
  std::vector<std::size_t> counts(rho.size(), 0);
  for (std::size_t i = 0; i < members; ++i) ++counts[pick_weighted(rho, total, uniform01(rng))];
  std::vector<double> phi(phases.begin(), phases.end());
  for (auto& x : phi) {
    if (std::isnan(x)) x = 0.0;
  }
  return make_aligned_ensemble(counts, phi);
}

}  // namespace realens
