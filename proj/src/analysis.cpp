#include "realens/analysis.hpp"

#include "realens/angles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace realens {

namespace {

void require_distribution(std::span<const double> p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument("distribution has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("distribution is not normalized");
}

double time_averaged_tv(const ModelSpec& spec, const MadelungState& initial,
                        const ConvergenceOptions& o, std::size_t members, std::uint64_t seed,
                        const std::vector<std::vector<double>>& reference) {
  Rng rng(seed);
  EnsembleState e = sample_aligned_ensemble(initial.rho, initial.phi, members, rng);
  if (o.spectators > 0) e = add_spectators(std::move(e), o.spectators, spec.dim);
  const RunResult r = run(std::move(e), spec, o.schedule, rng);
  return compare_to_reference(r.trajectory, reference).mean_tv;
}

}  // namespace

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
  require_distribution(p);
  require_distribution(q);
  double s = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) s += std::abs(p[a] - q[a]);
  return 0.5 * s;
}

double max_class_deviation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
  double m = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) m = std::max(m, std::abs(p[a] - q[a]));
  return m;
}

std::vector<double> empirical_distribution(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("empty ensemble");
  std::vector<double> out(counts.size());
  for (std::size_t a = 0; a < counts.size(); ++a) {
    out[a] = static_cast<double>(counts[a]) / static_cast<double>(total);
  }
  return out;
}

std::vector<std::vector<double>> reference_densities(const ModelSpec& spec,
                                                     const QuantumState& initial,
                                                     std::span<const double> times) {
  const SchrodingerPropagator prop(spec_to_hamiltonian(spec), spec.hbar);
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  for (double t : times) {
    const QuantumState q = prop.evolve(initial, t);
    std::vector<double> rho(q.dim());
    for (std::size_t a = 0; a < rho.size(); ++a) {
      rho[a] = std::norm(q.amplitudes(static_cast<Eigen::Index>(a)));
    }
    // renormalize away round-off so total_variation's check is about the physics
    const double s = std::accumulate(rho.begin(), rho.end(), 0.0);
    for (double& x : rho) x /= s;
    out.push_back(std::move(rho));
  }
  return out;
}

ComparisonReport compare_to_reference(const Trajectory& traj,
                                      const std::vector<std::vector<double>>& reference) {
  if (reference.size() != traj.times.size()) {
    throw std::invalid_argument("reference has a different number of samples");
  }
  ComparisonReport rep;
  rep.members = traj.members;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto p = empirical_distribution(traj.counts[k]);
    SampleMetrics s{traj.times[k], total_variation(p, reference[k]),
                    max_class_deviation(p, reference[k])};
    rep.max_tv = std::max(rep.max_tv, s.total_variation);
    rep.mean_tv += s.total_variation;
    rep.mean_max_deviation += s.max_deviation;
    rep.samples.push_back(s);
  }
  if (!rep.samples.empty()) {
    rep.mean_tv /= static_cast<double>(rep.samples.size());
    rep.mean_max_deviation /= static_cast<double>(rep.samples.size());
  }
  return rep;
}

std::vector<double> polynomial_fit(std::span<const double> x, std::span<const double> y,
                                   std::size_t degree) {
  if (x.size() != y.size()) throw std::invalid_argument("polynomial_fit: size mismatch");
  if (x.size() <= degree) throw std::invalid_argument("polynomial_fit: too few points");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd a(n, d);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (Eigen::Index j = 0; j < d; ++j, pw *= x[static_cast<std::size_t>(i)]) a(i, j) = pw;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return {c.data(), c.data() + c.size()};
}

ConvergenceStudy convergence_study(const ModelSpec& spec, const MadelungState& initial,
                                   const ConvergenceOptions& o) {
  validate_spec(spec);
  o.schedule.validate();
  if (o.seeds.empty()) throw std::invalid_argument("convergence_study needs at least one seed");
  if (initial.dim() != spec.dim) throw std::invalid_argument("initial state has wrong dimension");

  const auto times = o.schedule.resolved_samples();
  const auto reference = reference_densities(spec, madelung_to_quantum(initial), times);

  const std::size_t jobs = o.ladder.size() * o.seeds.size();
  std::vector<double> results(jobs, 0.0);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        results[j] = time_averaged_tv(spec, initial, o, o.ladder[j / o.seeds.size()],
                                      o.seeds[j % o.seeds.size()], reference);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(o.workers, 1, std::max<std::size_t>(jobs, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ConvergenceStudy study;
  std::vector<double> lx, ly;
  for (std::size_t r = 0; r < o.ladder.size(); ++r) {
    ConvergenceRow row;
    row.members = o.ladder[r];
    row.per_seed.assign(results.begin() + static_cast<std::ptrdiff_t>(r * o.seeds.size()),
                        results.begin() + static_cast<std::ptrdiff_t>((r + 1) * o.seeds.size()));
    const double k = static_cast<double>(row.per_seed.size());
    row.mean_tv = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) / k;
    if (row.per_seed.size() > 1) {
      double ss = 0.0;
      for (double v : row.per_seed) ss += (v - row.mean_tv) * (v - row.mean_tv);
      row.standard_error = std::sqrt(ss / (k - 1.0) / k);
    }
    if (row.mean_tv > 0.0) {
      lx.push_back(std::log(static_cast<double>(row.members)));
      ly.push_back(std::log(row.mean_tv));
    }
    study.rows.push_back(std::move(row));
  }
  study.slope = lx.size() >= 2 ? polynomial_fit(lx, ly, 1)[1]
                               : std::numeric_limits<double>::quiet_NaN();
  return study;
}

std::vector<NodeEpisode> node_report(const Trajectory& traj) {
  std::vector<NodeEpisode> out;
  for (std::size_t a = 0; a < traj.dim; ++a) {
    bool open = false;
    NodeEpisode ep;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.counts[k][a] == 0) {
        if (!open) {
          ep = NodeEpisode{a, traj.times[k], 0.0};
          open = true;
        }
        ep.dwell = traj.times[k] - ep.first_empty;
      } else if (open) {
        out.push_back(ep);
        open = false;
      }
    }
    if (open) out.push_back(ep);
  }
  return out;
}

double time_reversal_check(const ModelSpec& spec, const MadelungState& m, double t, double step) {
  MadelungState fwd = integrate_madelung(m, spec, t, step);
  for (double& p : fwd.phi) p = -p;
  MadelungState back = integrate_madelung(fwd, time_reverse_spec(spec), t, step);
  for (double& p : back.phi) p = -p;
  double drho = 0.0, dphi = 0.0;
  for (std::size_t a = 0; a < m.dim(); ++a) {
    drho = std::max(drho, std::abs(back.rho[a] - m.rho[a]));
    if (m.has_phase(a)) dphi = std::max(dphi, circular_distance(back.phi[a], m.phi[a]));
  }
  return drho + dphi;
}

}  // namespace realens
