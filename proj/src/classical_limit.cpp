#include "realens/classical_limit.hpp"

#include "realens/angles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace realens {

namespace {

std::size_t up(std::size_t a, std::size_t p) { return a + 1 == p ? 0 : a + 1; }
std::size_t down(std::size_t a, std::size_t p) { return a == 0 ? p - 1 : a - 1; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_snapshots(const MadelungState& now, const MadelungState& next,
                       const LatticeModel& l, double dt) {
  validate_lattice(l);
  if (now.dim() != l.sites || next.dim() != l.sites || now.phi.size() != l.sites ||
      next.phi.size() != l.sites) {
    throw std::invalid_argument("snapshot size does not match the lattice");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("residual time step must be positive");
}

// Sites kept in residual statistics: dense enough in both snapshots.
std::vector<bool> kept_sites(const MadelungState& now, const MadelungState& next) {
  const double peak = std::max(*std::max_element(now.rho.begin(), now.rho.end()),
                               *std::max_element(next.rho.begin(), next.rho.end()));
  std::vector<bool> keep(now.dim());
  for (std::size_t a = 0; a < now.dim(); ++a) {
    const double floor = kResidualDensityFloor * peak;
    keep[a] = now.rho[a] >= floor && next.rho[a] >= floor && now.has_phase(a) && next.has_phase(a);
  }
  return keep;
}

// Kinetic energy (∂S)²/2m from the mean of forward and backward squared
// differences. Sign of S does not matter here.
double kinetic_at(const MadelungState& m, const LatticeModel& l, std::size_t a) {
  const std::size_t p = l.sites;
  const double fwd = l.hbar * wrap_signed(m.phi[up(a, p)] - m.phi[a]) / l.spacing;
  const double bwd = l.hbar * wrap_signed(m.phi[a] - m.phi[down(a, p)]) / l.spacing;
  return 0.25 * (fwd * fwd + bwd * bwd) / l.mass;
}

double continuity_rhs(const MadelungState& m, const LatticeModel& l, std::size_t a) {
  const std::size_t p = l.sites;
  const std::size_t r = up(a, p), s = down(a, p);
  const double inv = 1.0 / l.spacing;
  const double flux_up =
      0.5 * (m.rho[a] + m.rho[r]) * inv * l.hbar * wrap_signed(m.phi[r] - m.phi[a]) * inv;
  const double flux_down =
      0.5 * (m.rho[s] + m.rho[a]) * inv * l.hbar * wrap_signed(m.phi[a] - m.phi[s]) * inv;
  return (flux_up - flux_down) * inv / l.mass;
}

double hj_rhs(const MadelungState& m, const LatticeModel& l, std::size_t a,
              const HjOptions& o) {
  const double k = kinetic_at(m, l, a);
  const double u = l.onsite_energy[a];
  const double vq = o.include_vq && m.rho[a] > 0.0 ? quantum_potential_at(m.rho, l, a) : 0.0;
  return o.convention == HjConvention::kAsPrinted ? -k + u - vq : -k - u + vq;
}

}  // namespace

void validate_lattice(const LatticeModel& l) {
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (l.sites < 3) throw std::invalid_argument("lattice needs at least 3 sites");
  if (!positive(l.spacing)) throw std::invalid_argument("lattice spacing must be positive");
  if (!positive(l.mass)) throw std::invalid_argument("mass must be positive");
  if (!positive(l.hbar)) throw std::invalid_argument("hbar must be positive");
  if (l.onsite_energy.size() != l.sites) {
    throw std::invalid_argument("need one on-site energy per site");
  }
  for (double e : l.onsite_energy) {
    if (!std::isfinite(e)) throw std::invalid_argument("on-site energy is not finite");
  }
}

double hopping_energy(const LatticeModel& l) {
  return l.hbar * l.hbar / (2.0 * l.mass * l.spacing * l.spacing);
}

ModelSpec lattice_to_spec(const LatticeModel& l) {
  validate_lattice(l);
  const std::size_t p = l.sites;
  ModelSpec spec = ModelSpec::zeros(p, l.hbar);
  const double t = hopping_energy(l);
  for (std::size_t a = 0; a < p; ++a) {
    spec.omega[a] = (l.onsite_energy[a] + 2.0 * t) / l.hbar;
    const auto i = static_cast<Eigen::Index>(a);
    const auto j = static_cast<Eigen::Index>(up(a, p));
    spec.coupling(i, j) = spec.coupling(j, i) = t / l.hbar;
    spec.phase_offset(i, j) = std::numbers::pi;
    spec.phase_offset(j, i) = -std::numbers::pi;
  }
  validate_spec(spec);
  return spec;
}

double quantum_potential_at(std::span<const double> rho, const LatticeModel& l, std::size_t a) {
  const std::size_t p = rho.size();
  if (!(rho[a] > 0.0)) throw std::invalid_argument("quantum potential at a zero-density site");
  const double c = std::sqrt(rho[a]);
  const double lap = std::sqrt(rho[up(a, p)]) + std::sqrt(rho[down(a, p)]) - 2.0 * c;
  return l.hbar * l.hbar / (2.0 * l.mass) * lap / (l.spacing * l.spacing * c);
}

std::vector<double> quantum_potential(std::span<const double> rho, const LatticeModel& l) {
  if (rho.size() != l.sites) throw std::invalid_argument("density size does not match lattice");
  std::vector<double> out(rho.size());
  for (std::size_t a = 0; a < rho.size(); ++a) out[a] = quantum_potential_at(rho, l, a);
  return out;
}

std::vector<double> unwrap_phases(std::span<const double> phi, std::span<const double> rho) {
  const std::size_t p = phi.size();
  if (rho.size() != p) throw std::invalid_argument("unwrap_phases: size mismatch");
  if (p == 0) return {};
  const auto peak = static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
  std::vector<double> out(p);
  out[peak] = phi[peak];
  const std::size_t right = p / 2, left = p - 1 - right;
  for (std::size_t k = 1, a = peak; k <= right; ++k) {
    const std::size_t b = up(a, p);
    out[b] = out[a] + wrap_signed(phi[b] - phi[a]);
    a = b;
  }
  for (std::size_t k = 1, a = peak; k <= left; ++k) {
    const std::size_t b = down(a, p);
    out[b] = out[a] + wrap_signed(phi[b] - phi[a]);
    a = b;
  }
  return out;
}

std::vector<double> continuity_residual(const MadelungState& now, const MadelungState& next,
                                        double dt, const LatticeModel& l) {
  require_snapshots(now, next, l, dt);
  const auto keep = kept_sites(now, next);
  std::vector<double> out(l.sites, kNaN);
  for (std::size_t a = 0; a < l.sites; ++a) {
    if (!keep[a] || !keep[up(a, l.sites)] || !keep[down(a, l.sites)]) continue;
    const double dp = (next.rho[a] - now.rho[a]) / (l.spacing * dt);
    out[a] = dp - 0.5 * (continuity_rhs(now, l, a) + continuity_rhs(next, l, a));
  }
  return out;
}

std::vector<double> hamilton_jacobi_residual(const MadelungState& now, const MadelungState& next,
                                             double dt, const LatticeModel& l,
                                             const HjOptions& options) {
  require_snapshots(now, next, l, dt);
  const auto keep = kept_sites(now, next);
  const double sign = options.action == ActionSign::kPlusHbarPhi ? 1.0 : -1.0;
  std::vector<double> out(l.sites, kNaN);
  for (std::size_t a = 0; a < l.sites; ++a) {
    if (!keep[a] || !keep[up(a, l.sites)] || !keep[down(a, l.sites)]) continue;
    const double ds = sign * l.hbar * wrap_signed(next.phi[a] - now.phi[a]) / dt;
    out[a] = ds - 0.5 * (hj_rhs(now, l, a, options) + hj_rhs(next, l, a, options));
  }
  return out;
}

double weighted_mean_abs(std::span<const double> residual, std::span<const double> rho) {
  if (residual.size() != rho.size()) throw std::invalid_argument("weighted_mean_abs: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < rho.size(); ++a) {
    if (std::isnan(residual[a])) continue;
    num += rho[a] * std::abs(residual[a]);
    den += rho[a];
  }
  return den > 0.0 ? num / den : 0.0;
}

ResidualSummary summarize_residuals(const MadelungState& now, const MadelungState& next,
                                    double dt, const LatticeModel& l, const HjOptions& options) {
  const auto cont = continuity_residual(now, next, dt, l);
  const auto hj = hamilton_jacobi_residual(now, next, dt, l, options);
  std::vector<double> weight(l.sites), kin(l.sites, kNaN), vq(l.sites, kNaN);
  for (std::size_t a = 0; a < l.sites; ++a) {
    weight[a] = 0.5 * (now.rho[a] + next.rho[a]);
    if (std::isnan(hj[a])) continue;
    kin[a] = kinetic_at(now, l, a);
    vq[a] = quantum_potential_at(now.rho, l, a);
  }
  return {weighted_mean_abs(cont, weight), weighted_mean_abs(hj, weight),
          weighted_mean_abs(kin, weight), weighted_mean_abs(vq, weight)};
}

QuantumState gaussian_packet(const LatticeModel& l, const GaussianPacket& packet) {
  validate_lattice(l);
  if (!(packet.width > 0.0)) throw std::invalid_argument("packet width must be positive");
  const auto p = static_cast<Eigen::Index>(l.sites);
  QuantumState q{Eigen::VectorXcd(p)};
  for (Eigen::Index a = 0; a < p; ++a) {
    const double x = static_cast<double>(a) * l.spacing;
    const double d = (x - packet.center) / packet.width;
    q.amplitudes(a) = std::polar(std::exp(-0.25 * d * d), packet.wavenumber * x);
  }
  q.amplitudes /= q.amplitudes.norm();
  return q;
}

double seam_weight(std::span<const double> rho) {
  const std::size_t p = rho.size();
  const std::size_t side = std::max<std::size_t>(1, p / 32);
  double w = 0.0;
  for (std::size_t k = 0; k < side && k < p; ++k) w += rho[k] + rho[p - 1 - k];
  return w;
}

double mean_position(std::span<const double> rho, double spacing) {
  double s = 0.0;
  for (std::size_t a = 0; a < rho.size(); ++a) s += static_cast<double>(a) * rho[a];
  return spacing * s;
}

PacketTrajectory packet_mean_trajectory(const GaussianPacket& packet, const LatticeModel& l,
                                        double duration, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  const ModelSpec spec = lattice_to_spec(l);
  const SchrodingerPropagator prop(spec_to_hamiltonian(spec), l.hbar);
  const QuantumState q0 = gaussian_packet(l, packet);

  PacketTrajectory out;
  std::vector<double> rho(l.sites);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
    const QuantumState q = prop.evolve(q0, t);
    for (std::size_t a = 0; a < l.sites; ++a) {
      rho[a] = std::norm(q.amplitudes(static_cast<Eigen::Index>(a)));
    }
    if (seam_weight(rho) > kSeamWeightLimit) {
      throw BoundaryError("packet reached the lattice seam at t=" + std::to_string(t));
    }
    out.times.push_back(t);
    out.mean_x.push_back(mean_position(rho, l.spacing));
  }
  out.mean_v.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == samples ? k : k + 1;
    out.mean_v[k] = (out.mean_x[hi] - out.mean_x[lo]) / (out.times[hi] - out.times[lo]);
  }
  return out;
}

}  // namespace realens
