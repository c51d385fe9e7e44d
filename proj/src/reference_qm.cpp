#include "realens/reference_qm.hpp"

#include "realens/angles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace realens {

namespace {

std::string node_message(std::size_t cls, double time, double rho) {
  std::ostringstream os;
  os << "density of class " << cls + 1 << " fell to " << rho << " at t=" << time
     << " (node floor " << kNodeFloor << ")";
  return os.str();
}

void check_normalized(const std::vector<double>& rho) {
  double sum = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0)) throw std::invalid_argument("densities must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument("densities must sum to 1");
}

}  // namespace

bool MadelungState::has_phase(std::size_t a) const { return !std::isnan(phi.at(a)); }

NodeProximityError::NodeProximityError(std::size_t c, double t, double rho)
    : std::runtime_error(node_message(c, t, rho)), cls(c), time(t) {}

MadelungState ensemble_to_madelung(const EnsembleState& e, std::size_t dim) {
  if (e.mode != EnsembleMode::kAligned) {
    throw EnsembleError("ensemble_to_madelung requires an aligned ensemble");
  }
  validate_ensemble(e, dim);
  const auto n = occupation_counts(e, dim);
  MadelungState m;
  m.phi = class_phases(e, dim);
  const double total = static_cast<double>(n.total());
  for (std::size_t a = 0; a < dim; ++a) m.rho.push_back(static_cast<double>(n.counts[a]) / total);
  return m;
}

QuantumState madelung_to_quantum(const MadelungState& m) {
  if (m.phi.size() != m.rho.size()) throw std::invalid_argument("rho and phi differ in length");
  check_normalized(m.rho);
  QuantumState q{Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m.dim()))};
  for (std::size_t a = 0; a < m.dim(); ++a) {
    if (m.rho[a] == 0.0) continue;
    if (!m.has_phase(a)) throw std::invalid_argument("occupied class without a phase");
    q.amplitudes(static_cast<Eigen::Index>(a)) = std::polar(std::sqrt(m.rho[a]), -m.phi[a]);
  }
  return q;
}

MadelungState quantum_to_madelung(const QuantumState& q) {
  MadelungState m;
  for (Eigen::Index a = 0; a < q.amplitudes.size(); ++a) {
    const auto z = q.amplitudes(a);
    m.rho.push_back(std::norm(z));
    m.phi.push_back(z == std::complex<double>{0.0, 0.0}
                        ? std::numeric_limits<double>::quiet_NaN()
                        : wrap_angle(-std::arg(z)));
  }
  return m;
}

SchrodingerPropagator::SchrodingerPropagator(const Hamiltonian& h, double hbar) : hbar_(hbar) {
  require_hermitian(h);
  if (!(hbar > 0.0)) throw SpecError("hbar must be positive");
  // Hermitize exactly so the solver sees a self-adjoint matrix.
  const Eigen::MatrixXcd m = 0.5 * (h.matrix + h.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

QuantumState SchrodingerPropagator::evolve(const QuantumState& q, double t) const {
  if (q.dim() != static_cast<std::size_t>(energies_.size())) {
    throw std::invalid_argument("state and Hamiltonian dimensions differ");
  }
  if (t == 0.0) return q;
  Eigen::VectorXcd coeffs = vectors_.adjoint() * q.amplitudes;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs(k) *= std::polar(1.0, -energies_(k) * t / hbar_);
  }
  return QuantumState{vectors_ * coeffs};
}

QuantumState evolve_schrodinger(const QuantumState& q, const Hamiltonian& h, double t,
                                double hbar) {
  return SchrodingerPropagator(h, hbar).evolve(q, t);
}

void madelung_rhs(const ModelSpec& spec, const std::vector<double>& rho,
                  const std::vector<double>& phi, std::vector<double>& drho,
                  std::vector<double>& dphi) {
  const std::size_t p = spec.dim;
  drho.assign(p, 0.0);
  dphi.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    dphi[a] = spec.omega[a];
    for (std::size_t b = 0; b < p; ++b) {
      const auto ib = static_cast<Eigen::Index>(b);
      const double r = spec.coupling(ia, ib);
      if (b == a || r == 0.0) continue;
      const double theta = phi[a] - phi[b] + spec.phase_offset(ia, ib);
      drho[a] += kCopyGain * std::sqrt(rho[a] * rho[b]) * r * std::sin(theta);
      dphi[a] += std::sqrt(rho[b] / rho[a]) * r * std::cos(theta);
    }
  }
}

namespace {

void require_node_free(const std::vector<double>& rho, double time) {
  for (std::size_t a = 0; a < rho.size(); ++a) {
    if (!(rho[a] >= kNodeFloor)) throw NodeProximityError(a, time, rho[a]);
  }
}

// One RK4 step of size h starting at time t.
void rk4_step(const ModelSpec& spec, std::vector<double>& rho, std::vector<double>& phi, double t,
              double h) {
  const std::size_t p = rho.size();
  std::vector<double> r(p), f(p);
  std::vector<double> kr[4], kf[4];
  const double c[4] = {0.0, 0.5, 0.5, 1.0};
  for (int s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < p; ++a) {
      r[a] = s == 0 ? rho[a] : rho[a] + c[s] * h * kr[s - 1][a];
      f[a] = s == 0 ? phi[a] : phi[a] + c[s] * h * kf[s - 1][a];
    }
    require_node_free(r, t + c[s] * h);
    madelung_rhs(spec, r, f, kr[s], kf[s]);
  }
  for (std::size_t a = 0; a < p; ++a) {
    rho[a] += h / 6.0 * (kr[0][a] + 2.0 * kr[1][a] + 2.0 * kr[2][a] + kr[3][a]);
    phi[a] += h / 6.0 * (kf[0][a] + 2.0 * kf[1][a] + 2.0 * kf[2][a] + kf[3][a]);
  }
}

}  // namespace

std::vector<MadelungState> integrate_madelung_path(const MadelungState& m, const ModelSpec& spec,
                                                   const std::vector<double>& times, double step) {
  validate_spec(spec);
  if (m.dim() != spec.dim || m.phi.size() != spec.dim) {
    throw std::invalid_argument("state and spec dimensions differ");
  }
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  check_normalized(m.rho);
  std::vector<double> rho = m.rho;
  std::vector<double> phi = m.phi;
  require_node_free(rho, 0.0);
  std::vector<MadelungState> out;
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw std::invalid_argument("sample times must be nondecreasing from 0");
    while (t < target) {
      const double floor = *std::min_element(rho.begin(), rho.end());
      const double h = step * std::min(1.0, std::sqrt(floor / kStiffDensity));
      const bool last = target - t <= h;
      rk4_step(spec, rho, phi, t, last ? target - t : h);
      t = last ? target : t + h;
      require_node_free(rho, t);
    }
    MadelungState s{rho, phi};
    for (auto& x : s.phi) x = wrap_angle(x);
    out.push_back(std::move(s));
  }
  return out;
}

MadelungState integrate_madelung(const MadelungState& m, const ModelSpec& spec, double t,
                                 double step) {
  return integrate_madelung_path(m, spec, {t}, step).front();
}

double observation_probability(const MadelungState& m, std::size_t a) {
  if (a >= m.dim()) throw std::out_of_range("class index out of range");
  return m.rho[a];
}

}  // namespace realens
