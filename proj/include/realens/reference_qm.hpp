#pragma once

#include "realens/ensemble.hpp"
#include "realens/model_spec.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace realens {

/// Ensemble-level state as P complex amplitudes, ψ_a = √ρ_a e^{−iφ_a}.
struct QuantumState {
  Eigen::VectorXcd amplitudes;

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
};

/// Madelung pair (ρ_a, φ_a). φ_a is NaN where the class carries no weight.
struct MadelungState {
  std::vector<double> rho;
  std::vector<double> phi;

  std::size_t dim() const { return rho.size(); }
  bool has_phase(std::size_t a) const;
};

/// The integrator stops rather than continue through a near-node, where the
/// phase equation is singular.
class NodeProximityError : public std::runtime_error {
 public:
  NodeProximityError(std::size_t cls, double time, double rho);
  std::size_t cls;
  double time;
};

inline constexpr double kNodeFloor = 1e-8;

/// Below this density the RK4 step shrinks as √(min ρ / kStiffDensity), since
/// the phase drift grows like 1/√ρ near a node.
inline constexpr double kStiffDensity = 0.01;

/// ρ_a = n_a/N with the class phase where n_a > 0. Aligned ensembles only.
MadelungState ensemble_to_madelung(const EnsembleState& e, std::size_t dim);

QuantumState madelung_to_quantum(const MadelungState& m);
MadelungState quantum_to_madelung(const QuantumState& q);

/// exp(−i H t/ħ) through the Hermitian eigendecomposition, computed once.
class SchrodingerPropagator {
 public:
  SchrodingerPropagator(const Hamiltonian& h, double hbar = 1.0);

  QuantumState evolve(const QuantumState& q, double t) const;
  const Eigen::VectorXd& energies() const { return energies_; }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
  double hbar_;
};

QuantumState evolve_schrodinger(const QuantumState& q, const Hamiltonian& h, double t,
                                double hbar = 1.0);

/// Right-hand side of the Madelung-form equations:
///   ρ̇_a = kCopyGain Σ_b √(ρ_a ρ_b) R_ab sin(φ_a − φ_b + δ_ab)
///   φ̇_a = ω_a + Σ_b √(ρ_b/ρ_a) R_ab cos(φ_a − φ_b + δ_ab)
void madelung_rhs(const ModelSpec& spec, const std::vector<double>& rho,
                  const std::vector<double>& phi, std::vector<double>& drho,
                  std::vector<double>& dphi);

/// RK4 over [0, t] with steps of at most `step`, shortened near nodes (see
/// kStiffDensity) and at the end to land on t.
/// Throws NodeProximityError if any ρ_a falls below kNodeFloor.
MadelungState integrate_madelung(const MadelungState& m, const ModelSpec& spec, double t,
                                 double step);

/// integrate_madelung sampled at each of `times` (nondecreasing, from 0).
std::vector<MadelungState> integrate_madelung_path(const MadelungState& m, const ModelSpec& spec,
                                                   const std::vector<double>& times, double step);

/// Probability of observing beable value a: the relative frequency ρ_a.
double observation_probability(const MadelungState& m, std::size_t a);

}  // namespace realens
