#pragma once

#include "realens/model_spec.hpp"
#include "realens/reference_qm.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace realens {

/// Periodic one-dimensional lattice: site a sits at x_a = a·ā.
struct LatticeModel {
  std::size_t sites = 0;
  double spacing = 1.0;
  double mass = 1.0;
  std::vector<double> onsite_energy;  // E_a
  double hbar = 1.0;
};

/// Throws std::invalid_argument unless sites ≥ 3, spacing, mass and ħ are
/// positive and finite, and there is one finite E_a per site.
void validate_lattice(const LatticeModel& l);

/// ħ²/(2mā²), the nearest-neighbour hopping energy.
double hopping_energy(const LatticeModel& l);

/// R_{a,a±1} = ħ/(2mā²), δ_{a,a+1} = π = −δ_{a+1,a}, ω_a = (E_a + ħ²/(mā²))/ħ.
/// The π offset is the staggered gauge: the induced Hamiltonian is
/// E_a − (ħ²/2m) times the discrete Laplacian, with positive effective mass.
ModelSpec lattice_to_spec(const LatticeModel& l);

/// (ħ²/2m)(√ρ_{a+1} + √ρ_{a−1} − 2√ρ_a)/(ā²√ρ_a). Throws if any ρ_a ≤ 0.
std::vector<double> quantum_potential(std::span<const double> rho, const LatticeModel& l);

/// Same formula at site a only; throws if ρ_a ≤ 0.
double quantum_potential_at(std::span<const double> rho, const LatticeModel& l, std::size_t a);

/// Phases made continuous along the lattice, walking both ways from the
/// density maximum (half the ring each way).
std::vector<double> unwrap_phases(std::span<const double> phi, std::span<const double> rho);

/// Sites whose density is below this fraction of the maximum are excluded.
inline constexpr double kResidualDensityFloor = 1e-12;

/// Per-site residual of ∂_t p = (1/m) ∂_x(p ∂_x S) with S = ħφ and
/// p = ρ/ā the density per unit length. Time derivative by forward difference,
/// right-hand side averaged over both snapshots; NaN at excluded sites.
std::vector<double> continuity_residual(const MadelungState& now, const MadelungState& next,
                                        double dt, const LatticeModel& l);

/// Which sign relates the action to the Madelung phase.
enum class ActionSign { kPlusHbarPhi, kMinusHbarPhi };

/// kAsPrinted: Ṡ = −(∂S)²/2m + U − V_Q; kStandard: Ṡ = −(∂S)²/2m − U + V_Q.
/// U = E_a and the V_Q terms appear only with include_vq.
enum class HjConvention { kAsPrinted, kStandard };

struct HjOptions {
  bool include_vq = true;
  ActionSign action = ActionSign::kMinusHbarPhi;
  HjConvention convention = HjConvention::kStandard;
};

/// Per-site residual of the Hamilton–Jacobi relation selected by `options`;
/// NaN at excluded sites.
std::vector<double> hamilton_jacobi_residual(const MadelungState& now, const MadelungState& next,
                                             double dt, const LatticeModel& l,
                                             const HjOptions& options);

/// ρ-weighted mean of |r| over the sites where r is not NaN.
double weighted_mean_abs(std::span<const double> residual, std::span<const double> rho);

struct ResidualSummary {
  double continuity = 0.0;
  double hamilton_jacobi = 0.0;
  double kinetic = 0.0;            // weighted mean of (∂S)²/2m
  double quantum_potential = 0.0;  // weighted mean of |V_Q|
};

ResidualSummary summarize_residuals(const MadelungState& now, const MadelungState& next,
                                    double dt, const LatticeModel& l, const HjOptions& options);

/// ψ_a ∝ exp(−(x_a − x₀)²/(4w²) + i k₀ x_a), normalized; x₀, w in length units.
struct GaussianPacket {
  double center = 0.0;
  double width = 1.0;
  double wavenumber = 0.0;
};

QuantumState gaussian_packet(const LatticeModel& l, const GaussianPacket& packet);

/// Raised when a packet carries weight near the lattice seam.
class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fraction of the probability in the P/16 sites around the periodic seam
/// (at least one site each side).
double seam_weight(std::span<const double> rho);

inline constexpr double kSeamWeightLimit = 1e-6;

/// ā Σ a ρ_a.
double mean_position(std::span<const double> rho, double spacing);

struct PacketTrajectory {
  std::vector<double> times;
  std::vector<double> mean_x;
  std::vector<double> mean_v;  // finite differences of mean_x
};

/// Evolves the packet with the exact propagator of the induced Hamiltonian and
/// samples ⟨x⟩ at `samples` equally spaced times over [0, duration]. Throws
/// BoundaryError if seam_weight exceeds kSeamWeightLimit at any sample.
PacketTrajectory packet_mean_trajectory(const GaussianPacket& packet, const LatticeModel& l,
                                        double duration, std::size_t samples);

}  // namespace realens
