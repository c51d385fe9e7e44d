#pragma once

#include "realens/classical_limit.hpp"
#include "realens/ensemble.hpp"
#include "realens/model_spec.hpp"
#include "realens/reference_qm.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace realens {

using Json = nlohmann::json;

/// Raised for malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"dim", "hbar", "omega", "R", "delta"}; every key but dim is optional
/// (1, zeros, zeros, zeros). Alternatively {"hamiltonian": {"real",
/// "imag"}, "hbar"}. The result is validated.
ModelSpec spec_from_json(const Json& j);
Json spec_to_json(const ModelSpec& spec);

/// One of
///   {"counts": [n_1..n_P], "phases": [φ_1..φ_P]}              aligned
///   {"members": [{"a": 1-based index, "phi": φ}, ...], "mode": "aligned"|"per-member"}
/// Phases default to zero. An optional "spectators": s appends s pinned
/// members per class.
EnsembleState ensemble_from_json(const Json& j, std::size_t dim);

/// {"stepper": "exact_event"|"tau_leap", "tau_step", "phase_substep",
///  "duration", "sample_times": [...]} or "samples": K for K equally spaced
/// times over [0, duration].
StepSchedule schedule_from_json(const Json& j);

/// {"rho": [...], "phi": [...]}; phi defaults to zeros.
MadelungState madelung_from_json(const Json& j, std::size_t dim);

/// {"sites", "spacing", "mass", "E": [...], "hbar"}; E defaults to zeros and
/// may be replaced by "ramp": g for E_a = g·ā·a.
LatticeModel lattice_from_json(const Json& j);

/// K equally spaced times over [0, duration]; {0} for K = 1.
std::vector<double> equally_spaced(double duration, std::size_t samples);

/// Shortest round-trip decimal (%.17g).
std::string format_double(double x);

/// Comma-separated line terminated by LF.
void write_csv_row(std::ostream& out, std::span<const double> values);
void write_csv_header(std::ostream& out, const std::vector<std::string>& names);

/// t,n_1..n_P,phi_1..phi_P; NaN phases for empty classes.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool header_only = false);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace realens
