#include "realens/io.hpp"

#include "realens/angles.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace realens {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Eigen::MatrixXd matrix_from_json(const Json& j, std::size_t dim, const char* what) {
  if (!j.is_array() || j.size() != dim) {
    throw ConfigError(std::string(what) + " must be a " + std::to_string(dim) + "x" +
                      std::to_string(dim) + " array");
  }
  const auto p = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd m(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    const Json& row = j.at(static_cast<std::size_t>(a));
    if (!row.is_array() || row.size() != dim) {
      throw ConfigError(std::string(what) + " row " + std::to_string(a + 1) + " has wrong length");
    }
    for (Eigen::Index b = 0; b < p; ++b) m(a, b) = row.at(static_cast<std::size_t>(b)).get<double>();
  }
  return m;
}

std::vector<double> vector_from_json(const Json& j, std::size_t dim, const char* what) {
  if (!j.is_array() || j.size() != dim) {
    throw ConfigError(std::string(what) + " must have " + std::to_string(dim) + " entries");
  }
  return j.get<std::vector<double>>();
}

}  // namespace

ModelSpec spec_from_json(const Json& j) {
  try {
    const double hbar = get_or(j, "hbar", 1.0);
    if (j.contains("hamiltonian")) {
      const Json& h = j.at("hamiltonian");
      const std::size_t p = h.at("real").size();
      const Eigen::MatrixXd re = matrix_from_json(h.at("real"), p, "hamiltonian.real");
      const Eigen::MatrixXd im = h.contains("imag") ? matrix_from_json(h.at("imag"), p, "hamiltonian.imag")
                                                    : Eigen::MatrixXd::Zero(re.rows(), re.cols());
      Hamiltonian ham{re.cast<std::complex<double>>() + std::complex<double>(0, 1) * im.cast<std::complex<double>>()};
      return hamiltonian_to_spec(ham, hbar);
    }
    const std::size_t p = j.at("dim").get<std::size_t>();
    ModelSpec spec = ModelSpec::zeros(p, hbar);
    if (j.contains("omega")) spec.omega = vector_from_json(j.at("omega"), p, "omega");
    if (j.contains("R")) spec.coupling = matrix_from_json(j.at("R"), p, "R");
    if (j.contains("delta")) spec.phase_offset = matrix_from_json(j.at("delta"), p, "delta");
    validate_spec(spec);
    return spec;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

Json spec_to_json(const ModelSpec& spec) {
  Json j;
  j["dim"] = spec.dim;
  j["omega"] = spec.omega;
  j["hbar"] = spec.hbar;
  Json r = Json::array(), d = Json::array();
  for (Eigen::Index a = 0; a < spec.coupling.rows(); ++a) {
    Json rr = Json::array(), dr = Json::array();
    for (Eigen::Index b = 0; b < spec.coupling.cols(); ++b) {
      rr.push_back(spec.coupling(a, b));
      dr.push_back(spec.phase_offset(a, b));
    }
    r.push_back(rr);
    d.push_back(dr);
  }
  j["R"] = r;
  j["delta"] = d;
  return j;
}

EnsembleState ensemble_from_json(const Json& j, std::size_t dim) {
  try {
    EnsembleState e;
    if (j.contains("counts")) {
      const auto counts = j.at("counts").get<std::vector<std::size_t>>();
      if (counts.size() != dim) throw ConfigError("ensemble.counts must have one entry per class");
      const auto phases = j.contains("phases") ? vector_from_json(j.at("phases"), dim, "ensemble.phases")
                                               : std::vector<double>(dim, 0.0);
      e = make_aligned_ensemble(counts, phases);
    } else if (j.contains("members")) {
      const std::string mode = get_or<std::string>(j, "mode", "per-member");
      if (mode == "aligned") {
        e.mode = EnsembleMode::kAligned;
      } else if (mode == "per-member") {
        e.mode = EnsembleMode::kPerMember;
      } else {
        throw ConfigError("ensemble.mode must be aligned or per-member");
      }
      for (const Json& m : j.at("members")) {
        const auto beable = m.at("a").get<std::size_t>();
        if (beable < 1 || beable > dim) throw ConfigError("member beable out of range (1-based)");
        e.members.push_back(MemberState{beable - 1, wrap_angle(get_or(m, "phi", 0.0)), false});
      }
    } else {
      throw ConfigError("ensemble needs counts or members");
    }
    const std::size_t spectators = get_or<std::size_t>(j, "spectators", 0);
    if (spectators > 0) e = add_spectators(std::move(e), spectators, dim);
    validate_ensemble(e, dim);
    return e;
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("ensemble: ") + ex.what());
  }
}

std::vector<double> equally_spaced(double duration, std::size_t samples) {
  if (samples == 0) throw ConfigError("samples must be positive");
  if (samples == 1) return {0.0};
  std::vector<double> t(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    t[k] = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
  }
  t.back() = duration;
  return t;
}

StepSchedule schedule_from_json(const Json& j) {
  try {
    StepSchedule s;
    const std::string stepper = get_or<std::string>(j, "stepper", "exact_event");
    if (stepper == "exact_event") {
      s.stepper = StepperKind::kExactEvent;
    } else if (stepper == "tau_leap") {
      s.stepper = StepperKind::kTauLeap;
    } else {
      throw ConfigError("schedule.stepper must be exact_event or tau_leap");
    }
    s.tau_step = get_or(j, "tau_step", 0.0);
    s.phase_substep = get_or(j, "phase_substep", s.phase_substep);
    s.duration = j.at("duration").get<double>();
    if (j.contains("sample_times")) {
      s.sample_times = j.at("sample_times").get<std::vector<double>>();
    } else if (j.contains("samples")) {
      s.sample_times = equally_spaced(s.duration, j.at("samples").get<std::size_t>());
    }
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  } catch (const EnsembleError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

MadelungState madelung_from_json(const Json& j, std::size_t dim) {
  try {
    MadelungState m;
    m.rho = vector_from_json(j.at("rho"), dim, "initial.rho");
    m.phi = j.contains("phi") ? vector_from_json(j.at("phi"), dim, "initial.phi")
                              : std::vector<double>(dim, 0.0);
    double total = 0.0;
    for (double r : m.rho) {
      if (!(r >= 0.0)) throw ConfigError("initial.rho must be nonnegative");
      total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("initial.rho must sum to 1");
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
}

LatticeModel lattice_from_json(const Json& j) {
  try {
    LatticeModel l;
    l.sites = j.at("sites").get<std::size_t>();
    l.spacing = get_or(j, "spacing", 1.0);
    l.mass = get_or(j, "mass", 1.0);
    l.hbar = get_or(j, "hbar", 1.0);
    if (j.contains("E")) {
      l.onsite_energy = vector_from_json(j.at("E"), l.sites, "lattice.E");
    } else {
      const double g = get_or(j, "ramp", 0.0);
      l.onsite_energy.resize(l.sites);
      for (std::size_t a = 0; a < l.sites; ++a) l.onsite_energy[a] = g * l.spacing * static_cast<double>(a);
    }
    validate_lattice(l);
    return l;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out << ',';
    out << format_double(values[k]);
  }
  out << '\n';
}

void write_csv_header(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out << ',';
    out << names[k];
  }
  out << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool header_only) {
  std::vector<std::string> names{"t"};
  for (std::size_t a = 1; a <= traj.dim; ++a) names.push_back("n_" + std::to_string(a));
  for (std::size_t a = 1; a <= traj.dim; ++a) names.push_back("phi_" + std::to_string(a));
  write_csv_header(out, names);
  if (header_only) return;
  std::vector<double> row;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    row.assign(1, traj.times[k]);
    for (std::size_t n : traj.counts[k]) row.push_back(static_cast<double>(n));
    row.insert(row.end(), traj.phases[k].begin(), traj.phases[k].end());
    write_csv_row(out, row);
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace realens
