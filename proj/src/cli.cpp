#include "realens/cli.hpp"

#include "realens/analysis.hpp"
#include "realens/angles.hpp"
#include "realens/classical_limit.hpp"
#include "realens/io.hpp"
#include "realens/phase_alignment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

namespace realens {

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Manifest {
 public:
  Manifest(const CommandOptions& o, fs::path path) : path_(std::move(path)) {
    j_["command"] = o.command;
    j_["status"] = "running";
    j_["config_path"] = o.config.string();
    j_["config_sha256"] = nullptr;
    j_["seed"] = o.seed;
    j_["workers"] = o.workers;
    j_["versions"] = {{"realens", kVersion},
                      {"model_spec", kVersion},
                      {"ensemble_core", kVersion},
                      {"reference_qm", kVersion},
                      {"phase_alignment", kVersion},
                      {"classical_limit", kVersion},
                      {"analysis", kVersion},
                      {"cli", kVersion}};
    j_["outputs"] = Json::array();
    j_["started_at"] = utc_now();
    save();
  }

  void set(const std::string& key, Json value) { j_[key] = std::move(value); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }

  void finish(const std::string& status, const std::string& error = {}) {
    j_["status"] = status;
    j_["finished_at"] = utc_now();
    if (!error.empty()) j_["error"] = error;
    save();
  }

 private:
  void save() const {
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    f << j_.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + path_.string());
  }

  fs::path path_;
  Json j_;
};

// Collects a CSV in memory; files are written only after the command succeeded.
struct Output {
  std::string name;
  std::ostringstream body;
};

const Json& require(const Json& config, const char* key) {
  if (!config.contains(key)) throw ConfigError(std::string("config is missing \"") + key + "\"");
  return config.at(key);
}

template <typename T>
T number_or(const Json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::vector<std::string> columns(const std::string& first, const std::string& stem,
                                 std::size_t dim, const std::string& stem2 = {}) {
  std::vector<std::string> out{first};
  for (std::size_t a = 1; a <= dim; ++a) out.push_back(stem + std::to_string(a));
  if (!stem2.empty()) {
    for (std::size_t a = 1; a <= dim; ++a) out.push_back(stem2 + std::to_string(a));
  }
  return out;
}

void cmd_simulate(const Json& config, const CommandOptions& o, Manifest& manifest,
                  std::vector<Output>& outputs) {
  const ModelSpec spec = spec_from_json(require(config, "model"));
  const EnsembleState e = ensemble_from_json(require(config, "ensemble"), spec.dim);
  const StepSchedule schedule = schedule_from_json(require(config, "schedule"));
  manifest.set("schedule", config.at("schedule"));
  Rng rng(o.seed);
  const RunResult r = run(e, spec, schedule, rng);
  auto& out = outputs.emplace_back(Output{"trajectory.csv", {}});
  // a zero-duration run with no explicit samples has nothing to report
  const bool empty = schedule.duration == 0.0 && schedule.sample_times.empty();
  write_trajectory_csv(out.body, r.trajectory, empty);
}

void write_madelung_rows(std::ostream& out, std::span<const double> times,
                         const std::vector<MadelungState>& states) {
  std::vector<double> row;
  for (std::size_t k = 0; k < times.size(); ++k) {
    row.assign(1, times[k]);
    row.insert(row.end(), states[k].rho.begin(), states[k].rho.end());
    for (double p : states[k].phi) row.push_back(std::isnan(p) ? p : wrap_angle(p));
    write_csv_row(out, row);
  }
}

void cmd_ode(const Json& config, const CommandOptions&, Manifest&, std::vector<Output>& outputs) {
  const ModelSpec spec = spec_from_json(require(config, "model"));
  const MadelungState m = madelung_from_json(require(config, "initial"), spec.dim);
  const double duration = require(config, "duration").get<double>();
  const auto times = equally_spaced(duration, number_or<std::size_t>(config, "samples", 101));
  const double step = number_or(config, "step", 1e-3);
  const auto path = integrate_madelung_path(m, spec, times, step);
  auto& out = outputs.emplace_back(Output{"madelung.csv", {}});
  write_csv_header(out.body, columns("t", "rho_", spec.dim, "phi_"));
  write_madelung_rows(out.body, times, path);
}

void cmd_reference(const Json& config, const CommandOptions&, Manifest&,
                   std::vector<Output>& outputs) {
  const ModelSpec spec = spec_from_json(require(config, "model"));
  const MadelungState m = madelung_from_json(require(config, "initial"), spec.dim);
  const double duration = require(config, "duration").get<double>();
  const auto times = equally_spaced(duration, number_or<std::size_t>(config, "samples", 101));
  const SchrodingerPropagator prop(spec_to_hamiltonian(spec), spec.hbar);
  const QuantumState q0 = madelung_to_quantum(m);
  std::vector<MadelungState> states;
  for (double t : times) states.push_back(quantum_to_madelung(prop.evolve(q0, t)));
  auto& out = outputs.emplace_back(Output{"reference.csv", {}});
  write_csv_header(out.body, columns("t", "rho_", spec.dim, "phi_"));
  write_madelung_rows(out.body, times, states);
}

void cmd_compare(const Json& config, const CommandOptions& o, Manifest& manifest,
                 std::vector<Output>& outputs) {
  const ModelSpec spec = spec_from_json(require(config, "model"));
  const MadelungState m = madelung_from_json(require(config, "initial"), spec.dim);
  ConvergenceOptions opt;
  opt.schedule = schedule_from_json(require(config, "schedule"));
  manifest.set("schedule", config.at("schedule"));
  opt.ladder = require(config, "ladder").get<std::vector<std::size_t>>();
  const auto seeds = number_or<std::size_t>(config, "seeds", 10);
  for (std::size_t k = 0; k < seeds; ++k) opt.seeds.push_back(derive_seed(o.seed, k));
  opt.spectators = number_or<std::size_t>(config, "spectators", 0);
  opt.workers = o.workers;
  const ConvergenceStudy study = convergence_study(spec, m, opt);

  auto& table = outputs.emplace_back(Output{"convergence.csv", {}});
  write_csv_header(table.body, {"members", "mean_tv", "standard_error"});
  Json rows = Json::array();
  for (const auto& r : study.rows) {
    const double row[] = {static_cast<double>(r.members), r.mean_tv, r.standard_error};
    write_csv_row(table.body, row);
    rows.push_back({{"members", r.members}, {"mean_tv", r.mean_tv},
                    {"standard_error", r.standard_error}, {"per_seed", r.per_seed}});
  }
  auto& summary = outputs.emplace_back(Output{"summary.json", {}});
  Json s{{"rows", rows}, {"seeds", seeds}};
  s["slope"] = std::isnan(study.slope) ? Json(nullptr) : Json(study.slope);
  summary.body << s.dump(2) << '\n';
}

void cmd_align(const Json& config, const CommandOptions& o, Manifest&, std::vector<Output>& outputs) {
  const ModelSpec spec = spec_from_json(require(config, "model"));
  EnsembleState e = ensemble_from_json(require(config, "ensemble"), spec.dim);
  AlignmentState s = alignment_from_ensemble(e, require(config, "stiffness").get<double>());
  const double dt = require(config, "dt").get<double>();
  const auto steps = require(config, "steps").get<std::size_t>();
  const auto every = std::max<std::size_t>(1, number_or<std::size_t>(config, "record_every", 1));
  const double noise = number_or(config, "perturbation", 0.0);
  if (noise > 0.0) {
    Rng rng(o.seed);
    std::normal_distribution<double> gauss(0.0, noise);
    for (double& p : s.phases) p += gauss(rng);
  }

  auto& out = outputs.emplace_back(Output{"alignment.csv", {}});
  auto header = columns("t", "spread_", spec.dim);
  header.insert(header.begin() + 1, "energy");
  header.push_back("pi_norm");
  write_csv_header(out.body, header);
  const auto record = [&] {
    std::vector<double> row{s.time, alignment_energy(s, spec)};
    const auto spread = phase_spread(s, spec.dim);
    row.insert(row.end(), spread.begin(), spread.end());
    double pmax = 0.0;
    for (double p : s.momenta) pmax = std::max(pmax, std::abs(p));
    row.push_back(pmax);
    write_csv_row(out.body, row);
  };
  record();
  for (std::size_t k = 1; k <= steps; ++k) {
    s = step_alignment(s, spec, dt);
    if (k % every == 0 || k == steps) record();
  }
}

void cmd_classical(const Json& config, const CommandOptions&, Manifest&,
                   std::vector<Output>& outputs) {
  const LatticeModel l = lattice_from_json(require(config, "lattice"));
  const Json& pj = require(config, "packet");
  const GaussianPacket packet{number_or(pj, "center", 0.5 * static_cast<double>(l.sites) * l.spacing),
                              number_or(pj, "width", 1.0), number_or(pj, "wavenumber", 0.0)};
  const double duration = require(config, "duration").get<double>();
  const auto samples = number_or<std::size_t>(config, "samples", 51);
  const double rdt = number_or(config, "residual_dt", 0.01);
  HjOptions hj;
  hj.include_vq = number_or(config, "include_vq", true);
  if (number_or<std::string>(config, "action", "minus_hbar_phi") == "plus_hbar_phi") {
    hj.action = ActionSign::kPlusHbarPhi;
  }
  if (number_or<std::string>(config, "hj_convention", "standard") == "as_printed") {
    hj.convention = HjConvention::kAsPrinted;
  }

  const PacketTrajectory traj = packet_mean_trajectory(packet, l, duration, samples);
  auto& pk = outputs.emplace_back(Output{"packet.csv", {}});
  write_csv_header(pk.body, {"t", "mean_x", "mean_v"});
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double row[] = {traj.times[k], traj.mean_x[k], traj.mean_v[k]};
    write_csv_row(pk.body, row);
  }

  const ModelSpec spec = lattice_to_spec(l);
  const SchrodingerPropagator prop(spec_to_hamiltonian(spec), l.hbar);
  const QuantumState q0 = gaussian_packet(l, packet);
  auto& res = outputs.emplace_back(Output{"residuals.csv", {}});
  write_csv_header(res.body, {"t", "site", "continuity", "hj", "vq"});
  for (double t : traj.times) {
    const MadelungState now = quantum_to_madelung(prop.evolve(q0, t));
    const MadelungState next = quantum_to_madelung(prop.evolve(q0, t + rdt));
    const auto c = continuity_residual(now, next, rdt, l);
    const auto h = hamilton_jacobi_residual(now, next, rdt, l, hj);
    for (std::size_t a = 0; a < l.sites; ++a) {
      if (std::isnan(c[a]) && std::isnan(h[a])) continue;
      const double row[] = {t, static_cast<double>(a + 1), c[a], h[a],
                            quantum_potential_at(now.rho, l, a)};
      write_csv_row(res.body, row);
    }
  }
}

using Command = void (*)(const Json&, const CommandOptions&, Manifest&, std::vector<Output>&);

Command lookup(const std::string& name) {
  if (name == "simulate") return cmd_simulate;
  if (name == "ode") return cmd_ode;
  if (name == "reference") return cmd_reference;
  if (name == "compare") return cmd_compare;
  if (name == "align") return cmd_align;
  if (name == "classical") return cmd_classical;
  return nullptr;
}

}  // namespace

int run_command(const CommandOptions& o, std::ostream& err) {
  const Command command = lookup(o.command);
  if (!command) {
    err << "unknown command: " << o.command << '\n';
    return 2;
  }
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) {
    err << "cannot create output directory " << o.out << ": " << ec.message() << '\n';
    return 1;
  }
  std::unique_ptr<Manifest> manifest;
  try {
    manifest = std::make_unique<Manifest>(o, o.out / "manifest.json");
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
  try {
    const std::string text = read_file(o.config);
    manifest->set("config_sha256", sha256_hex(text));
    Json config;
    try {
      config = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<Output> outputs;
    command(config, o, *manifest, outputs);
    for (const auto& out : outputs) {
      const fs::path p = o.out / out.name;
      std::ofstream f(p, std::ios::binary | std::ios::trunc);
      f << out.body.str();
      if (!f) throw std::runtime_error("cannot write " + p.string());
      manifest->output(p);
    }
    manifest->finish("ok");
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    try {
      manifest->finish("failed", e.what());
    } catch (const std::exception& e2) {
      err << e2.what() << '\n';
    }
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Real-ensemble simulator and verification harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  CommandOptions o;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Stochastic ensemble run"},
      {"ode", "Madelung-form ODE integration"},
      {"reference", "Exact Schrodinger evolution"},
      {"compare", "Convergence of ensemble frequencies to |psi|^2"},
      {"align", "Phase-alignment Hamiltonian model"},
      {"classical", "Lattice packet and Hamilton-Jacobi residuals"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->callback([&o, n = std::string(name)] { o.command = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return run_command(o, std::cerr);
}

}  // namespace realens
