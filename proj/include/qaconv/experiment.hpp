#pragma once

// Batch pipeline: certify -> gap profile -> evolve -> bound -> compare, run
// over the sweep points of a JSON config. Every output is a CSV with a header
// row or a JSON document; the run manifest lists each file once.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <random>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qaconv/bound.hpp"
#include "qaconv/dynamics.hpp"
#include "qaconv/error.hpp"
#include "qaconv/hash.hpp"
#include "qaconv/ising.hpp"
#include "qaconv/reparam.hpp"
#include "qaconv/schedule.hpp"
#include "qaconv/spectrum.hpp"

namespace qaconv {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Random problems

struct RandomProblemSpec {
  std::uint64_t seed = 0;
  int n_spins = 1;
  int k_max = 2;
  double coupling_range = 1.0;  // J uniform on [-range, range] for |support| >= 2
  double field_range = 0.5;     // fields uniform on [-range, range]
};

namespace detail {

/// Uniform on [lo, hi) from the top 53 bits; independent of the standard
/// library's distribution implementations.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline double ising_gap(const IsingProblem& problem) {
  const auto diag = build_diagonal(problem);
  auto e = diag.energies;
  if (e.size() < 2) return 0.0;
  std::partial_sort(e.begin(), e.begin() + 2, e.end());
  return e[1] - e[0];
}

}  // namespace detail

/// Local fields on every spin plus couplings on every support of size
/// 2..k_max. Instances whose Ising gap is below 1e-6 are redrawn.
inline IsingProblem generate_random_problem(const RandomProblemSpec& spec) {
  if (spec.n_spins < 1) throw ValidationError("generate_random_problem: N must be >= 1");
  if (spec.k_max < 1 || spec.k_max > spec.n_spins) {
    throw ValidationError("generate_random_problem: k_max must lie in [1, N]");
  }
  constexpr int kRetries = 100;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    std::mt19937_64 rng(spec.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
    std::vector<IsingTerm> terms;
    for (int i = 0; i < spec.n_spins; ++i) {
      terms.push_back({{i}, detail::uniform(rng, -spec.field_range, spec.field_range)});
    }
    for (int k = 2; k <= spec.k_max; ++k) {
      detail::for_each_subset(spec.n_spins, k, [&](const std::vector<int>& sites) {
        terms.push_back({sites, detail::uniform(rng, -spec.coupling_range, spec.coupling_range)});
      });
    }
    IsingProblem problem(spec.n_spins, std::move(terms));
    if (detail::ising_gap(problem) >= 1e-6) return problem;
  }
  throw NumericalError("generate_random_problem: 100 draws all had a near-degenerate Ising ground state; "
                       "increase the field range");
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    char buf[40];
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out_ << (first ? "" : ",") << buf;
      first = false;
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

inline std::string trajectory_csv(const TrajectoryRecord& r) {
  CsvWriter w({"t", "gamma", "overlap_sq", "excitation_norm", "norm_drift"});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    w.row({r.times[i], r.gamma[i], r.ground_overlap_sq[i], r.excitation_norm[i], r.norm_drift[i]});
  }
  return w.str();
}

inline std::string gap_profile_csv(const std::vector<SpectrumSnapshot>& snaps) {
  CsvWriter w({"t", "gamma", "eps0", "eps1", "gap"});
  for (const auto& s : snaps) w.row({s.t, s.gamma_value, s.eps0, s.eps1, s.gap});
  return w.str();
}

inline std::string integrand_csv(const BoundReport& r) {
  CsvWriter w({"t", "gamma", "gap", "first_norm", "second_norm", "integrand_second", "integrand_first_sq"});
  for (const auto& s : r.samples) {
    w.row({s.t, s.gamma, s.gap, s.first_norm, s.second_norm, s.integrand_second, s.integrand_first_sq});
  }
  return w.str();
}

inline std::string reparam_csv(const ReparamMap& m) {
  CsvWriter w({"t", "s", "t_tilde", "gamma"});
  for (std::size_t i = 0; i < m.t.size(); ++i) {
    const double g = m.s[i] > 0.0 ? (1.0 - m.s[i]) / m.s[i] : std::numeric_limits<double>::infinity();
    w.row({m.t[i], m.s[i], m.t_tilde[i], g});
  }
  return w.str();
}

inline void to_json(nlohmann::json& j, const IntegratorConfig& c) {
  j = {{"step_control", c.step_control == StepControl::fixed ? "fixed" : "adaptive"},
       {"dt", c.dt},
       {"tolerance", c.tolerance},
       {"min_dt", c.min_dt},
       {"max_time", c.max_time},
       {"record_count", c.record_count},
       {"norm_tolerance", c.norm_tolerance}};
}

// ---------------------------------------------------------------------------
// Config

struct ProblemSource {
  std::optional<IsingProblem> inline_problem;
  std::optional<RandomProblemSpec> random;
};

struct SweepAxes {
  std::vector<double> delta;
  std::vector<int> n_spins;
  std::vector<double> g0;
};

struct FitGapConfig {
  std::vector<int> n_spins{2, 3, 4, 5, 6};
  int instances_per_size = 4;
  int k_max = 2;
  std::uint64_t seed = 1;
  double gamma_min = 0.01;
  double gamma_max = 2.0;
  int gamma_points = 60;
};

struct ReparamConfig {
  nlohmann::json s = {{"kind", "tanh"}};
  double t_max = 25.0;
  int points = 200;
};

struct ExperimentConfig {
  nlohmann::json raw;
  ProblemSource problem;
  nlohmann::json schedule;  // resolved per sweep point (n_spins may come from the problem)
  CertifyOptions certify;
  IntegratorConfig integrator;
  GapMode gap_mode = GapMode::measured;
  std::optional<GapConstants> gap_constants;
  double t_max_k = 10.0;
  bool tails = true;
  int quadrature_panels = 1000;
  int gap_nodes = 200;
  int spectrum_points = 200;
  int checkpoints = 20;
  SweepAxes sweep;
  FitGapConfig fit_gap;
  ReparamConfig reparam;
  int jobs = 1;
  bool timing = false;
};

namespace detail {

inline const nlohmann::json* member(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback, const std::string& ptr) {
  const auto* v = member(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(ptr + "/" + key, "must be a number");
  return v->get<double>();
}

inline int int_or(const nlohmann::json& j, const char* key, int fallback, const std::string& ptr) {
  const auto* v = member(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(ptr + "/" + key, "must be an integer");
  return v->get<int>();
}

inline bool bool_or(const nlohmann::json& j, const char* key, bool fallback, const std::string& ptr) {
  const auto* v = member(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(ptr + "/" + key, "must be a boolean");
  return v->get<bool>();
}

inline const nlohmann::json& object_at(const nlohmann::json& j, const char* key, const std::string& ptr) {
  static const nlohmann::json empty = nlohmann::json::object();
  const auto* v = member(j, key);
  if (!v) return empty;
  if (!v->is_object()) throw ConfigError(ptr + "/" + key, "must be an object");
  return *v;
}

template <class T>
std::vector<T> list_or_empty(const nlohmann::json& j, const char* key, const std::string& ptr) {
  const auto* v = member(j, key);
  if (!v) return {};
  if (!v->is_array() || v->empty()) throw ConfigError(ptr + "/" + key, "must be a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer()) throw ConfigError(ptr + "/" + key + "/" + std::to_string(i), "must be an integer");
    } else {
      if (!e.is_number()) throw ConfigError(ptr + "/" + key + "/" + std::to_string(i), "must be a number");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

inline GapMode parse_gap_mode(const std::string& s, const std::string& ptr) {
  if (s == "measured") return GapMode::measured;
  if (s == "bounded") return GapMode::bounded;
  throw ConfigError(ptr, "gap_mode must be 'measured' or 'bounded'");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Validates a config document. `base_dir` resolves relative problem files.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  static const std::vector<std::string> known = {
      "problem", "schedule", "certify",  "integrator", "gap_mode",    "gap_constants", "t_max_k", "tails",
      "bound",   "sweep",    "spectrum", "fit_gap",    "reparam",     "jobs",          "checkpoints"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("/" + key, "unknown key");
    }
  }
  ExperimentConfig cfg;
  cfg.raw = j;

  if (const auto* p = member(j, "problem")) {
    if (!p->is_object()) throw ConfigError("/problem", "must be an object");
    if (const auto* r = member(*p, "random")) {
      if (!r->is_object()) throw ConfigError("/problem/random", "must be an object");
      RandomProblemSpec spec;
      const auto* seed = member(*r, "seed");
      if (seed && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) throw ConfigError("/problem/random/seed", "must be an unsigned integer");
      spec.seed = seed ? seed->get<std::uint64_t>() : 0;
      spec.n_spins = int_or(*r, "n_spins", 0, "/problem/random");
      if (spec.n_spins < 1) throw ConfigError("/problem/random/n_spins", "required positive integer");
      spec.k_max = int_or(*r, "k_max", std::min(2, spec.n_spins), "/problem/random");
      spec.coupling_range = number_or(*r, "coupling_range", 1.0, "/problem/random");
      spec.field_range = number_or(*r, "field_range", 0.5, "/problem/random");
      cfg.problem.random = spec;
    } else if (const auto* f = member(*p, "file")) {
      if (!f->is_string()) throw ConfigError("/problem/file", "must be a path string");
      const auto doc = read_json_file(base_dir / f->get<std::string>());
      cfg.problem.inline_problem = problem_from_json(doc, "/problem/file");
    } else {
      cfg.problem.inline_problem = problem_from_json(*p, "/problem");
    }
  }

  if (const auto* s = member(j, "schedule")) {
    if (!s->is_object()) throw ConfigError("/schedule", "must be an object");
    cfg.schedule = *s;
  }

  const auto& c = object_at(j, "certify", "");
  cfg.certify.l_const = number_or(c, "l", 0.5, "/certify");
  cfg.certify.grid_points = int_or(c, "grid_points", 10000, "/certify");
  if (member(c, "c_prime")) cfg.certify.c_prime = number_or(c, "c_prime", 0.0, "/certify");
  if (member(c, "c_double_prime")) cfg.certify.c_double_prime = number_or(c, "c_double_prime", 0.0, "/certify");
  if (!(cfg.certify.l_const > 0.0)) throw ConfigError("/certify/l", "must be > 0");
  if (cfg.certify.grid_points < 2) throw ConfigError("/certify/grid_points", "must be >= 2");

  const auto& in = object_at(j, "integrator", "");
  if (const auto* sc = member(in, "step_control")) {
    if (*sc == "fixed") {
      cfg.integrator.step_control = StepControl::fixed;
    } else if (*sc == "adaptive") {
      cfg.integrator.step_control = StepControl::adaptive;
    } else {
      throw ConfigError("/integrator/step_control", "must be 'fixed' or 'adaptive'");
    }
  }
  cfg.integrator.dt = number_or(in, "dt", cfg.integrator.dt, "/integrator");
  cfg.integrator.tolerance = number_or(in, "tolerance", cfg.integrator.tolerance, "/integrator");
  cfg.integrator.record_count = int_or(in, "record_count", cfg.integrator.record_count, "/integrator");
  cfg.integrator.norm_tolerance = number_or(in, "norm_tolerance", cfg.integrator.norm_tolerance, "/integrator");
  if (!(cfg.integrator.dt > 0.0)) throw ConfigError("/integrator/dt", "must be > 0");
  if (cfg.integrator.record_count < 1) throw ConfigError("/integrator/record_count", "must be >= 1");

  if (const auto* gm = member(j, "gap_mode")) {
    if (!gm->is_string()) throw ConfigError("/gap_mode", "must be a string");
    cfg.gap_mode = parse_gap_mode(gm->get<std::string>(), "/gap_mode");
  }
  if (const auto* gc = member(j, "gap_constants")) {
    if (!gc->is_object()) throw ConfigError("/gap_constants", "must be an object");
    GapConstants k;
    k.a = number_or(*gc, "a", 0.0, "/gap_constants");
    k.b = number_or(*gc, "b", 0.0, "/gap_constants");
    if (!(k.a > 0.0)) throw ConfigError("/gap_constants/a", "must be > 0");
    cfg.gap_constants = k;
  }
  cfg.t_max_k = number_or(j, "t_max_k", 10.0, "");
  if (!(cfg.t_max_k > 0.0)) throw ConfigError("/t_max_k", "must be > 0");
  cfg.tails = bool_or(j, "tails", true, "");
  cfg.jobs = int_or(j, "jobs", 1, "");
  cfg.checkpoints = int_or(j, "checkpoints", 20, "");

  const auto& b = object_at(j, "bound", "");
  cfg.quadrature_panels = int_or(b, "quadrature_panels", 1000, "/bound");
  cfg.gap_nodes = int_or(b, "gap_nodes", 200, "/bound");
  if (cfg.quadrature_panels < 1) throw ConfigError("/bound/quadrature_panels", "must be >= 1");
  if (cfg.gap_nodes < 4) throw ConfigError("/bound/gap_nodes", "must be >= 4");

  const auto& sp = object_at(j, "spectrum", "");
  cfg.spectrum_points = int_or(sp, "points", 200, "/spectrum");

  const auto& sw = object_at(j, "sweep", "");
  for (const auto& [key, _] : sw.items()) {
    if (key != "delta" && key != "n_spins" && key != "g0") throw ConfigError("/sweep/" + key, "unknown sweep axis");
  }
  cfg.sweep.delta = list_or_empty<double>(sw, "delta", "/sweep");
  cfg.sweep.n_spins = list_or_empty<int>(sw, "n_spins", "/sweep");
  cfg.sweep.g0 = list_or_empty<double>(sw, "g0", "/sweep");
  if (!cfg.sweep.n_spins.empty() && !cfg.problem.random) {
    throw ConfigError("/sweep/n_spins", "an n_spins sweep needs a random problem source");
  }

  const auto& fg = object_at(j, "fit_gap", "");
  if (member(fg, "n_spins")) cfg.fit_gap.n_spins = list_or_empty<int>(fg, "n_spins", "/fit_gap");
  cfg.fit_gap.instances_per_size = int_or(fg, "instances_per_size", 4, "/fit_gap");
  cfg.fit_gap.k_max = int_or(fg, "k_max", 2, "/fit_gap");
  if (const auto* fs = member(fg, "seed")) {
    if (!(fs->is_number_integer() && fs->get<std::int64_t>() >= 0)) {
      throw ConfigError("/fit_gap/seed", "must be an unsigned integer");
    }
    cfg.fit_gap.seed = fs->get<std::uint64_t>();
  }
  cfg.fit_gap.gamma_min = number_or(fg, "gamma_min", 0.01, "/fit_gap");
  cfg.fit_gap.gamma_max = number_or(fg, "gamma_max", 2.0, "/fit_gap");
  cfg.fit_gap.gamma_points = int_or(fg, "gamma_points", 60, "/fit_gap");

  const auto& rp = object_at(j, "reparam", "");
  if (const auto* s = member(rp, "s")) cfg.reparam.s = *s;
  cfg.reparam.t_max = number_or(rp, "t_max", 25.0, "/reparam");
  cfg.reparam.points = int_or(rp, "points", 200, "/reparam");
  return cfg;
}

/// Accepts a config or a run manifest (whose recorded config is re-run).
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  auto doc = detail::read_json_file(path);
  if (doc.is_object() && doc.contains("runs") && doc.contains("config")) doc = nlohmann::json(doc["config"]);
  return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Sweep points

struct SweepPoint {
  std::optional<double> delta;
  std::optional<int> n_spins;
  std::optional<double> g0;

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (delta) j["delta"] = *delta;
    if (n_spins) j["n_spins"] = *n_spins;
    if (g0) j["g0"] = *g0;
    return j;
  }
};

inline std::vector<SweepPoint> sweep_points(const SweepAxes& axes) {
  std::vector<SweepPoint> out;
  auto deltas = axes.delta.empty() ? std::vector<std::optional<double>>{std::nullopt}
                                   : std::vector<std::optional<double>>(axes.delta.begin(), axes.delta.end());
  auto ns = axes.n_spins.empty() ? std::vector<std::optional<int>>{std::nullopt}
                                 : std::vector<std::optional<int>>(axes.n_spins.begin(), axes.n_spins.end());
  auto gs = axes.g0.empty() ? std::vector<std::optional<double>>{std::nullopt}
                            : std::vector<std::optional<double>>(axes.g0.begin(), axes.g0.end());
  for (const auto& n : ns)
    for (const auto& d : deltas)
      for (const auto& g : gs) out.push_back({d, n, g});
  return out;
}

inline IsingProblem resolve_problem(const ExperimentConfig& cfg, const SweepPoint& point = {}) {
  if (cfg.problem.random) {
    auto spec = *cfg.problem.random;
    if (point.n_spins) {
      spec.n_spins = *point.n_spins;
      spec.k_max = std::min(spec.k_max, spec.n_spins);
    }
    try {
      return generate_random_problem(spec);
    } catch (const ValidationError& e) {
      throw ConfigError("/problem/random", e.what());
    }
  }
  if (cfg.problem.inline_problem) return *cfg.problem.inline_problem;
  throw ConfigError("/problem", "required");
}

/// The schedule JSON may use {"kind": "inverse_4n"} for g = 1/(4N).
inline Schedule resolve_schedule(const ExperimentConfig& cfg, int n_spins, const SweepPoint& point = {}) {
  if (cfg.schedule.is_null()) throw ConfigError("/schedule", "required");
  auto j = cfg.schedule;
  if (j.contains("n_spins") && j["n_spins"].is_number_integer() && j["n_spins"].get<int>() != n_spins) {
    if (!point.n_spins) throw ConfigError("/schedule/n_spins", "does not match the problem size");
  }
  j["n_spins"] = n_spins;
  if (point.delta) j["delta"] = *point.delta;
  if (j.contains("g") && j["g"].is_object() && j["g"].value("kind", "") == "inverse_4n") {
    j["g"] = {{"kind", "constant"}, {"g0", 1.0 / (4.0 * n_spins)}};
  }
  if (point.g0) {
    if (!j.contains("g") || !j["g"].is_object()) throw ConfigError("/schedule/g", "required object");
    const auto kind = j["g"].value("kind", "");
    if (kind != "constant" && kind != "power_decay") {
      throw ConfigError("/sweep/g0", "a g0 sweep needs a constant or power_decay g");
    }
    j["g"]["g0"] = *point.g0;
  }
  return schedule_from_json(j, "/schedule");
}

// ---------------------------------------------------------------------------
// Output

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  /// Writes `content` to root/relative and returns the manifest entry.
  nlohmann::json write(const std::string& relative, const std::string& content) const {
    const auto path = root_ / relative;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
    return {{"path", relative}, {"hash", hex64(fnv1a64(content))}, {"bytes", content.size()}};
  }

  nlohmann::json write_json(const std::string& relative, const nlohmann::json& j) const {
    return write(relative, j.dump(2) + "\n");
  }

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

inline std::string output_readme() {
  return R"(Output layout
=============

manifest.json            one entry per sweep point, listing every file it wrote
<key>/                   one directory per sweep point, named by a hash prefix
  problem.json           the Ising problem that was run
  schedule.json          the resolved schedule
  certificate.json       condition check of g(t) with constants L, l, m, c', c''
  gap_profile.csv        t, gamma, eps0, eps1, gap
  trajectory.csv         t, gamma, overlap_sq, excitation_norm, norm_drift
  trajectory.json        run metadata: inputs, integrator config, content hashes
  bound.json             every term of the adiabatic bound with constants
  integrand.csv          t, gamma, gap, first_norm, second_norm, integrand_second, integrand_first_sq
  verdict.json           final excitation vs. bound total, finite-time checkpoints

All CSV files carry a header row. Numbers are printed with 17 significant digits.
)";
}

struct RunResult {
  std::string key;
  std::string status = "ok";  // ok | failed | error
  std::string message;
  nlohmann::json sweep;
  nlohmann::json verdict;
  nlohmann::json files = nlohmann::json::array();
  nlohmann::json inputs;
  double seconds = 0.0;
};

struct RunManifest {
  nlohmann::json document;
  bool any_failed = false;
};

/// Finite-time inequality at evenly spread interior record points.
inline nlohmann::json checkpoint_checks(const BoundEvaluator& eval, const TrajectoryRecord& rec, int count) {
  std::vector<std::size_t> idx;
  const std::size_t n = rec.times.size();
  for (int k = 1; k <= count; ++k) {
    const std::size_t i = std::min(n - 1, static_cast<std::size_t>(std::llround(double(k) * (n - 1) / (count + 1))));
    if (i > 0 && (idx.empty() || i > idx.back())) idx.push_back(i);
  }
  std::vector<double> times;
  for (auto i : idx) times.push_back(rec.times[i]);
  const auto rhs = eval.finite_time_rhs(times);
  auto arr = nlohmann::json::array();
  int violations = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double lhs = rec.excitation_norm[idx[k]];
    const bool ok = lhs <= rhs[k];
    violations += ok ? 0 : 1;
    arr.push_back({{"t", times[k]}, {"excitation_norm", lhs}, {"rhs", rhs[k]}, {"ok", ok}});
  }
  return {{"points", arr}, {"violations", violations}};
}

/// One sweep point end to end. Errors are captured into the result.
inline RunResult run_point(const ExperimentConfig& cfg, const SweepPoint& point, const OutputDir& out) {
  RunResult res;
  res.sweep = point.to_json();
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto problem = resolve_problem(cfg, point);
    const auto schedule = resolve_schedule(cfg, problem.n_spins(), point);
    const nlohmann::json problem_json = problem;
    const nlohmann::json schedule_json = schedule;
    res.inputs = {{"problem_hash", content_hash(problem_json)},
                  {"schedule_hash", content_hash(schedule_json)},
                  {"config_hash", content_hash(cfg.raw)}};
    res.key = content_hash({{"config", cfg.raw}, {"point", res.sweep}}).substr(0, 12);
    const std::string dir = res.key + "/";
    if (!(schedule.delta > 0.0)) throw ConfigError("/schedule/delta", "the pipeline needs delta > 0");
    const double t_max = cfg.t_max_k / schedule.delta;

    res.files.push_back(out.write_json(dir + "problem.json", problem_json));
    res.files.push_back(out.write_json(dir + "schedule.json", schedule_json));

    CertifyOptions copt = cfg.certify;
    copt.horizon = t_max;
    const auto cert = certify(schedule, copt);
    res.files.push_back(out.write_json(dir + "certificate.json", cert));
    if (cfg.tails && !cert.passed) {
      std::string why;
      for (const auto& r : cert.reasons) why += (why.empty() ? "" : "; ") + r;
      throw CertificateError("certificate failed with tails requested: " + why);
    }

    const auto diag = build_diagonal(problem);
    const auto grid = numerics::log1p_grid(t_max, cfg.spectrum_points);
    const auto profile = gap_profile(diag, [&](double t) { return gamma(schedule, t); }, grid);
    res.files.push_back(out.write(dir + "gap_profile.csv", gap_profile_csv(profile)));

    IntegratorConfig icfg = cfg.integrator;
    icfg.max_time = t_max;
    const auto rec = evolve(problem, schedule, icfg);
    res.files.push_back(out.write(dir + "trajectory.csv", trajectory_csv(rec)));
    nlohmann::json meta = {{"problem", problem_json},
                           {"schedule", schedule_json},
                           {"integrator", icfg},
                           {"problem_hash", rec.problem_hash},
                           {"schedule_hash", rec.schedule_hash},
                           {"final_excitation", rec.final_excitation},
                           {"failed", rec.failed},
                           {"first_failure_time", rec.first_failure_time ? nlohmann::json(*rec.first_failure_time)
                                                                         : nlohmann::json(nullptr)},
                           {"max_norm_drift", *std::max_element(rec.norm_drift.begin(), rec.norm_drift.end())},
                           {"steps", rec.steps},
                           {"matvecs", rec.matvecs},
                           {"version", kVersion}};
    res.files.push_back(out.write_json(dir + "trajectory.json", meta));

    BoundOptions bopt;
    bopt.t_max = t_max;
    bopt.gap_mode = cfg.gap_mode;
    bopt.include_tails = cfg.tails;
    bopt.quadrature_panels = cfg.quadrature_panels;
    bopt.gap_nodes = cfg.gap_nodes;
    bopt.gap_constants = cfg.gap_constants;
    bopt.certify = copt;
    const auto report = evaluate_bound(problem, schedule, bopt);
    res.files.push_back(out.write_json(dir + "bound.json", report));
    res.files.push_back(out.write(dir + "integrand.csv", integrand_csv(report)));

    const auto verdict = compare(report, rec);
    nlohmann::json vj = verdict;
    {
      // Rebuild the report's gap model to evaluate the finite-time inequality.
      std::optional<GapModel> model;
      if (cfg.gap_mode == GapMode::measured) {
        std::vector<double> ts, gs;
        for (const auto& s : report.samples) {
          ts.push_back(s.t);
          gs.push_back(s.gap);
        }
        model = GapModel::measured(std::move(ts), std::move(gs), report.tail_constants.gap_prefactor);
      } else {
        model = GapModel::power_law(schedule, report.tail_constants.gap_prefactor, problem.n_spins());
      }
      const BoundEvaluator checker(schedule, *model, {}, cfg.quadrature_panels);
      vj["checkpoints"] = checkpoint_checks(checker, rec, cfg.checkpoints);
    }
    vj["norm_ok"] = !rec.failed;
    res.verdict = vj;
    res.files.push_back(out.write_json(dir + "verdict.json", vj));

    if (rec.failed) {
      res.status = "failed";
      res.message = "norm drift exceeded tolerance at t = " + std::to_string(*rec.first_failure_time);
    } else if (!verdict.satisfied) {
      res.status = "failed";
      res.message = "final excitation exceeds the bound total";
    } else if (vj.contains("checkpoints") && vj["checkpoints"]["violations"].get<int>() > 0) {
      res.status = "failed";
      res.message = "finite-time inequality violated at a checkpoint";
    }
  } catch (const std::exception& e) {
    res.status = "error";
    res.message = e.what();
    if (res.key.empty()) res.key = content_hash({{"config", cfg.raw}, {"point", res.sweep}}).substr(0, 12);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Runs every sweep point on a bounded worker pool and writes manifest.json.
inline RunManifest run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const OutputDir out(out_dir);
  const auto points = sweep_points(cfg.sweep);
  std::vector<RunResult> results(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) results[i] = run_point(cfg, points[i], out);
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunManifest manifest;
  auto runs = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json entry = {{"key", r.key},     {"status", r.status}, {"message", r.message},
                            {"sweep", r.sweep}, {"inputs", r.inputs}, {"verdict", r.verdict},
                            {"files", r.files}};
    if (cfg.timing) entry["seconds"] = r.seconds;
    runs.push_back(std::move(entry));
    if (r.status != "ok") manifest.any_failed = true;
  }
  auto readme = out.write("README.txt", output_readme());
  manifest.document = {{"version", kVersion},
                       {"config", cfg.raw},
                       {"config_hash", content_hash(cfg.raw)},
                       {"runs", runs},
                       {"files", nlohmann::json::array({readme})},
                       {"failed", manifest.any_failed}};
  out.write_json("manifest.json", manifest.document);
  return manifest;
}

/// Ensemble for fit_gap_constants from the config's seed and sizes.
inline std::vector<IsingProblem> fit_gap_ensemble(const FitGapConfig& fg) {
  std::vector<IsingProblem> ensemble;
  for (int n : fg.n_spins) {
    for (int k = 0; k < fg.instances_per_size; ++k) {
      RandomProblemSpec spec;
      spec.seed = fg.seed * 1000003ULL + static_cast<std::uint64_t>(n) * 1009ULL + static_cast<std::uint64_t>(k);
      spec.n_spins = n;
      spec.k_max = std::min(fg.k_max, n);
      ensemble.push_back(generate_random_problem(spec));
    }
  }
  return ensemble;
}

inline std::vector<double> log_spaced(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw ValidationError("log_spaced: need 0 < lo < hi, points >= 2");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[i] = lo * std::pow(hi / lo, double(i) / (points - 1));
  return out;
}

}  // namespace qaconv
