// qaconv: command-line front end for the annealing convergence toolkit.
//
// Exit codes: 0 success, 1 a run or certificate failed, 2 bad config or
// usage, 3 numerical or I/O error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qaconv/qaconv.hpp"

namespace {

using namespace qaconv;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> gap_mode;
  std::optional<double> t_max_k;
  bool timing = false;
};

ExperimentConfig load(const Common& o) {
  auto cfg = load_config(o.config);
  if (o.seed) {
    if (cfg.problem.random) {
      cfg.problem.random->seed = *o.seed;
      cfg.raw["problem"]["random"]["seed"] = *o.seed;
    }
    cfg.fit_gap.seed = *o.seed;
    cfg.raw["fit_gap"]["seed"] = *o.seed;
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.gap_mode) {
    cfg.gap_mode = detail::parse_gap_mode(*o.gap_mode, "--gap-mode");
    cfg.raw["gap_mode"] = *o.gap_mode;
  }
  if (o.t_max_k) {
    if (!(*o.t_max_k > 0.0)) throw ConfigError("--t-max-k", "must be > 0");
    cfg.t_max_k = *o.t_max_k;
    cfg.raw["t_max_k"] = *o.t_max_k;
  }
  cfg.timing = o.timing;
  return cfg;
}

/// Schedule for verbs that may run without a problem: N comes from the
/// problem when present, otherwise from schedule/n_spins.
Schedule schedule_for(const ExperimentConfig& cfg) {
  if (cfg.problem.random || cfg.problem.inline_problem) {
    return resolve_schedule(cfg, resolve_problem(cfg).n_spins());
  }
  if (!cfg.schedule.is_object() || !cfg.schedule.contains("n_spins") || !cfg.schedule["n_spins"].is_number_integer()) {
    throw ConfigError("/schedule/n_spins", "required when the config has no problem");
  }
  return resolve_schedule(cfg, cfg.schedule["n_spins"].get<int>());
}

double horizon(const ExperimentConfig& cfg, const Schedule& s) {
  if (!(s.delta > 0.0)) throw ConfigError("/schedule/delta", "must be > 0 to set T_max = K / delta");
  return cfg.t_max_k / s.delta;
}

/// Writes into --out when given, else prints to stdout.
void emit(const Common& o, const std::string& name, const std::string& content) {
  if (o.out.empty()) {
    std::cout << content;
    return;
  }
  OutputDir(o.out).write(name, content);
}

void emit_json(const Common& o, const std::string& name, const nlohmann::json& j) { emit(o, name, j.dump(2) + "\n"); }

int cmd_certify(const Common& o) {
  const auto cfg = load(o);
  const auto s = schedule_for(cfg);
  auto opt = cfg.certify;
  if (s.delta > 0.0) opt.horizon = horizon(cfg, s);
  const auto cert = certify(s, opt);
  emit_json(o, "certificate.json", cert);
  if (!cert.passed) {
    for (const auto& r : cert.reasons) std::cerr << "certify: " << r << "\n";
  }
  return cert.passed ? 0 : 1;
}

int cmd_spectrum(const Common& o) {
  const auto cfg = load(o);
  const auto p = resolve_problem(cfg);
  const auto s = resolve_schedule(cfg, p.n_spins());
  const auto grid = numerics::log1p_grid(horizon(cfg, s), cfg.spectrum_points);
  const auto diag = build_diagonal(p);
  const auto snaps = gap_profile(diag, [&](double t) { return gamma(s, t); }, grid, cfg.jobs);
  emit(o, "gap_profile.csv", gap_profile_csv(snaps));
  return 0;
}

int cmd_evolve(const Common& o) {
  const auto cfg = load(o);
  const auto p = resolve_problem(cfg);
  const auto s = resolve_schedule(cfg, p.n_spins());
  auto icfg = cfg.integrator;
  icfg.max_time = horizon(cfg, s);
  const auto rec = evolve(p, s, icfg);
  emit(o, "trajectory.csv", trajectory_csv(rec));
  if (!o.out.empty()) {
    emit_json(o, "trajectory.json",
              {{"problem", p},
               {"schedule", s},
               {"integrator", icfg},
               {"problem_hash", rec.problem_hash},
               {"schedule_hash", rec.schedule_hash},
               {"final_excitation", rec.final_excitation},
               {"failed", rec.failed},
               {"steps", rec.steps},
               {"matvecs", rec.matvecs},
               {"version", kVersion}});
  }
  if (rec.failed) std::cerr << "evolve: norm drift exceeded tolerance at t = " << *rec.first_failure_time << "\n";
  return rec.failed ? 1 : 0;
}

int cmd_bound(const Common& o) {
  const auto cfg = load(o);
  const auto p = resolve_problem(cfg);
  const auto s = resolve_schedule(cfg, p.n_spins());
  BoundOptions b;
  b.t_max = horizon(cfg, s);
  b.gap_mode = cfg.gap_mode;
  b.include_tails = cfg.tails;
  b.quadrature_panels = cfg.quadrature_panels;
  b.gap_nodes = cfg.gap_nodes;
  b.gap_constants = cfg.gap_constants;
  b.certify = cfg.certify;
  b.jobs = cfg.jobs;
  const auto report = evaluate_bound(p, s, b);
  emit_json(o, "bound.json", report);
  if (!o.out.empty()) emit(o, "integrand.csv", integrand_csv(report));
  return 0;
}

int cmd_run(const Common& o) {
  if (o.out.empty()) throw ConfigError("--out", "run needs an output directory");
  const auto cfg = load(o);
  const auto manifest = run_experiment(cfg, o.out);
  for (const auto& r : manifest.document["runs"]) {
    std::cerr << r["key"].get<std::string>() << " " << r["status"].get<std::string>();
    if (!r["message"].get<std::string>().empty()) std::cerr << ": " << r["message"].get<std::string>();
    std::cerr << "\n";
  }
  return manifest.any_failed ? 1 : 0;
}

int cmd_fit_gap(const Common& o) {
  const auto cfg = load(o);
  const auto ensemble = fit_gap_ensemble(cfg.fit_gap);
  const auto grid = log_spaced(cfg.fit_gap.gamma_min, cfg.fit_gap.gamma_max, cfg.fit_gap.gamma_points);
  const auto fit = fit_gap_constants(ensemble, grid);
  emit_json(o, "gap_fit.json", fit);
  return 0;
}

int cmd_reparam(const Common& o) {
  const auto cfg = load(o);
  const auto s_fn = s_function_from_json(cfg.reparam.s, "/reparam/s");
  const auto grid = numerics::log1p_grid(cfg.reparam.t_max, cfg.reparam.points);
  const auto map = build_reparam_map(s_fn, grid);
  emit(o, "reparam.csv", reparam_csv(map));
  if (!o.out.empty()) emit_json(o, "reparam.json", {{"s", s_fn}, {"map", map}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adiabatic convergence toolkit for the transverse-field Ising annealer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qaconv::kVersion);
  Common o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (stdout when omitted, except run)");
    sub->add_option("--seed", o.seed, "seed for random problems, overrides the config");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--gap-mode", o.gap_mode, "measured | bounded")->check(CLI::IsMember({"measured", "bounded"}));
    sub->add_option("--t-max-k", o.t_max_k, "horizon constant K in T_max = K / delta");
    sub->add_flag("--timing", o.timing, "record wall-clock seconds in the manifest");
  };

  struct Verb {
    const char* name;
    const char* help;
    int (*fn)(const Common&);
  };
  const Verb verbs[] = {
      {"certify", "check the schedule conditions and print the constants", cmd_certify},
      {"spectrum", "gap profile along the schedule", cmd_spectrum},
      {"evolve", "integrate the Schroedinger equation", cmd_evolve},
      {"bound", "evaluate every term of the adiabatic bound", cmd_bound},
      {"run", "full pipeline over the sweep, with manifest", cmd_run},
      {"fit-gap", "fit the gap constants over a random ensemble", cmd_fit_gap},
      {"reparam", "tabulate the bounded-form time change", cmd_reparam},
  };
  int (*chosen)(const Common&) = nullptr;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_common(sub);
    sub->callback([&chosen, fn = v.fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return chosen(o);
  } catch (const qaconv::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 2;
  } catch (const qaconv::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const qaconv::CertificateError& e) {
    std::cerr << "certificate: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
