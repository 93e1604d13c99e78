#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qaconv/experiment.hpp"

using namespace qaconv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qaconv_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json single_spin_config(double delta) {
  return {{"problem", {{"n_spins", 1}, {"terms", {{{"sites", {0}}, {"j", 1.0}}}}}},
          {"schedule", {{"delta", delta}, {"c", 2.0}, {"g", {{"kind", "inverse_4n"}}}}},
          {"integrator", {{"dt", 0.05}, {"record_count", 200}}},
          {"bound", {{"gap_nodes", 100}}}};
}

std::string config_error_pointer(const nlohmann::json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<no error>";
}

}  // namespace

TEST(RandomProblem, DeterministicFromSeed) {
  const RandomProblemSpec spec{42, 3, 2, 1.0, 0.5};
  const nlohmann::json a = generate_random_problem(spec), b = generate_random_problem(spec);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["terms"].size(), 3u + 3u);
  const nlohmann::json other = generate_random_problem({43, 3, 2, 1.0, 0.5});
  EXPECT_NE(a.dump(), other.dump());
}

TEST(RandomProblem, MinimalCase) {
  const auto p = generate_random_problem({1, 1, 1, 1.0, 0.5});
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.terms()[0].sites, std::vector<int>{0});
}

TEST(RandomProblem, HundredInstancesPassScreen) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = generate_random_problem({seed, 4, 2, 1.0, 0.5});
    auto e = build_diagonal(p).energies;
    std::sort(e.begin(), e.end());
    EXPECT_GE(e[1] - e[0], 1e-6) << seed;
  }
}

TEST(RandomProblem, LocalityAndValidation) {
  const auto p = generate_random_problem({5, 4, 3, 1.0, 0.5});
  EXPECT_EQ(p.terms().size(), 4u + 6u + 4u);
  EXPECT_THROW(generate_random_problem({5, 4, 5, 1.0, 0.5}), ValidationError);
  EXPECT_THROW(generate_random_problem({5, 0, 1, 1.0, 0.5}), ValidationError);
}

TEST(RandomProblem, ExhaustedRetriesAdviseFieldStrength) {
  try {
    generate_random_problem({5, 2, 2, 0.0, 0.0});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("field"), std::string::npos);
  }
}

TEST(Config, ErrorsCarryJsonPointers) {
  auto j = single_spin_config(1e-3);
  j["bogus"] = 1;
  EXPECT_EQ(config_error_pointer(j), "/bogus");

  j = single_spin_config(1e-3);
  j["integrator"]["dt"] = "fast";
  EXPECT_EQ(config_error_pointer(j), "/integrator/dt");

  j = single_spin_config(1e-3);
  j["problem"]["terms"][0]["sites"] = {3};
  EXPECT_EQ(config_error_pointer(j), "/problem");

  j = single_spin_config(1e-3);
  j["sweep"] = {{"n_spins", {2, 3}}};
  EXPECT_EQ(config_error_pointer(j), "/sweep/n_spins");

  j = single_spin_config(1e-3);
  j["gap_mode"] = "guessed";
  EXPECT_EQ(config_error_pointer(j), "/gap_mode");

  j = single_spin_config(1e-3);
  j["sweep"] = {{"delta", nlohmann::json::array()}};
  EXPECT_EQ(config_error_pointer(j), "/sweep/delta");
}

TEST(Config, SweepPointsAreCartesian) {
  SweepAxes axes;
  axes.delta = {1e-2, 1e-3};
  axes.g0 = {0.05, 0.1, 0.2};
  EXPECT_EQ(sweep_points(axes).size(), 6u);
  EXPECT_EQ(sweep_points({}).size(), 1u);
}

TEST(Config, InverseFourNPreset) {
  auto cfg = parse_config(single_spin_config(1e-3));
  const auto s = resolve_schedule(cfg, 3);
  EXPECT_DOUBLE_EQ(s.g.value(0.0), 1.0 / 12.0);
}

TEST(RunExperiment, SingleSpinSatisfied) {
  const auto dir = scratch("single");
  const auto m = run_experiment(parse_config(single_spin_config(1e-3)), dir);
  EXPECT_FALSE(m.any_failed);
  ASSERT_EQ(m.document["runs"].size(), 1u);
  const auto& run = m.document["runs"][0];
  EXPECT_EQ(run["status"], "ok") << run["message"];
  EXPECT_TRUE(run["verdict"]["satisfied"].get<bool>());
  EXPECT_EQ(run["verdict"]["checkpoints"]["violations"], 0);
}

TEST(RunExperiment, CertificateFailureWithTailsSurfacesInManifest) {
  auto j = single_spin_config(1e-2);
  j["problem"] = {{"random", {{"seed", 3}, {"n_spins", 2}}}};
  j["schedule"]["g"] = {{"kind", "constant"}, {"g0", 0.25}};
  const auto dir = scratch("cert_fail");
  const auto m = run_experiment(parse_config(j), dir);
  EXPECT_TRUE(m.any_failed);
  EXPECT_EQ(m.document["runs"][0]["status"], "error");
  EXPECT_NE(m.document["runs"][0]["message"].get<std::string>().find("L violates strict inequality"),
            std::string::npos);
}

TEST(RunExperiment, DegenerateProblemIsRunFailure) {
  auto j = single_spin_config(1e-2);
  j["problem"] = {{"n_spins", 2}, {"terms", {{{"sites", {0, 1}}, {"j", 1.0}}}}};
  const auto m = run_experiment(parse_config(j), scratch("degenerate"));
  EXPECT_TRUE(m.any_failed);
  EXPECT_NE(m.document["runs"][0]["message"].get<std::string>().find("degenerate"), std::string::npos);
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndJobCounts) {
  auto j = single_spin_config(1e-2);
  j["problem"] = {{"random", {{"seed", 11}, {"n_spins", 2}}}};
  j["sweep"] = {{"delta", {1e-1, 1e-2}}, {"g0", {0.05, 0.1}}};
  auto cfg = parse_config(j);
  const auto a = scratch("bytes_a"), b = scratch("bytes_b");
  run_experiment(cfg, a);
  cfg.jobs = 3;
  run_experiment(cfg, b);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 4u * 9u + 2u);
}

TEST(RunExperiment, ManifestReferencesEveryFileOnce) {
  auto j = single_spin_config(1e-2);
  j["sweep"] = {{"delta", {1e-1, 1e-2}}};
  const auto dir = scratch("manifest");
  const auto m = run_experiment(parse_config(j), dir);
  std::multiset<std::string> listed;
  for (const auto& run : m.document["runs"])
    for (const auto& f : run["files"]) listed.insert(f["path"].get<std::string>());
  for (const auto& f : m.document["files"]) listed.insert(f["path"].get<std::string>());
  std::set<std::string> on_disk;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") on_disk.insert(rel);
  }
  EXPECT_EQ(listed.size(), on_disk.size());
  for (const auto& f : on_disk) EXPECT_EQ(listed.count(f), 1u) << f;
  for (const auto& run : m.document["runs"]) {
    for (const auto& f : run["files"]) {
      EXPECT_EQ(f["hash"].get<std::string>(), hex64(fnv1a64(slurp(dir / f["path"].get<std::string>()))));
    }
  }
}

TEST(RunExperiment, ReplayFromManifestReproducesVerdicts) {
  auto j = single_spin_config(1e-2);
  j["problem"] = {{"random", {{"seed", 2}, {"n_spins", 2}}}};
  const auto dir = scratch("replay");
  const auto first = run_experiment(parse_config(j), dir);
  const auto replay = run_experiment(load_config(dir / "manifest.json"), scratch("replay_b"));
  EXPECT_EQ(first.document["runs"], replay.document["runs"]);
}

TEST(RunExperiment, CsvHeaders) {
  const auto dir = scratch("csv");
  const auto m = run_experiment(parse_config(single_spin_config(1e-2)), dir);
  const auto key = m.document["runs"][0]["key"].get<std::string>();
  auto first_line = [&](const char* name) {
    std::ifstream in(dir / key / name);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(first_line("trajectory.csv"), "t,gamma,overlap_sq,excitation_norm,norm_drift");
  EXPECT_EQ(first_line("gap_profile.csv"), "t,gamma,eps0,eps1,gap");
  EXPECT_EQ(first_line("integrand.csv").rfind("t,gamma,gap,", 0), 0u);
}

TEST(RunExperiment, UnwritableOutputIsIoError) {
  const auto dir = scratch("io");
  fs::create_directories(dir);
  std::ofstream(dir / "plain_file") << "x";
  EXPECT_THROW(run_experiment(parse_config(single_spin_config(1e-2)), dir / "plain_file" / "out"), IoError);
}

TEST(Config, ProblemFromFileResolvesRelativeToConfig) {
  const auto dir = scratch("file_cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "problem.json") << R"({"n_spins": 2, "terms": [{"sites": [0], "j": 0.4}, {"sites": [0, 1], "j": 1.0}]})";
  auto j = single_spin_config(1e-2);
  j["problem"] = {{"file", "problem.json"}};
  std::ofstream(dir / "config.json") << j.dump();
  const auto cfg = load_config(dir / "config.json");
  EXPECT_EQ(resolve_problem(cfg).n_spins(), 2);
}
