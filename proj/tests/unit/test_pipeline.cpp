#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "epialloc/pipeline/stages.hpp"

using namespace epialloc;
using namespace epialloc::pipeline;
namespace fs = std::filesystem;

namespace {

const std::string kCli = EPIALLOC_CLI;
const std::string kConfigs = EPIALLOC_CONFIGS;

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("epialloc_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

json tiny_doc() { return load_json_file(kConfigs + "/tiny.json"); }

std::string config_error_path(json doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

// One full tiny run shared by the consistency tests.
const fs::path& tiny_run() {
  static const fs::path dir = [] {
    auto d = scratch_dir("tiny_shared");
    EXPECT_EQ(cli("run -c " + kConfigs + "/tiny.json -o " + d.string()), 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(parse_config(load_json_file(e.path().string())));
  }
}

TEST(Config, ErrorsNameTheField) {
  auto doc = tiny_doc();
  doc["allocation"]["ga"]["population"] = 7;
  EXPECT_EQ(config_error_path(doc), "allocation.ga.population");

  doc = tiny_doc();
  doc["inference"]["model"] = "SEIRX";
  EXPECT_NE(config_error_path(doc).find("inference.model"), std::string::npos);

  doc = tiny_doc();
  doc["scenarios"]["onset_grid"].erase(0);
  EXPECT_EQ(config_error_path(doc), "scenarios.onset_grid");

  doc = tiny_doc();
  doc["inference"].erase("truth");
  EXPECT_EQ(config_error_path(doc), "inference.truth");

  doc = tiny_doc();
  doc["inference"]["sigma"] = -1.0;
  EXPECT_EQ(config_error_path(doc), "inference.sigma");
}

TEST(Config, OverridesApplyAtDottedPaths) {
  auto doc = tiny_doc();
  apply_override(doc, "allocation.ga.generations=7");
  apply_override(doc, "inference.model=SEIR");
  apply_override(doc, "master_seed=99");
  const auto c = parse_config(doc);
  EXPECT_EQ(c.allocation.ga.generations, 7u);
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(Config, HashIgnoresOutputAndThreads) {
  auto a = tiny_doc(), b = tiny_doc();
  b["output_dir"] = "elsewhere";
  b["threads"] = 3;
  EXPECT_EQ(parse_config(a).hash(), parse_config(b).hash());
  b["master_seed"] = 1;
  EXPECT_NE(parse_config(a).hash(), parse_config(b).hash());
}

TEST(Config, StageSeedsDiffer) {
  const auto c = parse_config(tiny_doc());
  EXPECT_NE(c.stage_seed("sample"), c.stage_seed("optimize"));
  EXPECT_EQ(c.stage_seed("sample"), c.stage_seed("sample"));
}

TEST(Workspace, MissingArtifactNamesStage) {
  auto doc = tiny_doc();
  doc["output_dir"] = scratch_dir("missing").string();
  Workspace ws(parse_config(doc));
  try {
    run_reduce(ws);
    FAIL() << "expected MissingArtifact";
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(e.stage(), "sample");
  }
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  const std::string tiny = " -c " + kConfigs + "/tiny.json -o " + dir.string();
  EXPECT_EQ(cli("simulate" + tiny), 0);
  EXPECT_EQ(cli("reduce" + tiny), 2);
  EXPECT_EQ(cli("simulate" + tiny + " --set allocation.ga.population=3"), 1);
  EXPECT_EQ(cli("simulate -c " + (dir / "absent.json").string()), 1);
  EXPECT_EQ(cli("evaluate" + tiny + " --policy nowhere.json"), 2);
  EXPECT_NE(cli("bogus-subcommand"), 0);
}

TEST(Pipeline, RunProducesEveryArtifact) {
  const auto& d = tiny_run();
  for (const char* f : {"simulate/truth.csv", "simulate/summary.json", "synth/observations.csv",
                        "fit-gp/hyperparams.json", "fit-nlls/estimate.json", "sample/chain.json",
                        "reduce/scenarios.json", "reduce/nominal.json", "augment/scenarios.json",
                        "optimize/nominal_policy.json", "optimize/stochastic_policy.json",
                        "optimize/nominal_trace.csv", "report/summary.csv", "report/evaluations.json",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
}

TEST(Pipeline, ProvenanceCarriesConfigHash) {
  const auto& d = tiny_run();
  const auto hash = parse_config(tiny_doc()).hash_hex();
  std::ifstream is(d / "sample" / "chain.json");
  const auto doc = json::parse(is);
  EXPECT_EQ(doc["provenance"]["config_hash"], hash);
  EXPECT_EQ(doc["provenance"]["stage"], "sample");
}

TEST(Pipeline, ZeroPolicyEvaluationMatchesSimulate) {
  const auto& d = tiny_run();
  ASSERT_EQ(cli("evaluate -c " + kConfigs + "/tiny.json -o " + d.string() +
                " --policy zero --scenarios simulate/truth_scenario.json"),
            0);
  std::ifstream s(d / "simulate" / "summary.json"), e(d / "evaluate" / "zero_on_truth_scenario.json");
  const auto sim = json::parse(s), ev = json::parse(e);
  const double a = sim["zero_policy_peak"], b = ev["objective"];
  EXPECT_NEAR(b, a, 1e-9 * a);
}

TEST(Pipeline, ReportMatchesEvaluations) {
  const auto& d = tiny_run();
  const auto summary = io::load_csv((d / "report" / "summary.csv").string());
  std::ifstream is(d / "report" / "evaluations.json");
  const auto evals = json::parse(is)["evaluations"];
  ASSERT_EQ(summary.labels.size(), 3u);
  for (std::size_t i = 0; i < summary.labels.size(); ++i) {
    const json& e = evals[summary.labels[i]];
    const double obj = e["objective"];
    EXPECT_NEAR(summary.rows[i][0], obj, 1e-9 * obj);
    double weighted = 0.0;
    for (std::size_t s = 0; s < e["peaks"].size(); ++s)
      weighted += e["peaks"][s].get<double>() * e["probabilities"][s].get<double>();
    EXPECT_NEAR(weighted, obj, 1e-9 * obj);
  }
  ASSERT_EQ(cli("evaluate -c " + kConfigs + "/tiny.json -o " + d.string() + " --policy zero"), 0);
  std::ifstream z(d / "evaluate" / "zero.json");
  const double zero = json::parse(z)["objective"];
  EXPECT_NEAR(zero, evals["zero"]["objective"].get<double>(), 1e-9 * zero);
}

TEST(Pipeline, RerunsAreByteIdentical) {
  const auto a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
  ASSERT_EQ(cli("run -c " + kConfigs + "/tiny.json -o " + a.string() + " -j 1"), 0);
  ASSERT_EQ(cli("run -c " + kConfigs + "/tiny.json -o " + b.string() + " -j 3"), 0);
  const auto ta = tree(a), tb = tree(b);
  ASSERT_EQ(ta.size(), tb.size());
  for (const auto& [name, bytes] : ta) {
    ASSERT_TRUE(tb.count(name)) << name;
    EXPECT_EQ(bytes, tb.at(name)) << name;
  }
}

TEST(Pipeline, SeedChangesArtifacts) {
  const auto a = scratch_dir("seed_a");
  ASSERT_EQ(cli("simulate -c " + kConfigs + "/tiny.json -o " + a.string()), 0);
  ASSERT_EQ(cli("synth -c " + kConfigs + "/tiny.json -o " + a.string()), 0);
  const auto first = slurp(a / "synth" / "observations.csv");
  ASSERT_EQ(cli("synth -c " + kConfigs + "/tiny.json -o " + a.string() + " --seed 7"), 0);
  EXPECT_NE(first, slurp(a / "synth" / "observations.csv"));
}
