// Command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epialloc/pipeline/stages.hpp"

namespace {

namespace pl = epialloc::pipeline;

enum Exit { kOk = 0, kConfig = 1, kMissing = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::string outdir;
  std::string seed;
  std::size_t threads = 0;
  std::vector<std::string> overrides;
};

pl::ExperimentConfig load(const Common& o) {
  auto doc = pl::load_json_file(o.config);
  for (const auto& s : o.overrides) pl::apply_override(doc, s);
  if (!o.outdir.empty()) doc["output_dir"] = o.outdir;
  if (!o.seed.empty()) pl::apply_override(doc, "master_seed=" + o.seed);
  if (o.threads > 0) doc["threads"] = o.threads;
  return pl::parse_config(doc);
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const pl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pl::MissingArtifact& e) {
    std::cerr << "missing dependency [" << e.stage() << "]: " << e.what() << '\n';
    return kMissing;
  } catch (const epialloc::StructuralError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kConfig;
  } catch (const epialloc::DomainError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kConfig;
  } catch (const epialloc::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic parameter inference, scenario reduction and vaccine allocation"};
  app.require_subcommand(1);
  Common common;
  std::string mode = "stochastic", policy = "zero", scenarios;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "experiment configuration (JSON)")->required();
    sub->add_option("-o,--outdir", common.outdir, "override output_dir");
    sub->add_option("--seed", common.seed, "override master_seed");
    sub->add_option("-j,--threads", common.threads, "worker threads (default EPIALLOC_THREADS or all cores)");
    sub->add_option("--set", common.overrides, "override a config key: section.key=value");
  };

  std::function<void(pl::Workspace&)> action;
  auto stage = [&](const std::string& name, const std::string& help, std::function<void(pl::Workspace&)> fn) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };

  stage("simulate", "truth trajectories and zero-policy peak", pl::run_simulate);
  stage("synth", "noisy observations from the truth trajectory", pl::run_synth);
  stage("fit-gp", "GP hyper-parameters by maximum marginal likelihood", pl::run_fit_gp);
  stage("fit-nlls", "least-squares parameter estimate", pl::run_fit_nlls);
  stage("sample", "Metropolis-Hastings posterior chain", pl::run_sample);
  stage("reduce", "k-means scenario reduction and nominal point", pl::run_reduce);
  stage("augment", "onset augmentation of the reduced set", pl::run_augment);
  auto* opt = stage("optimize", "GA vaccine allocation", [&](pl::Workspace& ws) { pl::run_optimize(ws, mode); });
  opt->add_option("--mode", mode, "nominal or stochastic")->check(CLI::IsMember({"nominal", "stochastic"}));
  auto* ev = stage("evaluate", "expected peak of a policy",
                   [&](pl::Workspace& ws) { pl::run_evaluate(ws, policy, scenarios); });
  ev->add_option("--policy", policy, "policy file or 'zero'");
  ev->add_option("--scenarios", scenarios, "scenario file (default: augmented set)");
  stage("report", "figure tables for zero, nominal and stochastic policies", pl::run_report);
  stage("run", "every stage in order", pl::run_all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }
  return guarded([&] {
    const auto cfg = load(common);
    pl::Workspace ws(cfg);
    action(ws);
  });
}
