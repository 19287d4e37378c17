// rdfs: command-line driver for the Random Deep Feature Selection workbench.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/harness/config.hpp"
#include "rdfs/harness/pipeline.hpp"

namespace {

using namespace rdfs::harness;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::string out_dir = "rdfs_out";
  std::optional<std::size_t> threads;
};

Config resolve_config(const GlobalOptions& g) {
  std::optional<Profile> profile;
  if (!g.profile.empty()) profile = parse_profile(g.profile);
  Config c = g.config_path.empty() ? default_config(profile.value_or(Profile::desk))
                                   : load_config(g.config_path, profile);
  if (g.seed) c.plan.seed = *g.seed;
  if (g.threads) c.plan.threads = *g.threads;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Deep Feature Selection workbench: train manipulation detectors, attack them, and "
               "measure how keyed feature subsets blunt attack transfer."};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config with sections dataset, architecture, training, attacks, "
                                            "rdfs, plan")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides plan.seed)");
  app.add_option("--profile", g.profile, "Scale profile")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out-dir", g.out_dir, "Artifact directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (overrides plan.threads)")->check(CLI::PositiveNumber);

  const char* names[][2] = {
      {"prepare-data", "Split sources, manipulate, and cut balanced patch sets"},
      {"train-cnn", "Train the original detector for each task"},
      {"attack", "Craft adversarial examples against the original detector"},
      {"train-rdfs", "Extract deep features and train the keyed reduced detectors"},
      {"evaluate", "Measure reduced-detector accuracy on clean and adversarial patches"},
      {"report", "Aggregate results into CSV tables"},
  };
  for (const auto& [name, help] : names) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const Config config = resolve_config(g);
    const Workspace ws(g.out_dir, config.plan.architecture);
    if (command == "prepare-data") stage_prepare_data(config, ws, std::cout);
    else if (command == "train-cnn") stage_train_cnn(config, ws, std::cout);
    else if (command == "attack") stage_attack(config, ws, std::cout);
    else if (command == "train-rdfs") stage_train_rdfs(config, ws, std::cout);
    else if (command == "evaluate") stage_evaluate(config, ws, std::cout);
    else if (command == "report") stage_report(config, ws, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return kExitMissing;
  } catch (const rdfs::FormatError& e) {
    std::cerr << "corrupt artifact: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << command << " failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
