#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdfs/attack/attacks.hpp"
#include "rdfs/defence/reduced_detector.hpp"
#include "rdfs/defence/svm.hpp"
#include "rdfs/det/architecture.hpp"
#include "rdfs/det/train.hpp"
#include "rdfs/img/manipulations.hpp"

namespace rdfs::harness {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage was run before the stage that produces its inputs (CLI exit code 3).
class MissingArtifactError : public std::runtime_error {
 public:
  MissingArtifactError(const std::filesystem::path& artifact, const std::string& command);
  const std::string& command() const { return command_; }

 private:
  std::string command_;
};

enum class Task { resize, median, clahe };
std::string task_name(Task task);
Task parse_task(const std::string& name);

enum class Profile { desk, paper };
std::string profile_name(Profile profile);
Profile parse_profile(const std::string& name);

struct DatasetSettings {
  /// Directory of .png/.pgm source images; empty selects procedural textures.
  std::string source_dir;
  std::size_t procedural_sources = 200;
  std::size_t procedural_side = 160;
  std::size_t patch_side = 32;
  std::size_t train_per_class = 5000;
  std::size_t val_per_class = 500;
  std::size_t test_per_class = 1000;
  /// Cap on patches drawn from one source image (both classes together).
  std::size_t max_per_image = 100;
  /// Fractions of source images per split; the test split takes the rest.
  double train_fraction = 0.7;
  double val_fraction = 0.1;
  double resize_factor = 0.8;
  std::size_t median_window = 5;
  img::ClaheParams clahe;
};

struct TrainingSettings {
  det::TrainConfig cnn;
  det::TrainConfig reduced;
};

struct AttackSettings {
  std::vector<attack::AttackKind> kinds{attack::AttackKind::pgd, attack::AttackKind::fgsm, attack::AttackKind::bfgs};
  /// H1 test patches to attack (only ones the CNN decides H1).
  std::size_t patches = 100;
  attack::IfgsmConfig ifgsm = attack::IfgsmConfig::standard();
  attack::PgdConfig pgd;
  /// Per-task replacements of the PGD settings.
  std::map<Task, attack::PgdConfig> pgd_by_task;
  attack::LbfgsConfig lbfgs;

  attack::AttackConfig config_for(attack::AttackKind kind, Task task) const;
};

struct RdfsSettings {
  std::vector<defence::ReducedKind> kinds{defence::ReducedKind::fc, defence::ReducedKind::svm};
  /// Share of each class of the CNN training patches used to train reduced detectors.
  double train_fraction = 0.2;
  std::size_t val_per_class = 500;
  std::size_t test_per_class = 1000;
  defence::SvmConfig svm;
};

struct PlanSettings {
  std::vector<Task> tasks{Task::median};
  std::string architecture = "bayar_style";
  /// 0 stands for N.
  std::vector<std::size_t> k_values{5, 10, 30, 50, 128, 0};
  std::size_t repetitions = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Execute repetitions in a seeded random order (aggregates must not change).
  std::optional<std::uint64_t> execution_shuffle;
};

struct Config {
  Profile profile = Profile::desk;
  DatasetSettings dataset;
  TrainingSettings training;
  AttackSettings attacks;
  RdfsSettings rdfs;
  PlanSettings plan;

  det::CnnArchitecture architecture() const;
  /// K list resolved against N: 0 becomes N, values above N are dropped, sorted, unique.
  std::vector<std::size_t> resolved_k_values() const;
  void validate() const;
};

Config default_config(Profile profile, const std::string& architecture = "bayar_style");

/// Profile defaults (taken from the file's own "profile" unless overridden)
/// followed by the sections {dataset, architecture, training, attacks, rdfs,
/// plan} of a JSON document. Unknown keys are rejected.
Config config_from_json(const std::string& text, std::optional<Profile> profile_override = std::nullopt);
Config load_config(const std::filesystem::path& path, std::optional<Profile> profile_override = std::nullopt);
std::string config_to_json(const Config& config);

}  // namespace rdfs::harness
