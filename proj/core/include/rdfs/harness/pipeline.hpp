#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rdfs/attack/attacks.hpp"
#include "rdfs/det/detector.hpp"
#include "rdfs/harness/config.hpp"
#include "rdfs/harness/report.hpp"

namespace rdfs::harness {

/// Artifact locations under one output directory.
class Workspace {
 public:
  Workspace(std::filesystem::path root, std::string architecture);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dataset_dir(Task task) const;
  std::filesystem::path model_path(Task task) const;
  /// Stem of the .jsonl/.bin adversarial cache pair.
  std::filesystem::path attack_stem(Task task, attack::AttackKind kind) const;
  std::filesystem::path feature_path(Task task) const;
  std::filesystem::path reduced_path(Task task, defence::ReducedKind kind, std::size_t k, std::size_t rep) const;
  std::filesystem::path results_path(Task task) const;
  std::filesystem::path report_dir() const;

 private:
  std::filesystem::path root_;
  std::string arch_;
};

/// Each stage reads the artifacts of the stage before it and throws
/// MissingArtifactError naming that stage's command when they are absent.
void stage_prepare_data(const Config& config, const Workspace& ws, std::ostream& log);

std::map<Task, det::TrainingMetadata> stage_train_cnn(const Config& config, const Workspace& ws, std::ostream& log);

/// Attacks the first `patches` H1 test patches (in a seeded order) that the CNN decides H1.
std::map<std::pair<Task, attack::AttackKind>, attack::AttackSummary> stage_attack(const Config& config,
                                                                                  const Workspace& ws,
                                                                                  std::ostream& log);

/// Builds the feature bank and trains and saves every reduced detector.
void stage_train_rdfs(const Config& config, const Workspace& ws, std::ostream& log);

std::vector<RepResult> stage_evaluate(const Config& config, const Workspace& ws, std::ostream& log);

/// Writes the CSV tables and summary into the report directory.
RenderedReport stage_report(const Config& config, const Workspace& ws, std::ostream& log);

/// Indices into the test split of the patches attacked by stage_attack.
std::vector<std::size_t> attacked_patch_ids(const det::CnnDetector& detector, const img::PatchSet& test,
                                            std::size_t count, std::uint64_t seed);

}  // namespace rdfs::harness
