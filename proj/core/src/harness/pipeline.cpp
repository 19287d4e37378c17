#include "rdfs/harness/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rdfs/attack/adv_cache.hpp"
#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/rng.hpp"
#include "rdfs/det/model_io.hpp"
#include "rdfs/harness/dataset.hpp"
#include "rdfs/harness/experiment.hpp"
#include "rdfs/harness/features.hpp"

namespace rdfs::harness {

namespace fs = std::filesystem;

Workspace::Workspace(fs::path root, std::string architecture) : root_(std::move(root)), arch_(std::move(architecture)) {}

fs::path Workspace::dataset_dir(Task task) const { return root_ / "dataset" / task_name(task); }
fs::path Workspace::model_path(Task task) const {
  return root_ / "models" / (task_name(task) + "_" + arch_ + ".rdfsmodel");
}
fs::path Workspace::attack_stem(Task task, attack::AttackKind kind) const {
  return root_ / "attacks" / (task_name(task) + "_" + arch_ + "_" + std::string(attack::attack_name(kind)));
}
fs::path Workspace::feature_path(Task task) const {
  return root_ / "features" / (task_name(task) + "_" + arch_ + ".rdfsfeat");
}
fs::path Workspace::reduced_path(Task task, defence::ReducedKind kind, std::size_t k, std::size_t rep) const {
  return root_ / "rdfs" / (task_name(task) + "_" + arch_) /
         (std::string(defence::kind_name(kind)) + "_K" + std::to_string(k) + "_r" + std::to_string(rep) + ".rdfsred");
}
fs::path Workspace::results_path(Task task) const {
  return root_ / "results" / (task_name(task) + "_" + arch_ + ".jsonl");
}
fs::path Workspace::report_dir() const { return root_ / "report"; }

namespace {

void require(const fs::path& path, const std::string& command) {
  if (!fs::exists(path)) throw MissingArtifactError(path, command);
}

Dataset need_dataset(const Workspace& ws, Task task) {
  require(ws.dataset_dir(task) / "meta.json", "prepare-data");
  return load_dataset(ws.dataset_dir(task));
}

det::CnnDetector need_model(const Workspace& ws, Task task) {
  require(ws.model_path(task), "train-cnn");
  return det::load_model(ws.model_path(task));
}

std::uint64_t task_seed(const Config& c, const char* purpose, Task task) {
  return derive_seed(c.plan.seed, purpose, static_cast<std::uint64_t>(task));
}

}  // namespace

void stage_prepare_data(const Config& config, const Workspace& ws, std::ostream& log) {
  for (Task task : config.plan.tasks) {
    const Dataset ds = prepare_dataset(config.dataset, task, task_seed(config, "dataset", task));
    save_dataset(ws.dataset_dir(task), ds);
    log << "prepare-data " << task_name(task) << ": " << ds.train.size() << " train, " << ds.val.size() << " val, "
        << ds.test.size() << " test patches -> " << ws.dataset_dir(task).string() << "\n";
  }
  write_file_atomically(ws.root() / "config.resolved.json", config_to_json(config) + "\n");
}

std::map<Task, det::TrainingMetadata> stage_train_cnn(const Config& config, const Workspace& ws, std::ostream& log) {
  std::map<Task, det::TrainingMetadata> out;
  for (Task task : config.plan.tasks) {
    const Dataset ds = need_dataset(ws, task);
    det::TrainConfig cfg = config.training.cnn;
    cfg.seed = task_seed(config, "cnn", task);
    det::TrainHistory history;
    const auto detector = det::train_cnn(config.architecture(), ds.train, ds.val, cfg, task_name(task), &history);
    for (const auto& e : history.epochs) {
      log << "train-cnn " << task_name(task) << " epoch " << e.epoch << ": train loss " << std::setprecision(4)
          << e.train_loss << ", val loss " << e.val_loss << ", val accuracy " << e.val_accuracy << "\n";
    }
    fs::create_directories(ws.model_path(task).parent_path());
    det::save_model(ws.model_path(task), detector);
    log << "train-cnn " << task_name(task) << ": best epoch " << history.best_epoch << ", val accuracy "
        << detector.metadata().best_val_accuracy << " -> " << ws.model_path(task).string() << "\n";
    out[task] = detector.metadata();
  }
  return out;
}

std::vector<std::size_t> attacked_patch_ids(const det::CnnDetector& detector, const img::PatchSet& test,
                                            std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.patches[i].label == img::Label::manipulated) pool.push_back(i);
  }
  SplitMix64 rng(derive_seed(seed, "attack-patches"));
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::size_t> out;
  for (std::size_t i : pool) {
    if (out.size() == count) break;
    if (detector.predict(test.patches[i].image).decision == img::Label::manipulated) out.push_back(i);
  }
  return out;
}

std::map<std::pair<Task, attack::AttackKind>, attack::AttackSummary> stage_attack(const Config& config,
                                                                                  const Workspace& ws,
                                                                                  std::ostream& log) {
  std::map<std::pair<Task, attack::AttackKind>, attack::AttackSummary> out;
  for (Task task : config.plan.tasks) {
    const Dataset ds = need_dataset(ws, task);
    const auto detector = need_model(ws, task);
    const auto ids = attacked_patch_ids(detector, ds.test, config.attacks.patches, task_seed(config, "attack", task));
    if (ids.size() < config.attacks.patches) {
      log << "attack " << task_name(task) << ": only " << ids.size() << " H1 test patches are detected, attacking those\n";
    }
    std::vector<float> samples;
    for (std::size_t i : ids) {
      const auto px = det::to_model_units(ds.test.patches[i].image);
      samples.insert(samples.end(), px.begin(), px.end());
    }
    for (auto kind : config.attacks.kinds) {
      const auto batch = attack::evaluate_attack_batch(detector, samples, ids.size(), config.attacks.config_for(kind, task),
                                                       config.plan.threads);
      attack::AdvCache cache;
      cache.task = task_name(task);
      cache.attack = std::string(attack::attack_name(kind));
      cache.model_fingerprint = det::model_fingerprint(detector);
      cache.input_size = detector.input_size();
      for (std::size_t j = 0; j < ids.size(); ++j) cache.entries.push_back({ids[j], batch.outcomes[j]});
      const auto stem = ws.attack_stem(task, kind);
      fs::create_directories(stem.parent_path());
      attack::save_adv_cache(stem, cache);
      const auto& s = batch.summary;
      log << "attack " << task_name(task) << " " << cache.attack << ": success " << s.succeeded << "/" << s.attempted
          << " (rate " << std::setprecision(4) << s.success_rate << ", after 8-bit rounding "
          << s.quantized_success_rate << "), mean PSNR " << s.mean_psnr << " dB, min " << s.min_psnr << " dB\n";
      out[{task, kind}] = s;
    }
  }
  return out;
}

void stage_train_rdfs(const Config& config, const Workspace& ws, std::ostream& log) {
  for (Task task : config.plan.tasks) {
    const Dataset ds = need_dataset(ws, task);
    const auto detector = need_model(ws, task);
    std::vector<attack::AdvCache> caches;
    for (auto kind : config.attacks.kinds) {
      const auto stem = ws.attack_stem(task, kind);
      require(attack::adv_cache_index_path(stem), "attack");
      caches.push_back(attack::load_adv_cache(stem));
    }
    const auto bank = build_feature_bank(detector, ds, config.rdfs, task_seed(config, "features", task), caches);
    fs::create_directories(ws.feature_path(task).parent_path());
    save_feature_bank(ws.feature_path(task), bank);

    const auto items = sweep_items(config.resolved_k_values(), config.plan.repetitions, config.rdfs.kinds);
    fs::create_directories(ws.reduced_path(task, defence::ReducedKind::fc, 0, 0).parent_path());
    run_pool(items.size(), config.plan.threads, config.plan.execution_shuffle, [&](std::size_t i) {
      const auto reduced = train_item(bank, config, items[i]);
      defence::save_reduced(ws.reduced_path(task, items[i].kind, items[i].k, items[i].rep), reduced);
    });
    log << "train-rdfs " << task_name(task) << ": " << items.size() << " reduced detectors over "
        << bank.train.count() << " training feature vectors (N = " << bank.n << ")\n";
  }
}

std::vector<RepResult> stage_evaluate(const Config& config, const Workspace& ws, std::ostream& log) {
  std::vector<RepResult> all;
  for (Task task : config.plan.tasks) {
    require(ws.feature_path(task), "train-rdfs");
    const auto bank = load_feature_bank(ws.feature_path(task));
    const auto items = sweep_items(config.resolved_k_values(), config.plan.repetitions, config.rdfs.kinds);
    for (const auto& item : items) require(ws.reduced_path(task, item.kind, item.k, item.rep), "train-rdfs");
    std::vector<std::vector<RepResult>> slots(items.size());
    run_pool(items.size(), config.plan.threads, config.plan.execution_shuffle, [&](std::size_t i) {
      const auto& item = items[i];
      const auto reduced = defence::load_reduced(ws.reduced_path(task, item.kind, item.k, item.rep),
                                                 repetition_key(config.plan.seed, item.k, item.rep));
      slots[i] = evaluate_item(bank, reduced, item);
    });
    std::vector<RepResult> results;
    for (auto& s : slots) results.insert(results.end(), s.begin(), s.end());
    fs::create_directories(ws.results_path(task).parent_path());
    write_file_atomically(ws.results_path(task), results_jsonl(results));
    log << "evaluate " << task_name(task) << ": " << results.size() << " accuracy records -> "
        << ws.results_path(task).string() << "\n";
    all.insert(all.end(), results.begin(), results.end());
  }
  return all;
}

RenderedReport stage_report(const Config& config, const Workspace& ws, std::ostream& log) {
  std::vector<RepResult> results;
  ReportLayout layout;
  layout.architecture = config.plan.architecture;
  layout.kinds = config.rdfs.kinds;
  layout.k_values = config.resolved_k_values();
  layout.n = config.architecture().flatten_dim();
  for (Task task : config.plan.tasks) {
    require(ws.results_path(task), "evaluate");
    std::ifstream in(ws.results_path(task));
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = parse_results_jsonl(buf.str());
    results.insert(results.end(), rows.begin(), rows.end());
    layout.tasks.push_back(task_name(task));
  }
  const auto rows = aggregate(results, config.plan.architecture, layout.n);
  auto rendered = render_report(rows, layout);
  fs::create_directories(ws.report_dir());
  for (const auto& [name, contents] : rendered.files) {
    write_file_atomically(ws.report_dir() / name, contents);
    log << "report: " << (ws.report_dir() / name).string() << "\n";
  }
  if (!rendered.missing.empty()) log << "report: " << rendered.missing.size() << " empty cells, see the summary\n";
  return rendered;
}

}  // namespace rdfs::harness
