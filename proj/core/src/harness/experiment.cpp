#include "rdfs/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "rdfs/common/rng.hpp"

namespace rdfs::harness {

std::vector<std::string> report_conditions() { return {kNoAttack, "pgd", "fgsm", "bfgs"}; }

defence::SecretKey repetition_key(std::uint64_t master_seed, std::size_t k, std::size_t rep) {
  return derive_seed(master_seed, "rdfs-key", k, rep);
}

std::vector<SweepItem> sweep_items(const std::vector<std::size_t>& k_values, std::size_t repetitions,
                                   const std::vector<defence::ReducedKind>& kinds) {
  std::vector<SweepItem> out;
  for (std::size_t k : k_values) {
    for (std::size_t r = 0; r < repetitions; ++r) {
      for (auto kind : kinds) out.push_back({k, r, kind});
    }
  }
  return out;
}

void run_pool(std::size_t count, std::size_t threads, std::optional<std::uint64_t> shuffle,
              const std::function<void(std::size_t)>& fn) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    SplitMix64 rng(derive_seed(*shuffle, "execution-order"));
    std::shuffle(order.begin(), order.end(), rng);
  }
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t at = next.fetch_add(1);
      if (at >= count) return;
      try {
        fn(order[at]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

defence::ReducedDetector train_item(const FeatureBank& bank, const Config& config, const SweepItem& item) {
  const std::uint64_t seed = config.plan.seed;
  const auto key = repetition_key(seed, item.k, item.rep);
  const auto subset = defence::select_features(key, bank.n, item.k);
  if (item.kind == defence::ReducedKind::fc) {
    det::TrainConfig cfg = config.training.reduced;
    cfg.seed = derive_seed(seed, "reduced-fc", item.k, item.rep);
    return defence::train_reduced_fc(bank.train, bank.val, key, subset, config.architecture().head_hidden(), cfg);
  }
  defence::SvmConfig cfg = config.rdfs.svm;
  cfg.seed = derive_seed(seed, "reduced-svm", item.k, item.rep);
  return defence::train_svm(bank.train, key, subset, cfg);
}

std::vector<RepResult> evaluate_item(const FeatureBank& bank, const defence::ReducedDetector& detector,
                                     const SweepItem& item) {
  std::vector<RepResult> out;
  auto score = [&](const std::string& condition, const defence::FeatureSet& fs) {
    const auto decisions = detector.predict_batch(fs.values, fs.count());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < fs.count(); ++i) correct += static_cast<int>(decisions[i].decision) == fs.labels[i];
    out.push_back({bank.task, item.kind, item.k, item.rep, condition,
                   100.0 * static_cast<double>(correct) / static_cast<double>(fs.count()), fs.count()});
  };
  score(kNoAttack, bank.test);
  for (const auto& condition : report_conditions()) {
    const auto it = bank.adversarial.find(condition);
    if (it != bank.adversarial.end() && it->second.count() > 0) score(condition, it->second);
  }
  return out;
}

std::vector<RepResult> run_sweep(const FeatureBank& bank, const Config& config) {
  const auto items = sweep_items(config.resolved_k_values(), config.plan.repetitions, config.rdfs.kinds);
  std::vector<std::vector<RepResult>> slots(items.size());
  run_pool(items.size(), config.plan.threads, config.plan.execution_shuffle, [&](std::size_t i) {
    slots[i] = evaluate_item(bank, train_item(bank, config, items[i]), items[i]);
  });
  std::vector<RepResult> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace rdfs::harness
