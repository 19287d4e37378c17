#include "rdfs/det/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rdfs/common/rng.hpp"

namespace rdfs::det {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("training: learning_rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("training: batch_size must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("training: beta1 and beta2 must lie in [0, 1)");
  if (max_epochs == 0) throw std::invalid_argument("training: max_epochs must be >= 1");
  if (eval_batch == 0) throw std::invalid_argument("training: eval_batch must be >= 1");
  if (early_stop && early_stop->window == 0) throw std::invalid_argument("training: early-stop window must be >= 1");
}

void LabeledSamples::validate(std::size_t classes) const {
  if (sample_shape.empty()) throw std::invalid_argument("samples: empty sample shape");
  if (values.size() != labels.size() * sample_size()) {
    throw std::invalid_argument("samples: " + std::to_string(values.size()) + " values for " +
                                std::to_string(labels.size()) + " samples of shape " + ad::shape_string(sample_shape));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes)
      throw std::invalid_argument("samples: label " + std::to_string(l) + " out of range");
  }
}

bool LabeledSamples::has_all_classes(std::size_t classes) const {
  std::vector<bool> seen(classes, false);
  for (int l : labels) {
    if (l >= 0 && static_cast<std::size_t>(l) < classes) seen[static_cast<std::size_t>(l)] = true;
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::size_t argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

namespace {

ad::Tensor<float> batch_tensor(const Network<float>& net, std::span<const float> values, std::size_t first,
                               std::size_t n) {
  const std::size_t per = ad::shape_size(net.architecture().input_shape);
  ad::Shape shape{n};
  for (std::size_t d : net.architecture().input_shape) shape.push_back(d);
  return ad::Tensor<float>(std::move(shape),
                           std::vector<float>(values.begin() + first * per, values.begin() + (first + n) * per));
}

// Per-row cross-entropy, computed in double.
double row_loss(std::span<const float> logits, int label) {
  const float m = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (float v : logits) z += std::exp(static_cast<double>(v) - m);
  return std::log(z) - (static_cast<double>(logits[static_cast<std::size_t>(label)]) - m);
}

struct Adam {
  std::vector<std::vector<double>> m, v;
  std::size_t t = 0;

  explicit Adam(const std::vector<ad::Tensor<float>>& params) {
    for (const auto& p : params) {
      m.emplace_back(p.size(), 0.0);
      v.emplace_back(p.size(), 0.0);
    }
  }

  void step(std::vector<ad::Tensor<float>>& params, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (!p.has_grad()) continue;
      const auto g = p.grad();
      auto w = p.data();
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[i][j] = cfg.beta1 * m[i][j] + (1 - cfg.beta1) * g[j];
        v[i][j] = cfg.beta2 * v[i][j] + (1 - cfg.beta2) * g[j] * g[j];
        const double mhat = m[i][j] / c1;
        const double vhat = v[i][j] / c2;
        w[j] = static_cast<float>(w[j] - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
      }
    }
  }
};

}  // namespace

std::vector<float> infer_logits(const Network<float>& net, std::span<const float> values, std::size_t count,
                                std::size_t batch) {
  const std::size_t classes = net.architecture().num_classes();
  const std::size_t per = ad::shape_size(net.architecture().input_shape);
  if (values.size() != count * per) {
    throw std::invalid_argument("infer_logits: " + std::to_string(values.size()) + " values for " +
                                std::to_string(count) + " samples of size " + std::to_string(per));
  }
  if (batch == 0) batch = 1;
  std::vector<float> out;
  out.reserve(count * classes);
  auto tape = ad::Tape<float>::inference();
  for (std::size_t first = 0; first < count; first += batch) {
    const std::size_t n = std::min(batch, count - first);
    const auto logits = net.forward_infer(tape, batch_tensor(net, values, first, n));
    out.insert(out.end(), logits.data().begin(), logits.data().end());
  }
  return out;
}

EvalResult evaluate_network(const Network<float>& net, const LabeledSamples& data, std::size_t batch) {
  EvalResult r;
  if (data.count() == 0) return r;
  const std::size_t classes = net.architecture().num_classes();
  const auto logits = infer_logits(net, data.values, data.count(), batch);
  double loss = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.count(); ++i) {
    const std::span<const float> row(logits.data() + i * classes, classes);
    loss += row_loss(row, data.labels[i]);
    correct += static_cast<int>(argmax(row)) == data.labels[i] ? 1 : 0;
  }
  r.loss = loss / static_cast<double>(data.count());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.count());
  return r;
}

TrainHistory train_network(Network<float>& net, const LabeledSamples& train, const LabeledSamples& val,
                           const TrainConfig& cfg) {
  cfg.validate();
  const auto& arch = net.architecture();
  const std::size_t classes = arch.num_classes();
  for (const auto* set : {&train, &val}) {
    if (set->sample_shape != arch.input_shape) {
      throw std::invalid_argument("training: sample shape " + ad::shape_string(set->sample_shape) +
                                  " does not match network input " + ad::shape_string(arch.input_shape));
    }
    set->validate(classes);
  }
  if (!train.has_all_classes(classes)) throw std::invalid_argument("training: training data lacks a class");
  if (val.count() == 0) throw std::invalid_argument("training: empty validation set");

  TrainHistory history;
  history.initial_loss = evaluate_network(net, val, cfg.eval_batch).loss;

  net.set_trainable(true);
  Adam adam(net.parameters());
  SplitMix64 rng(derive_seed(cfg.seed, "train-shuffle"));
  std::vector<std::size_t> order(train.count());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::optional<Network<float>> best;
  double best_accuracy = -1;
  const std::size_t per = train.sample_size();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.bounded(i)]);
    double loss_sum = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - first);
      ad::Shape shape{n};
      shape.insert(shape.end(), arch.input_shape.begin(), arch.input_shape.end());
      std::vector<float> values(n * per);
      std::vector<int> labels(n);
      for (std::size_t b = 0; b < n; ++b) {
        const auto s = train.sample(order[first + b]);
        std::copy(s.begin(), s.end(), values.begin() + b * per);
        labels[b] = train.labels[order[first + b]];
      }
      ad::Tape<float> tape;
      for (auto& p : net.parameters()) p.zero_grad();
      const auto logits = net.forward(tape, ad::Tensor<float>(std::move(shape), std::move(values)), ad::Mode::train);
      const auto loss = ad::softmax_cross_entropy(tape, logits, labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch starting at " << first
            << " (learning rate " << cfg.learning_rate << ", last finite epoch loss "
            << (history.epochs.empty() ? history.initial_loss : history.epochs.back().train_loss) << ")";
        net.set_trainable(false);
        throw TrainingDiverged(msg.str());
      }
      tape.backward(loss);
      adam.step(net.parameters(), cfg);
      net.project_constraints();
      loss_sum += value * static_cast<double>(n);
    }
    net.set_trainable(false);
    const auto eval = evaluate_network(net, val, cfg.eval_batch);
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()), eval.loss, eval.accuracy});
    if (eval.accuracy > best_accuracy) {
      best_accuracy = eval.accuracy;
      best = net;
      history.best_epoch = epoch;
    }
    if (cfg.early_stop && epoch > cfg.early_stop->window) {
      const double before = history.epochs[epoch - 1 - cfg.early_stop->window].val_loss;
      if (std::abs(eval.loss - before) < cfg.early_stop->threshold) {
        history.early_stopped = true;
        break;
      }
    }
    if (epoch < cfg.max_epochs) net.set_trainable(true);
  }
  net = std::move(*best);
  net.set_trainable(false);
  return history;
}

}  // namespace rdfs::det
