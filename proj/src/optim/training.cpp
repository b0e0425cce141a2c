#include "finclass/optim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "finclass/error.hpp"
#include "finclass/parallel.hpp"

namespace finclass::optim {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidConfig("epochs must be at least 1");
  if (cfg.batch_size < 1) throw InvalidConfig("batch_size must be at least 1");
  const AdamHyper& h = cfg.adam;
  if (!(h.lr > 0.0) || !std::isfinite(h.lr)) {
    throw InvalidConfig("lr must be positive");
  }
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0)) {
    throw InvalidConfig("beta1 must be in [0, 1)");
  }
  if (!(h.beta2 >= 0.0 && h.beta2 < 1.0)) {
    throw InvalidConfig("beta2 must be in [0, 1)");
  }
  if (!(h.epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
}

std::vector<double> History::epoch_losses() const {
  std::vector<double> sums, counts;
  for (const auto& r : rows) {
    if (r.epoch >= sums.size()) {
      sums.resize(r.epoch + 1, 0.0);
      counts.resize(r.epoch + 1, 0.0);
    }
    sums[r.epoch] += r.loss;
    counts[r.epoch] += 1.0;
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i] > 0) sums[i] /= counts[i];
  }
  return sums;
}

void write_history_csv(std::ostream& out, const History& history) {
  out << "epoch,step,loss,train_accuracy\n";
  const auto flags = out.flags();
  const auto prec = out.precision(17);
  for (const auto& r : history.rows) {
    out << r.epoch << ',' << r.step << ',' << r.loss << ',' << r.train_accuracy
        << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

namespace {

void check_dataset(const model::Network& network, const data::Dataset& ds) {
  if (ds.samples.empty()) throw InvalidInput("dataset is empty");
  const nn::Shape& in = network.layers().front().input_shape;
  const std::size_t k = network.num_classes();
  for (const auto& s : ds.samples) {
    if (s.tensor.shape() != in) {
      throw InvalidShape("sample '" + s.source + "' has shape " +
                         nn::to_string(s.tensor.shape()) + ", network expects " +
                         nn::to_string(in));
    }
    if (s.label >= k) {
      throw InvalidInput("sample '" + s.source + "' has label " +
                         std::to_string(s.label) + " but the network has " +
                         std::to_string(k) + " classes");
    }
  }
}

struct SampleResult {
  model::Gradients grads;
  double loss = 0.0;
  bool correct = false;
};

}  // namespace

History fit(model::Network& network, const data::Dataset& ds,
            const TrainConfig& cfg, const StepCallback& on_step) {
  validate(cfg);
  check_dataset(network, ds);

  const std::size_t n = ds.samples.size();
  const std::size_t k = network.num_classes();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(cfg.seed);

  AdamState state;
  state.hyper = cfg.adam;
  auto params = network.parameters();

  History history;
  std::size_t step = 0;
  std::uint64_t sample_counter = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), gen);
    std::size_t seen = 0, correct = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, n - begin);
      std::vector<SampleResult> results(batch);
      parallel_for(batch, cfg.threads, [&](std::size_t b) {
        const data::Sample& s = ds.samples[order[begin + b]];
        model::PassOptions opts{true, cfg.seed, sample_counter + b};
        model::Trace trace;
        const nn::Tensor logits = network.forward(s.tensor, opts, &trace);
        nn::Tensor target({k});
        target[s.label] = 1.0f;
        results[b].loss = nn::softmax_cross_entropy_loss(logits, target,
                                                         cfg.loss);
        results[b].correct = model::argmax(logits.data()) == s.label;
        results[b].grads = network.backward(
            trace, nn::softmax_cross_entropy_grad(logits, target, cfg.loss));
      });
      sample_counter += batch;

      double loss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        if (!std::isfinite(results[b].loss)) {
          throw DivergedError(
              "non-finite loss at epoch " + std::to_string(epoch) + " step " +
              std::to_string(step) + " (sample '" +
              ds.samples[order[begin + b]].source + "')");
        }
        loss += results[b].loss;
        correct += results[b].correct;
      }
      seen += batch;

      model::Gradients grads = std::move(results[0].grads);
      for (std::size_t b = 1; b < batch; ++b) {
        for (std::size_t p = 0; p < grads.size(); ++p) {
          auto dst = grads[p].data();
          auto src = results[b].grads[p].data();
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      }
      const float inv = 1.0f / static_cast<float>(batch);
      for (auto& g : grads) {
        for (auto& x : g.data()) x *= inv;
      }
      adam_step<float>(params, grads, state);

      HistoryRow row{epoch, step, loss / static_cast<double>(batch),
                     100.0 * static_cast<double>(correct) /
                         static_cast<double>(seen)};
      history.rows.push_back(row);
      if (on_step) on_step(row);
      ++step;
    }
  }
  return history;
}

Metrics compute_metrics(std::span<const std::size_t> truth,
                        std::span<const std::size_t> predicted,
                        std::size_t num_classes) {
  if (truth.empty()) throw InvalidInput("cannot evaluate an empty dataset");
  if (truth.size() != predicted.size()) {
    throw InvalidInput("truth and prediction counts differ");
  }
  Metrics m;
  m.total = truth.size();
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw InvalidInput("class index out of range");
    }
    ++m.confusion[truth[i]][predicted[i]];
    m.correct += truth[i] == predicted[i];
  }
  m.accuracy =
      100.0 * static_cast<double>(m.correct) / static_cast<double>(m.total);
  m.precision.resize(num_classes);
  m.recall.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t predicted_c = 0, actual_c = 0;
    for (std::size_t r = 0; r < num_classes; ++r) {
      predicted_c += m.confusion[r][c];
      actual_c += m.confusion[c][r];
    }
    const auto tp = static_cast<double>(m.confusion[c][c]);
    if (predicted_c > 0) m.precision[c] = tp / static_cast<double>(predicted_c);
    if (actual_c > 0) m.recall[c] = tp / static_cast<double>(actual_c);
  }
  return m;
}

Metrics evaluate(const model::Network& network, const data::Dataset& ds,
                 unsigned threads) {
  if (ds.samples.empty()) throw InvalidInput("cannot evaluate an empty dataset");
  check_dataset(network, ds);
  std::vector<std::size_t> truth(ds.size()), predicted(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    truth[i] = ds.samples[i].label;
    predicted[i] = model::predict(network, ds.samples[i].tensor).label;
  });
  return compute_metrics(truth, predicted, network.num_classes());
}

}  // namespace finclass::optim
