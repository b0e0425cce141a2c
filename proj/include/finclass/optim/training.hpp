#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "finclass/data/dataset.hpp"
#include "finclass/model/network.hpp"
#include "finclass/nn/layers.hpp"
#include "finclass/optim/adam.hpp"

namespace finclass::optim {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  AdamHyper adam;
  std::uint64_t seed = 1;
  nn::Activation activation = nn::Activation::kRelu;
  nn::LossForm loss = nn::LossForm::kTwoTerm;
  bool shuffle = true;
  unsigned threads = 1;
};

// Throws InvalidConfig naming the first bad field.
void validate(const TrainConfig& cfg);

// One row per optimizer step. train_accuracy is over the samples seen so
// far in the current epoch, measured on the training-mode forward passes.
struct HistoryRow {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

struct History {
  std::vector<HistoryRow> rows;

  // Mean batch loss of each epoch.
  std::vector<double> epoch_losses() const;
};

void write_history_csv(std::ostream& out, const History& history);

using StepCallback = std::function<void(const HistoryRow&)>;

// Mini-batch Adam training of every parameter. Per-sample gradients are
// summed in batch order, so results do not depend on cfg.threads.
History fit(model::Network& network, const data::Dataset& ds,
            const TrainConfig& cfg, const StepCallback& on_step = {});

struct Metrics {
  double accuracy = 0.0;  // percent
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  // Empty when the class was never predicted / never present.
  std::vector<std::optional<double>> precision;
  std::vector<std::optional<double>> recall;
};

Metrics compute_metrics(std::span<const std::size_t> truth,
                        std::span<const std::size_t> predicted,
                        std::size_t num_classes);

Metrics evaluate(const model::Network& network, const data::Dataset& ds,
                 unsigned threads = 1);

}  // namespace finclass::optim
