#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcim/dataset.hpp"
#include "dcim/optim.hpp"

namespace dcim {

/// One row of the per-epoch metrics table.
struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;  // "train" or "val"
  double forward_nll = 0.0;
  double reverse_nll_mean = 0.0;  // per input unit
  double reverse_nll_sum = 0.0;   // summed over input units
  double accuracy = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Seed of the sample stream used when evaluating the SampledHidden reverse
/// term on a whole dataset, so repeated evaluations agree.
inline constexpr std::uint64_t kEvalSampleSeed = 0x5eed0f5a3d1e5ULL;

/// Full-dataset objective report for metrics. SampledHidden evaluates its
/// own reverse term (conditioned on a sampled layer d-1); the other
/// objectives report the label-conditioned reverse term.
LossReport evaluate_dataset(const Params& p, const Dataset& ds, Objective objective, const EngineOptions& opts = {});

EpochMetrics to_metrics(const LossReport& rep, std::size_t epoch, std::string split);

struct TrainResult {
  Params params;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics& train, const EpochMetrics& val)>;

/// Minibatch training with per-epoch shuffling driven by `rng`. After each
/// epoch both splits are evaluated; a non-finite loss throws NumericError.
TrainResult train(Params p, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg, Rng& rng,
                  const EpochCallback& on_epoch = {});

}  // namespace dcim
