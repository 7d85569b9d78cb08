#include "dcim/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dcim/errors.hpp"

namespace dcim {

LossReport evaluate_dataset(const Params& p, const Dataset& ds, Objective objective, const EngineOptions& opts) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate_dataset: empty dataset");
  // Slices bound the batch memory; each slice draws its samples from its own
  // stream so the result does not depend on anything but the dataset.
  constexpr std::size_t kSlice = 4096;
  std::vector<std::size_t> idx;
  double fwd = 0.0, rev = 0.0, acc = 0.0;
  for (std::size_t first = 0, slice = 0; first < ds.size(); first += kSlice, ++slice) {
    const std::size_t count = std::min(kSlice, ds.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    Rng rng = Rng::stream(kEvalSampleSeed, slice);
    const LossReport r = evaluate(p, make_batch(ds, idx), {objective, 1.0}, rng, opts);
    const double w = static_cast<double>(count);
    fwd += r.forward_nll * w;
    rev += r.reverse_nll * w;
    acc += r.accuracy * w;
  }
  const double n = static_cast<double>(ds.size());
  LossReport rep;
  rep.forward_nll = fwd / n;
  rep.reverse_nll = rev / n;
  rep.reverse_nll_per_unit = rep.reverse_nll / static_cast<double>(p.spec().input_dim());
  rep.total = rep.forward_nll + effective_lambda({objective, 1.0}) * rep.reverse_nll;
  rep.accuracy = acc / n;
  return rep;
}

EpochMetrics to_metrics(const LossReport& rep, std::size_t epoch, std::string split) {
  return {epoch, std::move(split), rep.forward_nll, rep.reverse_nll_per_unit, rep.reverse_nll, rep.accuracy};
}

namespace {

void check_finite(const LossReport& rep, const char* where) {
  if (!std::isfinite(rep.forward_nll) || !std::isfinite(rep.reverse_nll))
    throw NumericError(std::string("non-finite loss during ") + where);
}

void check_finite(const Params& p) {
  for (const LayerParams& l : p.layers()) {
    const auto finite = [](const auto& xs) {
      return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
    };
    if (!finite(l.weight.span()) || !finite(l.forward_bias) || !finite(l.backward_bias))
      throw NumericError("non-finite parameter after optimizer step");
  }
}

}  // namespace

TrainResult train(Params p, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg, Rng& rng,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw std::invalid_argument("train: empty dataset");
  const ObjectiveSpec obj = cfg.objective_spec();
  const EngineOptions opts = cfg.engine_options();
  OptimState state = OptimState::zeros_like(p);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{std::move(p), {}};
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      const LabeledBatch batch = make_batch(train_set, std::span(order).subspan(first, count));
      auto [report, g] = grad(result.params, batch, obj, rng, opts);
      check_finite(report, "training");
      step(result.params, g, state, cfg);
      check_finite(result.params);
    }
    const LossReport tr = evaluate_dataset(result.params, train_set, cfg.objective, opts);
    const LossReport va = evaluate_dataset(result.params, val_set, cfg.objective, opts);
    check_finite(tr, "train evaluation");
    check_finite(va, "validation evaluation");
    result.metrics.push_back(to_metrics(tr, epoch, "train"));
    result.metrics.push_back(to_metrics(va, epoch, "val"));
    if (on_epoch) on_epoch(result.metrics[result.metrics.size() - 2], result.metrics.back());
  }
  return result;
}

}  // namespace dcim
