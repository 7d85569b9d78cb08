#pragma once

#include <cstddef>
#include <cstdint>

#include "dcim/objectives.hpp"

namespace dcim {

enum class Optimizer { Sgd, SgdMomentum, Adam };

struct TrainConfig {
  Objective objective = Objective::Bidirectional;
  double lambda = 1.0;
  double lr = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  bool tie_interior_biases = false;
  Precision precision = Precision::Double;
  std::size_t threads = 1;

  ObjectiveSpec objective_spec() const { return {objective, lambda}; }
  EngineOptions engine_options() const { return {threads, precision}; }
  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// First/second moment accumulators (velocity for momentum) and step count.
struct OptimState {
  Gradients first;
  Gradients second;
  std::uint64_t steps = 0;

  static OptimState zeros_like(const Params& p);
};

void step(Params& p, const Gradients& g, OptimState& s, const TrainConfig& cfg);

}  // namespace dcim
