#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "dcim/objectives.hpp"

namespace dcim {

struct GradcheckOptions {
  ObjectiveSpec objective;
  std::uint64_t seed = 0;
  std::size_t trials = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Negative control: adds this offset to one analytic gradient entry.
  double fault = 0.0;
};

struct GradcheckReport {
  GradientComparison worst;
  std::size_t worst_trial = 0;
  std::string worst_arch;
  std::size_t trials = 0;
  bool passed = false;
};

/// Compares the batched engine's double-precision gradient with central
/// differences of the reference objective on random small networks
/// (depth 2-3, widths 2-5, mixed encodings and bias tying).
GradcheckReport run_gradcheck(const GradcheckOptions& opts);

}  // namespace dcim
