#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dcim/math.hpp"

namespace dcim {

/// Images with categorical labels. Pixels are intensities in [0, 1].
struct Dataset {
  std::vector<Vector> images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return images.size(); }
  std::size_t input_dim() const { return images.empty() ? 0 : images.front().size(); }

  /// Throws std::invalid_argument if sizes, label range or pixel range are off.
  void validate() const;
  /// First `n` examples (or all, if fewer).
  Dataset head(std::size_t n) const;
};

/// Row-major batch: inputs are pixel intensities in [0, 1]; targets are
/// class distributions (categorical top layer) or unit probabilities in
/// [0, 1] (binary top layer). `labels` drive the accuracy metric.
struct LabeledBatch {
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return inputs.rows(); }
};

/// One-hot targets for the selected rows.
LabeledBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices);
LabeledBatch make_batch(const Dataset& ds);

/// Batch with explicit per-unit targets (binary top layer); labels are the
/// rounded argmax of each target row.
LabeledBatch make_unit_batch(const std::vector<Vector>& inputs, const std::vector<Vector>& targets);

}  // namespace dcim
