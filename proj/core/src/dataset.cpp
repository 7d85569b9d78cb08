#include "dcim/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dcim {

void Dataset::validate() const {
  if (images.size() != labels.size()) throw std::invalid_argument("Dataset: image and label counts differ");
  const std::size_t dim = input_dim();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].size() != dim) throw std::invalid_argument("Dataset: image " + std::to_string(i) + " has wrong size");
    if (labels[i] >= class_count) throw std::invalid_argument("Dataset: label out of range at " + std::to_string(i));
    for (double v : images[i])
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Dataset: pixel outside [0,1] at " + std::to_string(i));
  }
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  return {std::vector<Vector>(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n)),
          std::vector<std::size_t>(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)), class_count};
}

LabeledBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t dim = ds.input_dim();
  LabeledBatch b{Matrix(indices.size(), dim), Matrix(indices.size(), ds.class_count), {}};
  b.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (ds.images[i].size() != dim) throw std::invalid_argument("make_batch: ragged dataset");
    std::copy(ds.images[i].begin(), ds.images[i].end(), b.inputs.row(r).begin());
    b.targets(r, ds.labels[i]) = 1.0;
    b.labels.push_back(ds.labels[i]);
  }
  return b;
}

LabeledBatch make_batch(const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(ds, all);
}

LabeledBatch make_unit_batch(const std::vector<Vector>& inputs, const std::vector<Vector>& targets) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw std::invalid_argument("make_unit_batch: need equal, nonzero input and target counts");
  LabeledBatch b{Matrix(inputs.size(), inputs.front().size()), Matrix(inputs.size(), targets.front().size()), {}};
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    if (inputs[r].size() != b.inputs.cols() || targets[r].size() != b.targets.cols())
      throw std::invalid_argument("make_unit_batch: ragged rows");
    std::copy(inputs[r].begin(), inputs[r].end(), b.inputs.row(r).begin());
    std::copy(targets[r].begin(), targets[r].end(), b.targets.row(r).begin());
    b.labels.push_back(static_cast<std::size_t>(
        std::max_element(targets[r].begin(), targets[r].end()) - targets[r].begin()));
  }
  return b;
}

}  // namespace dcim
