#include "dcim/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcim {

namespace {

Vector row_vector(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return Vector(std::vector<double>(row.begin(), row.end()));
}

void check_batch(const Params& p, const LabeledBatch& batch) {
  const auto& spec = p.spec();
  if (batch.size() == 0) throw std::invalid_argument("objective: empty batch");
  if (batch.inputs.cols() != spec.input_dim())
    throw std::invalid_argument("objective: batch input width does not match network input");
  if (batch.targets.cols() != spec.output_dim() || batch.targets.rows() != batch.size())
    throw std::invalid_argument("objective: batch target width does not match network output");
  if (spec.categorical_output())
    for (std::size_t l : batch.labels)
      if (l >= spec.output_dim()) throw std::invalid_argument("objective: label out of range");
}

/// Top-layer state fed to the reverse model for row r.
Vector reverse_start(const Params& p, const LabeledBatch& batch, std::size_t r) {
  Vector t = row_vector(batch.targets, r);
  return p.spec().categorical_output() ? t : encode_pixels(t, p.spec().encoding);
}

double row_reverse_nll(const Params& p, const Vector& pixels, const MeanStack& back) {
  return bce_means(pixels, decode_pixels(back.means[0], p.spec().encoding));
}

}  // namespace

Gradients Gradients::zeros_like(const Params& p) {
  Gradients g;
  for (const auto& l : p.layers())
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), Vector(l.forward_bias.size()),
                        Vector(l.backward_bias.size())});
  return g;
}

std::size_t Gradients::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.forward_bias.size() + l.backward_bias.size();
  return n;
}

double effective_lambda(const ObjectiveSpec& o) noexcept {
  return o.kind == Objective::ForwardOnly ? 0.0 : o.lambda;
}

ForwardLoss loss_forward(const Params& p, const LabeledBatch& batch) {
  check_batch(p, batch);
  const auto& spec = p.spec();
  double nll = 0.0;
  double correct = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const MeanStack fwd = forward_means(p, encode_pixels(row_vector(batch.inputs, r), spec.encoding));
    const Vector target = row_vector(batch.targets, r);
    if (spec.categorical_output()) {
      const auto& top = p.layer(p.depth() - 1);
      const Vector logp = log_softmax(add(mat_vec(top.weight, fwd.means[p.depth() - 1]), top.forward_bias));
      for (std::size_t c = 0; c < target.size(); ++c) nll -= target[c] * logp[c];
      const Vector& probs = fwd.means.back();
      const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
      correct += best == batch.labels[r] ? 1.0 : 0.0;
    } else {
      const Vector probs = decode_pixels(fwd.means.back(), spec.encoding);
      nll += bce_means(target, probs);
      double agree = 0.0;
      for (std::size_t j = 0; j < probs.size(); ++j) agree += (probs[j] >= 0.5) == (target[j] >= 0.5) ? 1.0 : 0.0;
      correct += agree / static_cast<double>(probs.size());
    }
  }
  const double n = static_cast<double>(batch.size());
  return {nll / n, correct / n};
}

double loss_reverse(const Params& p, const LabeledBatch& batch) {
  check_batch(p, batch);
  double total = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r)
    total += row_reverse_nll(p, row_vector(batch.inputs, r), backward_means(p, reverse_start(p, batch, r)));
  return total / static_cast<double>(batch.size());
}

LossReport loss_sampled_hidden(const Params& p, const LabeledBatch& batch, Rng& rng, double lambda) {
  check_batch(p, batch);
  const std::size_t d = p.depth();
  if (d < 2) throw std::invalid_argument("loss_sampled_hidden: network needs at least two layers");
  const auto& spec = p.spec();
  const std::uint64_t base = rng.next_u64();
  double reverse = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Vector pixels = row_vector(batch.inputs, r);
    const MeanStack fwd = forward_means(p, encode_pixels(pixels, spec.encoding));
    Rng stream = Rng::stream(base, r);
    const Vector hidden = sample_layer(fwd.means[d - 1], spec.encoding, stream);
    reverse += row_reverse_nll(p, pixels, backward_means_from(p, d - 1, hidden));
  }
  const ForwardLoss f = loss_forward(p, batch);
  LossReport rep;
  rep.forward_nll = f.nll;
  rep.accuracy = f.accuracy;
  rep.reverse_nll = reverse / static_cast<double>(batch.size());
  rep.reverse_nll_per_unit = rep.reverse_nll / static_cast<double>(spec.input_dim());
  rep.total = rep.forward_nll + lambda * rep.reverse_nll;
  return rep;
}

LossReport objective_value(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng) {
  if (obj.kind == Objective::SampledHidden) return loss_sampled_hidden(p, batch, rng, obj.lambda);
  const ForwardLoss f = loss_forward(p, batch);
  LossReport rep;
  rep.forward_nll = f.nll;
  rep.accuracy = f.accuracy;
  rep.reverse_nll = loss_reverse(p, batch);
  rep.reverse_nll_per_unit = rep.reverse_nll / static_cast<double>(p.spec().input_dim());
  rep.total = rep.forward_nll + effective_lambda(obj) * rep.reverse_nll;
  return rep;
}

Gradients finite_diff_grad(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, double h,
                           const Rng& rng) {
  return finite_diff(p, h, [&](const Params& q) {
    Rng local = rng;
    return objective_value(q, batch, obj, local).total;
  });
}

GradientComparison compare_gradients(const Gradients& analytic, const Gradients& numeric) {
  if (analytic.layers.size() != numeric.layers.size())
    throw std::invalid_argument("compare_gradients: layer count mismatch");
  GradientComparison worst;
  worst.max_rel_error = -1.0;
  Gradients a = analytic;
  a.for_each([&](std::size_t k, int field, std::size_t i, double& g) {
    const auto& nl = numeric.layers[k];
    const double n = field == 0 ? nl.weight.data()[i] : field == 1 ? nl.forward_bias[i] : nl.backward_bias[i];
    const double err = std::abs(g - n) / std::max(1e-8, std::abs(g) + std::abs(n));
    if (err > worst.max_rel_error || std::isnan(err)) worst = {std::isnan(err) ? INFINITY : err, k, field, i, g, n};
  });
  if (worst.max_rel_error < 0.0) worst.max_rel_error = 0.0;
  return worst;
}

}  // namespace dcim
