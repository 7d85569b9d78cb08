#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dcim/dataset.hpp"
#include "dcim/network.hpp"
#include "dcim/rng.hpp"

namespace dcim {

/// Training objectives.
///   ForwardOnly:   -log p(x^d | x^0)                       (discriminative)
///   Bidirectional: -log p(x^d | x^0) - lambda log q(x^0 | x^d)
///   SampledHidden: -log p(x^d | x^0) - lambda log q(x^0 | x^{d-1}),
///                  x^{d-1} drawn from the forward means for the current
///                  parameters and treated as a constant.
enum class Objective { Bidirectional, SampledHidden, ForwardOnly };

struct ObjectiveSpec {
  Objective kind = Objective::Bidirectional;
  double lambda = 1.0;
};

/// Batch means. reverse_nll sums over input units; reverse_nll_per_unit is
/// the same value divided by the input dimension.
struct LossReport {
  double forward_nll = 0.0;
  double reverse_nll = 0.0;
  double reverse_nll_per_unit = 0.0;
  double total = 0.0;
  double accuracy = 0.0;
};

/// Mirrors Params layer by layer.
struct Gradients {
  std::vector<LayerParams> layers;

  static Gradients zeros_like(const Params& p);
  std::size_t size() const;
  /// Visits (layer, field, index, value&) for every scalar; field is
  /// 0 = weight, 1 = forward bias, 2 = backward bias.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto& l = layers[k];
      for (std::size_t i = 0; i < l.weight.size(); ++i) f(k, 0, i, l.weight.data()[i]);
      for (std::size_t i = 0; i < l.forward_bias.size(); ++i) f(k, 1, i, l.forward_bias[i]);
      for (std::size_t i = 0; i < l.backward_bias.size(); ++i) f(k, 2, i, l.backward_bias[i]);
    }
  }
};

double effective_lambda(const ObjectiveSpec& o) noexcept;

// Reference path: one example at a time through forward_means /
// backward_means. Slow; used as the oracle for the batched engine.

struct ForwardLoss {
  double nll = 0.0;
  double accuracy = 0.0;
};

ForwardLoss loss_forward(const Params& p, const LabeledBatch& batch);
double loss_reverse(const Params& p, const LabeledBatch& batch);
/// Draws one base seed from `rng`; example i samples from Rng::stream(base, i).
LossReport loss_sampled_hidden(const Params& p, const LabeledBatch& batch, Rng& rng, double lambda = 1.0);
/// Objective value via the reference path. Consumes `rng` only for SampledHidden.
LossReport objective_value(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng);

enum class Precision { Double, Single };

struct EngineOptions {
  std::size_t threads = 1;
  Precision precision = Precision::Double;
};

/// Rows per work unit of the batched engine. Results depend on this chunking
/// but not on the thread count.
inline constexpr std::size_t kEngineChunkRows = 64;

/// Batched reverse-mode gradient of the objective averaged over the batch.
/// W^k receives the forward-pass contribution plus lambda times the
/// reverse-pass contribution; tied interior biases receive the sum of both
/// bias gradients. Rng consumption matches objective_value.
std::pair<LossReport, Gradients> grad(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj,
                                      Rng& rng, const EngineOptions& opts = {});

/// Gradients of the two terms separately (unscaled by lambda); grad() is
/// forward + lambda * reverse.
struct TermGradients {
  Gradients forward;
  Gradients reverse;
};
TermGradients grad_terms(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng,
                         const EngineOptions& opts = {});

/// Batched objective value without gradients (double precision).
LossReport evaluate(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng,
                    const EngineOptions& opts = {});

/// Central differences of objective_value. Every evaluation restarts from a
/// copy of `rng`, so SampledHidden sees the same sample stream on both
/// sides. Tied bias pairs are perturbed together.
Gradients finite_diff_grad(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, double h,
                           const Rng& rng);

/// Central differences of an arbitrary scalar function of the parameters.
template <typename F>
Gradients finite_diff(const Params& p, double h, F&& f);

struct GradientComparison {
  double max_rel_error = 0.0;
  std::size_t layer = 0;
  int field = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Max over coordinates of |g - n| / max(1e-8, |g| + |n|).
GradientComparison compare_gradients(const Gradients& analytic, const Gradients& numeric);

template <typename F>
Gradients finite_diff(const Params& p, double h, F&& f) {
  Gradients g = Gradients::zeros_like(p);
  Params q = p;
  const bool tied = p.tie_interior_biases();
  for (std::size_t k = 0; k < q.depth(); ++k) {
    auto perturb = [&](double& slot, double* twin, double& out) {
      const double saved = slot;
      const double twin_saved = twin ? *twin : 0.0;
      slot = saved + h;
      if (twin) *twin = slot;
      const double up = f(q);
      slot = saved - h;
      if (twin) *twin = slot;
      const double down = f(q);
      slot = saved;
      if (twin) *twin = twin_saved;
      out = (up - down) / (2.0 * h);
    };
    auto& l = q.layer(k);
    auto& gl = g.layers[k];
    for (std::size_t i = 0; i < l.weight.size(); ++i) perturb(l.weight.data()[i], nullptr, gl.weight.data()[i]);
    const bool interior = k + 1 < q.depth();
    for (std::size_t i = 0; i < l.forward_bias.size(); ++i) {
      double* twin = tied && interior ? &q.layer(k + 1).backward_bias[i] : nullptr;
      perturb(l.forward_bias[i], twin, gl.forward_bias[i]);
      if (twin) g.layers[k + 1].backward_bias[i] = gl.forward_bias[i];
    }
    if (tied && k > 0) continue;  // a^k for k >= 1 was handled with b^k
    for (std::size_t i = 0; i < l.backward_bias.size(); ++i)
      perturb(l.backward_bias[i], nullptr, gl.backward_bias[i]);
  }
  return g;
}

}  // namespace dcim
