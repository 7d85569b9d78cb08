// Batched forward/reverse passes and reverse-mode gradients over row-major
// minibatches, backed by Eigen products.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <type_traits>

#include "dcim/objectives.hpp"

namespace dcim {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;
template <typename S>
using ConstVecMap = Eigen::Map<const RowVec<S>>;

/// Read-only weights in engine precision. Double maps the Params storage
/// directly; Single keeps converted copies.
template <typename S>
class WeightView {
 public:
  explicit WeightView(const Params& p) {
    const std::size_t d = p.depth();
    if constexpr (!std::is_same_v<S, double>) {
      owned_w_.reserve(d);
      owned_b_.reserve(d);
      owned_a_.reserve(d);
    }
    for (const auto& l : p.layers()) {
      shapes_.push_back({l.weight.rows(), l.weight.cols()});
      if constexpr (std::is_same_v<S, double>) {
        w_.push_back(l.weight.data());
        b_.push_back(l.forward_bias.data());
        a_.push_back(l.backward_bias.data());
      } else {
        owned_w_.push_back(ConstMatMap<double>(l.weight.data(), l.weight.rows(), l.weight.cols()).cast<S>());
        owned_b_.push_back(ConstVecMap<double>(l.forward_bias.data(), l.forward_bias.size()).cast<S>());
        owned_a_.push_back(ConstVecMap<double>(l.backward_bias.data(), l.backward_bias.size()).cast<S>());
        w_.push_back(owned_w_.back().data());
        b_.push_back(owned_b_.back().data());
        a_.push_back(owned_a_.back().data());
      }
    }
  }

  ConstMatMap<S> weight(std::size_t k) const {
    return {w_[k], static_cast<Eigen::Index>(shapes_[k].first), static_cast<Eigen::Index>(shapes_[k].second)};
  }
  ConstVecMap<S> forward_bias(std::size_t k) const {
    return {b_[k], static_cast<Eigen::Index>(shapes_[k].first)};
  }
  ConstVecMap<S> backward_bias(std::size_t k) const {
    return {a_[k], static_cast<Eigen::Index>(shapes_[k].second)};
  }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> shapes_;
  std::vector<const S*> w_, b_, a_;
  std::vector<RowMat<S>> owned_w_;
  std::vector<RowVec<S>> owned_b_, owned_a_;
};

template <typename S>
void activate(Activation act, RowMat<S>& z) {
  if (act == Activation::Tanh) {
    z = z.array().tanh();
  } else {
    // Same branch structure as the scalar sigmoid.
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<S>(sigmoid(static_cast<double>(z.data()[i])));
  }
}

/// Derivative of the hidden activation expressed through its output.
template <typename S>
auto activation_slope(Activation act, const RowMat<S>& m) {
  return act == Activation::Tanh ? (S(1) - m.array().square()).matrix().eval()
                                 : (m.array() * (S(1) - m.array())).matrix().eval();
}

/// Summed clamped BCE of decoded means against pixel targets and its
/// gradient with respect to the pre-activation of the means.
template <typename S>
double bce_rows(const RowMat<S>& means, const RowMat<S>& targets, Encoding e, RowMat<S>* grad) {
  const S clamp_lo = static_cast<S>(kProbabilityClamp);
  const S clamp_hi = static_cast<S>(1.0 - kProbabilityClamp);
  const bool pm = e == Encoding::PlusMinusOne;
  const S scale = pm ? S(2) : S(1);
  if (grad) grad->resize(means.rows(), means.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    const S m = means.data()[i];
    const S p = pm ? S(0.5) * (m + S(1)) : m;
    const S t = targets.data()[i];
    const S pc = std::clamp(p, clamp_lo, clamp_hi);
    loss -= static_cast<double>(t * std::log(pc) + (S(1) - t) * std::log1p(-pc));
    if (grad) grad->data()[i] = (p < clamp_lo || p > clamp_hi) ? S(0) : scale * (p - t);
  }
  return loss;
}

template <typename S>
struct ChunkResult {
  double forward_sum = 0.0;
  double reverse_sum = 0.0;
  double correct = 0.0;
  std::vector<RowMat<S>> dw_forward, dw_reverse;
  std::vector<RowVec<S>> db, da;
};

struct PassSettings {
  Objective kind = Objective::Bidirectional;
  bool forward_grads = false;
  bool reverse_grads = false;
  std::uint64_t sample_base = 0;
};

template <typename S>
ChunkResult<S> run_chunk(const Params& p, const WeightView<S>& w, const LabeledBatch& batch, std::size_t r0,
                         std::size_t r1, const PassSettings& ps) {
  const auto& spec = p.spec();
  const std::size_t d = p.depth();
  const auto n = static_cast<Eigen::Index>(r1 - r0);
  const Encoding enc = spec.encoding;
  const Activation hidden = hidden_activation(enc);
  const bool pm = enc == Encoding::PlusMinusOne;

  ChunkResult<S> out;
  const RowMat<S> pixels =
      ConstMatMap<double>(batch.inputs.data() + r0 * batch.inputs.cols(), n, batch.inputs.cols()).template cast<S>();
  const RowMat<S> targets =
      ConstMatMap<double>(batch.targets.data() + r0 * batch.targets.cols(), n, batch.targets.cols())
          .template cast<S>();

  // Forward pass.
  std::vector<RowMat<S>> m(d + 1);
  m[0] = pm ? (S(2) * pixels.array() - S(1)).matrix().eval() : pixels;
  for (std::size_t k = 0; k < d; ++k) {
    m[k + 1].noalias() = m[k] * w.weight(k).transpose();
    m[k + 1].rowwise() += w.forward_bias(k);
    if (spec.layers[k].activation != Activation::Softmax) activate<S>(spec.layers[k].activation, m[k + 1]);
  }

  // Forward term: m[d] holds logits when the top layer is categorical.
  RowMat<S> delta;
  if (spec.categorical_output()) {
    RowMat<S>& z = m[d];
    delta.resize(n, z.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const S mx = z.row(r).maxCoeff();
      const S lse = mx + std::log((z.row(r).array() - mx).exp().sum());
      const S mass = targets.row(r).sum();
      Eigen::Index best = 0;
      S best_p = -1;
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const S logp = z(r, c) - lse;
        const S prob = std::exp(logp);
        out.forward_sum -= static_cast<double>(targets(r, c) * logp);
        delta(r, c) = prob * mass - targets(r, c);
        if (prob > best_p) {
          best_p = prob;
          best = c;
        }
      }
      out.correct += static_cast<std::size_t>(best) == batch.labels[r0 + static_cast<std::size_t>(r)] ? 1.0 : 0.0;
    }
  } else {
    out.forward_sum = bce_rows<S>(m[d], targets, enc, ps.forward_grads ? &delta : nullptr);
    for (Eigen::Index r = 0; r < n; ++r) {
      double agree = 0.0;
      for (Eigen::Index j = 0; j < m[d].cols(); ++j) {
        const S prob = pm ? S(0.5) * (m[d](r, j) + S(1)) : m[d](r, j);
        agree += (prob >= S(0.5)) == (targets(r, j) >= S(0.5)) ? 1.0 : 0.0;
      }
      out.correct += agree / static_cast<double>(m[d].cols());
    }
  }

  if (ps.forward_grads) {
    out.dw_forward.resize(d);
    out.db.resize(d);
    for (std::size_t k = d; k-- > 0;) {
      out.dw_forward[k].noalias() = delta.transpose() * m[k];
      out.db[k] = delta.colwise().sum();
      if (k > 0) {
        RowMat<S> g = delta * w.weight(k);
        delta = g.cwiseProduct(activation_slope<S>(hidden, m[k]));
      }
    }
  }

  // Reverse pass from the label layer, or from a sample of layer d-1.
  const bool sampled = ps.kind == Objective::SampledHidden;
  const std::size_t level = sampled ? d - 1 : d;
  std::vector<RowMat<S>> rev(level + 1);
  if (sampled) {
    rev[level].resize(n, m[level].cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      Rng stream = Rng::stream(ps.sample_base, r0 + static_cast<std::size_t>(r));
      for (Eigen::Index j = 0; j < m[level].cols(); ++j) {
        const double mean = static_cast<double>(m[level](r, j));
        const double u = stream.uniform();
        rev[level](r, j) = pm ? (u < 0.5 * (1.0 + mean) ? S(1) : S(-1)) : (u < mean ? S(1) : S(0));
      }
    }
  } else if (spec.categorical_output() || !pm) {
    rev[level] = targets;
  } else {
    rev[level] = (S(2) * targets.array() - S(1)).matrix();
  }
  for (std::size_t k = level; k-- > 0;) {
    rev[k].noalias() = rev[k + 1] * w.weight(k);
    rev[k].rowwise() += w.backward_bias(k);
    activate<S>(hidden, rev[k]);
  }
  RowMat<S> eps;
  out.reverse_sum = bce_rows<S>(rev[0], pixels, enc, ps.reverse_grads ? &eps : nullptr);

  if (ps.reverse_grads) {
    out.dw_reverse.resize(d);
    out.da.resize(d);
    for (std::size_t k = 0; k < level; ++k) {
      out.dw_reverse[k].noalias() = rev[k + 1].transpose() * eps;
      out.da[k] = eps.colwise().sum();
      if (k + 1 < level) {
        RowMat<S> g = eps * w.weight(k).transpose();
        eps = g.cwiseProduct(activation_slope<S>(hidden, rev[k + 1]));
      }
    }
  }
  return out;
}

template <typename S>
void accumulate(Matrix& dst, const RowMat<S>& src) {
  if (src.size() == 0) return;
  Eigen::Map<RowMat<double>>(dst.data(), static_cast<Eigen::Index>(dst.rows()), static_cast<Eigen::Index>(dst.cols())) +=
      src.template cast<double>();
}

template <typename S>
void accumulate(Vector& dst, const RowVec<S>& src) {
  if (src.size() == 0) return;
  Eigen::Map<RowVec<double>>(dst.data(), static_cast<Eigen::Index>(dst.size())) += src.template cast<double>();
}

struct PassTotals {
  double forward_sum = 0.0;
  double reverse_sum = 0.0;
  double correct = 0.0;
  TermGradients grads;
};

template <typename S>
PassTotals run_batch(const Params& p, const LabeledBatch& batch, const PassSettings& ps, std::size_t threads) {
  const WeightView<S> w(p);
  const std::size_t n = batch.size();
  const std::size_t chunks = (n + kEngineChunkRows - 1) / kEngineChunkRows;
  threads = std::max<std::size_t>(1, std::min(threads, chunks));

  PassTotals totals;
  if (ps.forward_grads || ps.reverse_grads) {
    totals.grads.forward = Gradients::zeros_like(p);
    totals.grads.reverse = Gradients::zeros_like(p);
  }
  auto chunk_range = [&](std::size_t c) {
    return std::pair{c * kEngineChunkRows, std::min(n, (c + 1) * kEngineChunkRows)};
  };
  auto reduce = [&](const ChunkResult<S>& r) {
    totals.forward_sum += r.forward_sum;
    totals.reverse_sum += r.reverse_sum;
    totals.correct += r.correct;
    for (std::size_t k = 0; k < p.depth(); ++k) {
      if (ps.forward_grads) {
        accumulate(totals.grads.forward.layers[k].weight, r.dw_forward[k]);
        accumulate(totals.grads.forward.layers[k].forward_bias, r.db[k]);
      }
      if (ps.reverse_grads && k < r.dw_reverse.size()) {
        accumulate(totals.grads.reverse.layers[k].weight, r.dw_reverse[k]);
        accumulate(totals.grads.reverse.layers[k].backward_bias, r.da[k]);
      }
    }
  };

  // Chunks are processed in groups of `threads` and reduced in chunk order.
  std::vector<ChunkResult<S>> group(threads);
  for (std::size_t first = 0; first < chunks; first += threads) {
    const std::size_t count = std::min(threads, chunks - first);
    if (count == 1) {
      const auto [r0, r1] = chunk_range(first);
      group[0] = run_chunk<S>(p, w, batch, r0, r1, ps);
    } else {
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < count; ++t)
        workers.emplace_back([&, t] {
          const auto [r0, r1] = chunk_range(first + t);
          group[t] = run_chunk<S>(p, w, batch, r0, r1, ps);
        });
      for (auto& th : workers) th.join();
    }
    for (std::size_t t = 0; t < count; ++t) reduce(group[t]);
  }
  return totals;
}

void check_engine_batch(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj) {
  const auto& spec = p.spec();
  if (batch.size() == 0) throw std::invalid_argument("objective: empty batch");
  if (batch.inputs.cols() != spec.input_dim() || batch.targets.cols() != spec.output_dim() ||
      batch.targets.rows() != batch.size() || batch.labels.size() != batch.size())
    throw std::invalid_argument("objective: batch shape does not match network");
  if (spec.categorical_output())
    for (std::size_t l : batch.labels)
      if (l >= spec.output_dim()) throw std::invalid_argument("objective: label out of range");
  if (obj.kind == Objective::SampledHidden && p.depth() < 2)
    throw std::invalid_argument("SampledHidden objective needs at least two layers");
}

PassTotals run_dispatch(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng,
                        const EngineOptions& opts, bool grads) {
  check_engine_batch(p, batch, obj);
  PassSettings ps;
  ps.kind = obj.kind;
  ps.forward_grads = grads;
  ps.reverse_grads = grads && obj.kind != Objective::ForwardOnly;
  if (obj.kind == Objective::SampledHidden) ps.sample_base = rng.next_u64();
  return opts.precision == Precision::Single ? run_batch<float>(p, batch, ps, opts.threads)
                                             : run_batch<double>(p, batch, ps, opts.threads);
}

LossReport make_report(const Params& p, const PassTotals& t, std::size_t n, const ObjectiveSpec& obj) {
  const double inv = 1.0 / static_cast<double>(n);
  LossReport rep;
  rep.forward_nll = t.forward_sum * inv;
  rep.reverse_nll = t.reverse_sum * inv;
  rep.reverse_nll_per_unit = rep.reverse_nll / static_cast<double>(p.spec().input_dim());
  rep.total = rep.forward_nll + effective_lambda(obj) * rep.reverse_nll;
  rep.accuracy = t.correct * inv;
  return rep;
}

void scale(Gradients& g, double s) {
  g.for_each([s](std::size_t, int, std::size_t, double& v) { v *= s; });
}

}  // namespace

TermGradients grad_terms(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng,
                         const EngineOptions& opts) {
  PassTotals t = run_dispatch(p, batch, obj, rng, opts, true);
  const double inv = 1.0 / static_cast<double>(batch.size());
  scale(t.grads.forward, inv);
  scale(t.grads.reverse, inv);
  return std::move(t.grads);
}

std::pair<LossReport, Gradients> grad(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj,
                                      Rng& rng, const EngineOptions& opts) {
  PassTotals t = run_dispatch(p, batch, obj, rng, opts, true);
  const std::size_t n = batch.size();
  const double inv = 1.0 / static_cast<double>(n);
  const double lambda = effective_lambda(obj);
  Gradients g = std::move(t.grads.forward);
  const Gradients& r = t.grads.reverse;
  for (std::size_t k = 0; k < g.layers.size(); ++k) {
    auto& gl = g.layers[k];
    const auto& rl = r.layers[k];
    for (std::size_t i = 0; i < gl.weight.size(); ++i)
      gl.weight.data()[i] = (gl.weight.data()[i] + lambda * rl.weight.data()[i]) * inv;
    for (std::size_t i = 0; i < gl.forward_bias.size(); ++i) gl.forward_bias[i] *= inv;
    for (std::size_t i = 0; i < gl.backward_bias.size(); ++i) gl.backward_bias[i] = lambda * rl.backward_bias[i] * inv;
  }
  if (p.tie_interior_biases()) {
    for (std::size_t k = 0; k + 1 < g.layers.size(); ++k) {
      auto& b = g.layers[k].forward_bias;
      auto& a = g.layers[k + 1].backward_bias;
      for (std::size_t i = 0; i < b.size(); ++i) a[i] = b[i] = b[i] + a[i];
    }
  }
  return {make_report(p, t, n, obj), std::move(g)};
}

LossReport evaluate(const Params& p, const LabeledBatch& batch, const ObjectiveSpec& obj, Rng& rng,
                    const EngineOptions& opts) {
  EngineOptions eval_opts = opts;
  eval_opts.precision = Precision::Double;
  return make_report(p, run_dispatch(p, batch, obj, rng, eval_opts, false), batch.size(), obj);
}

}  // namespace dcim
