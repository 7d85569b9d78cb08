#include "dcim/optim.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace dcim {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be nonnegative");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: Adam betas must be in [0,1)");
  if (!(eps_adam > 0.0)) throw std::invalid_argument("TrainConfig: Adam epsilon must be positive");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (threads == 0) throw std::invalid_argument("TrainConfig: threads must be positive");
}

OptimState OptimState::zeros_like(const Params& p) {
  return {Gradients::zeros_like(p), Gradients::zeros_like(p), 0};
}

namespace {

void update(std::span<double> theta, std::span<const double> g, std::span<double> m, std::span<double> v,
            const TrainConfig& cfg, double bias1, double bias2) {
  if (theta.size() != g.size() || theta.size() != m.size() || theta.size() != v.size())
    throw std::invalid_argument("step: gradient shape does not match parameters");
  switch (cfg.optimizer) {
    case Optimizer::Sgd:
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.lr * g[i];
      break;
    case Optimizer::SgdMomentum:
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg.momentum * m[i] + g[i];
        theta[i] -= cfg.lr * m[i];
      }
      break;
    case Optimizer::Adam:
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps_adam);
      }
      break;
  }
}

}  // namespace

void step(Params& p, const Gradients& g, OptimState& s, const TrainConfig& cfg) {
  if (g.layers.size() != p.depth() || s.first.layers.size() != p.depth())
    throw std::invalid_argument("step: layer count mismatch");
  ++s.steps;
  const double t = static_cast<double>(s.steps);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < p.depth(); ++k) {
    auto& l = p.layer(k);
    const auto& gl = g.layers[k];
    auto& m = s.first.layers[k];
    auto& v = s.second.layers[k];
    update(l.weight.span(), gl.weight.span(), m.weight.span(), v.weight.span(), cfg, bias1, bias2);
    update(l.forward_bias.span(), gl.forward_bias.span(), m.forward_bias.span(), v.forward_bias.span(), cfg, bias1,
           bias2);
    update(l.backward_bias.span(), gl.backward_bias.span(), m.backward_bias.span(), v.backward_bias.span(), cfg,
           bias1, bias2);
  }
  p.enforce_ties();
}

}  // namespace dcim
