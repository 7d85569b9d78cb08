#include "dcim/network.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dcim {

namespace {

Vector apply_activation(Activation act, const Vector& z) {
  switch (act) {
    case Activation::Tanh: return tanh_act(z);
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::Softmax: return softmax(z);
  }
  throw std::invalid_argument("unknown activation");
}

void check_shape(const LayerParams& l, const LayerSpec& s, std::size_t k) {
  if (l.weight.rows() != s.out_dim || l.weight.cols() != s.in_dim ||
      l.forward_bias.size() != s.out_dim || l.backward_bias.size() != s.in_dim)
    throw std::invalid_argument("Params: layer " + std::to_string(k) + " shape does not match spec");
}

}  // namespace

Activation hidden_activation(Encoding e) noexcept {
  return e == Encoding::PlusMinusOne ? Activation::Tanh : Activation::Sigmoid;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("NetworkSpec: no layers");
  const Activation hidden = hidden_activation(encoding);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const LayerSpec& l = layers[k];
    const std::string where = "NetworkSpec: layer " + std::to_string(k + 1);
    if (l.in_dim == 0 || l.out_dim == 0) throw std::invalid_argument(where + " has a zero dimension");
    if (k > 0 && l.in_dim != layers[k - 1].out_dim)
      throw std::invalid_argument(where + " in_dim does not match previous out_dim");
    const bool last = k + 1 == layers.size();
    if (l.activation == Activation::Softmax) {
      if (!last) throw std::invalid_argument(where + ": Softmax is only allowed on the last layer");
    } else if (l.activation != hidden) {
      throw std::invalid_argument(where + ": activation does not match the encoding");
    }
  }
}

NetworkSpec make_spec(const std::vector<std::size_t>& sizes, Encoding encoding, bool categorical_output) {
  if (sizes.size() < 2) throw std::invalid_argument("make_spec: need at least two layer sizes");
  NetworkSpec spec;
  spec.encoding = encoding;
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    const bool last = k + 1 == sizes.size();
    spec.layers.push_back({sizes[k - 1], sizes[k],
                           last && categorical_output ? Activation::Softmax : hidden_activation(encoding)});
  }
  spec.validate();
  return spec;
}

NetworkSpec parse_arch(std::string_view arch) {
  Encoding encoding = Encoding::PlusMinusOne;
  if (const auto at = arch.find('@'); at != std::string_view::npos) {
    const auto suffix = arch.substr(at + 1);
    if (suffix == "sigmoid") encoding = Encoding::ZeroOne;
    else if (suffix == "tanh") encoding = Encoding::PlusMinusOne;
    else throw std::invalid_argument("arch: unknown suffix '@" + std::string(suffix) + "'");
    arch = arch.substr(0, at);
  }
  std::vector<std::size_t> sizes;
  std::size_t pos = 0;
  while (pos <= arch.size()) {
    const auto dash = arch.find('-', pos);
    const auto token = arch.substr(pos, dash == std::string_view::npos ? std::string_view::npos : dash - pos);
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size() || value == 0)
      throw std::invalid_argument("arch: bad layer size '" + std::string(token) + "'");
    sizes.push_back(value);
    if (dash == std::string_view::npos) break;
    pos = dash + 1;
  }
  return make_spec(sizes, encoding, true);
}

std::string format_arch(const NetworkSpec& spec) {
  std::string out = std::to_string(spec.input_dim());
  for (const auto& l : spec.layers) out += "-" + std::to_string(l.out_dim);
  if (spec.encoding == Encoding::ZeroOne) out += "@sigmoid";
  return out;
}

Params::Params(NetworkSpec spec, std::vector<LayerParams> layers, bool tie_interior_biases)
    : spec_(std::move(spec)), layers_(std::move(layers)), tie_interior_biases_(tie_interior_biases) {
  spec_.validate();
  if (layers_.size() != spec_.depth()) throw std::invalid_argument("Params: layer count does not match spec");
  for (std::size_t k = 0; k < layers_.size(); ++k) check_shape(layers_[k], spec_.layers[k], k + 1);
  enforce_ties();
}

void Params::enforce_ties() {
  if (!tie_interior_biases_) return;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) layers_[k + 1].backward_bias = layers_[k].forward_bias;
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.forward_bias.size() + l.backward_bias.size();
  return n;
}

Params init_params(const NetworkSpec& spec, std::uint64_t seed, InitScheme scheme, bool tie_interior_biases) {
  spec.validate();
  Rng rng(seed);
  std::vector<LayerParams> layers;
  for (const auto& s : spec.layers) {
    LayerParams l{Matrix(s.out_dim, s.in_dim), Vector(s.out_dim), Vector(s.in_dim)};
    if (scheme == InitScheme::GlorotUniform) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
      for (double& w : l.weight.span()) w = rng.uniform(-bound, bound);
    }
    layers.push_back(std::move(l));
  }
  return Params(spec, std::move(layers), tie_interior_biases);
}

Vector encode_pixels(const Vector& pixels, Encoding e) {
  if (e == Encoding::ZeroOne) return pixels;
  Vector out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = 2.0 * pixels[i] - 1.0;
  return out;
}

Vector decode_pixels(const Vector& means, Encoding e) {
  if (e == Encoding::ZeroOne) return means;
  Vector out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) out[i] = 0.5 * (means[i] + 1.0);
  return out;
}

MeanStack forward_means(const Params& p, const Vector& x0) {
  const auto& spec = p.spec();
  if (x0.size() != spec.input_dim())
    throw std::invalid_argument("forward_means: input length " + std::to_string(x0.size()) +
                                " does not match network input " + std::to_string(spec.input_dim()));
  MeanStack stack{{x0}, Direction::Forward};
  stack.means.reserve(p.depth() + 1);
  for (std::size_t k = 0; k < p.depth(); ++k) {
    const auto& l = p.layer(k);
    stack.means.push_back(
        apply_activation(spec.layers[k].activation, add(mat_vec(l.weight, stack.means.back()), l.forward_bias)));
  }
  return stack;
}

MeanStack backward_means_from(const Params& p, std::size_t level, const Vector& x) {
  if (level == 0 || level > p.depth()) throw std::invalid_argument("backward_means_from: level out of range");
  const auto& spec = p.spec();
  if (x.size() != spec.layers[level - 1].out_dim)
    throw std::invalid_argument("backward_means: state length " + std::to_string(x.size()) +
                                " does not match layer " + std::to_string(level) + " size");
  const Activation hidden = hidden_activation(spec.encoding);
  MeanStack stack{std::vector<Vector>(p.depth() + 1), Direction::Backward};
  stack.means[level] = x;
  for (std::size_t k = level; k-- > 0;) {
    const auto& l = p.layer(k);  // W^{k+1}
    stack.means[k] = apply_activation(hidden, add(mat_t_vec(l.weight, stack.means[k + 1]), l.backward_bias));
  }
  return stack;
}

MeanStack backward_means(const Params& p, const Vector& xd) { return backward_means_from(p, p.depth(), xd); }

Vector sample_layer(const Vector& means, Encoding e, Rng& rng) {
  Vector out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double u = rng.uniform();
    if (e == Encoding::ZeroOne) out[i] = u < means[i] ? 1.0 : 0.0;
    else out[i] = u < 0.5 * (1.0 + means[i]) ? 1.0 : -1.0;
  }
  return out;
}

ReverseSample sample_reverse(const Params& p, std::size_t cls, Rng& rng, SampleMode mode) {
  const auto& spec = p.spec();
  if (!spec.categorical_output()) throw std::invalid_argument("sample_reverse: top layer is not categorical");
  if (cls >= spec.output_dim())
    throw std::invalid_argument("sample_reverse: class " + std::to_string(cls) + " out of range");
  const Activation hidden = hidden_activation(spec.encoding);
  Vector state(spec.output_dim());
  state[cls] = 1.0;
  Vector means;
  for (std::size_t k = p.depth(); k-- > 0;) {
    const auto& l = p.layer(k);
    means = apply_activation(hidden, add(mat_t_vec(l.weight, state), l.backward_bias));
    const bool sample = mode == SampleMode::SampleAll || k + 1 == p.depth();
    state = sample ? sample_layer(means, spec.encoding, rng) : means;
  }
  return {std::move(state), std::move(means)};
}

Classification classify(const Params& p, const Vector& x0) {
  const Vector top = forward_means(p, x0).means.back();
  Classification best{0, top[0]};
  for (std::size_t i = 1; i < top.size(); ++i)
    if (top[i] > best.prob) best = {i, top[i]};
  return best;
}

}  // namespace dcim
