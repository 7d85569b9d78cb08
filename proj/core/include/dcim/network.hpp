#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcim/math.hpp"
#include "dcim/rng.hpp"

namespace dcim {

enum class Activation : std::uint32_t { Tanh = 0, Sigmoid = 1, Softmax = 2 };

/// State encoding of the binary units. PlusMinusOne pairs with Tanh hidden
/// layers, ZeroOne with Sigmoid hidden layers.
enum class Encoding : std::uint32_t { PlusMinusOne = 0, ZeroOne = 1 };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::Tanh;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Encoding encoding = Encoding::PlusMinusOne;

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t input_dim() const { return layers.front().in_dim; }
  std::size_t output_dim() const { return layers.back().out_dim; }
  bool categorical_output() const { return layers.back().activation == Activation::Softmax; }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Activation of binary hidden units under an encoding.
Activation hidden_activation(Encoding e) noexcept;

/// Builds a spec from layer sizes: hidden layers use the encoding's binary
/// activation, the last layer is Softmax unless `categorical_output` is false.
NetworkSpec make_spec(const std::vector<std::size_t>& sizes, Encoding encoding,
                      bool categorical_output = true);

/// Parses "784-512-512-10" (Tanh hidden, Softmax output) and
/// "784-512-512-10@sigmoid" (ZeroOne encoding, Sigmoid hidden).
NetworkSpec parse_arch(std::string_view arch);
std::string format_arch(const NetworkSpec& spec);

/// Parameters of layer k: weight W^k (out x in), forward bias b^k (out) and
/// backward bias a^{k-1} (in). The reverse model applies W^k transposed;
/// there is no separate reverse weight.
struct LayerParams {
  Matrix weight;
  Vector forward_bias;
  Vector backward_bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

class Params {
 public:
  Params() = default;
  /// Takes ownership of per-layer parameters; shapes are checked against the
  /// spec. With `tie_interior_biases` the forward bias of layer k is copied
  /// into the backward bias of layer k+1 (both are biases of units x^k).
  Params(NetworkSpec spec, std::vector<LayerParams> layers, bool tie_interior_biases = false);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  bool tie_interior_biases() const noexcept { return tie_interior_biases_; }

  /// Layer k is stored at index k-1.
  const LayerParams& layer(std::size_t i) const { return layers_.at(i); }
  LayerParams& layer(std::size_t i) { return layers_.at(i); }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::vector<LayerParams>& layers() noexcept { return layers_; }

  /// Re-establishes b^k == a^k on interior units from the forward biases.
  void enforce_ties();
  std::size_t parameter_count() const;

  friend bool operator==(const Params&, const Params&) = default;

 private:
  NetworkSpec spec_;
  std::vector<LayerParams> layers_;
  bool tie_interior_biases_ = false;
};

enum class InitScheme { GlorotUniform, Zeros };

/// Weights uniform in [-s, s], s = sqrt(6 / (in + out)); biases zero.
Params init_params(const NetworkSpec& spec, std::uint64_t seed,
                   InitScheme scheme = InitScheme::GlorotUniform, bool tie_interior_biases = false);

enum class Direction { Forward, Backward };

/// Per-layer expectations, index 0 = input layer, index d = top layer.
struct MeanStack {
  std::vector<Vector> means;
  Direction direction = Direction::Forward;
};

/// Maps pixel intensities in [0, 1] into the encoding's state range and back.
Vector encode_pixels(const Vector& pixels, Encoding e);
Vector decode_pixels(const Vector& means, Encoding e);

/// Forward moment propagation: means[k] = act_k(W^k means[k-1] + b^k).
/// `x0` is in the network encoding.
MeanStack forward_means(const Params& p, const Vector& x0);

/// Reverse moment propagation from the top layer state `xd` (a class
/// distribution when the top layer is Softmax, otherwise encoded unit means).
MeanStack backward_means(const Params& p, const Vector& xd);

/// Reverse propagation that starts at layer `level` with state `x`, running
/// down to the input layer. means[k] for k > level are left empty.
MeanStack backward_means_from(const Params& p, std::size_t level, const Vector& x);

/// Independent per-unit draw with the given means.
Vector sample_layer(const Vector& means, Encoding e, Rng& rng);

enum class SampleMode { SampleAll, SampleTopThenMeans };

struct ReverseSample {
  /// Returned layer-0 state: a sample under SampleAll, means under
  /// SampleTopThenMeans. Encoded like the network input.
  Vector image;
  /// Layer-0 conditional means that produced `image`.
  Vector image_means;
};

/// Ancestral sampling from the reverse model conditioned on a class.
ReverseSample sample_reverse(const Params& p, std::size_t cls, Rng& rng, SampleMode mode);

struct Classification {
  std::size_t cls = 0;
  double prob = 0.0;
};

/// Argmax of the forward top layer, ties to the lowest index.
Classification classify(const Params& p, const Vector& x0);

}  // namespace dcim
