#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcim/network.hpp"
#include "dcim/rng.hpp"

namespace dcim::oracle {

/// Largest configuration space any exact computation will enumerate.
inline constexpr std::size_t kEnumerationBound = std::size_t{1} << 20;

/// A configuration of discrete variables, one state index per variable.
using Config = std::vector<std::size_t>;

/// Mixed-radix enumeration of configurations; variable 0 varies fastest.
class ConfigSpace {
 public:
  explicit ConfigSpace(std::vector<std::size_t> cards);

  const std::vector<std::size_t>& cards() const noexcept { return cards_; }
  std::size_t size() const noexcept { return size_; }
  Config decode(std::size_t index) const;
  std::size_t encode(const Config& x) const;

 private:
  std::vector<std::size_t> cards_;
  std::size_t size_ = 1;
};

/// Probability table over a finite configuration space.
struct ExactDist {
  std::vector<std::size_t> cards;
  std::vector<double> probs;

  double total() const;
  /// Per-variable marginal distributions.
  std::vector<std::vector<double>> marginals() const;
};

ExactDist point_mass(const std::vector<std::size_t>& cards, const Config& x);
ExactDist product_dist(const std::vector<std::vector<double>>& factors);
/// Product distribution keeping each variable at x_i with probability 1 - t
/// and spreading t uniformly over its other states.
ExactDist spread_around(const std::vector<std::size_t>& cards, const Config& x, double t);
/// KL(p || q) in nats; +inf when q vanishes where p does not.
double kl_divergence(const ExactDist& p, const ExactDist& q);
double total_variation(const ExactDist& p, const ExactDist& q);

/// Strongly conditional independent model p(y|x) ∝ exp Σ_ij u_ij(x_i, y_j).
struct GeneralCim {
  std::vector<std::size_t> input_cards;
  std::vector<std::size_t> output_cards;
  /// tables[i * m + j] holds u_ij, row-major by x_i (K_i x L_j).
  std::vector<std::vector<double>> tables;

  static GeneralCim zeros(std::vector<std::size_t> input_cards, std::vector<std::size_t> output_cards);
  static GeneralCim random(std::vector<std::size_t> input_cards, std::vector<std::size_t> output_cards, Rng& rng,
                           double scale = 1.0);

  std::size_t n() const noexcept { return input_cards.size(); }
  std::size_t m() const noexcept { return output_cards.size(); }
  double u(std::size_t i, std::size_t j, std::size_t xi, std::size_t yj) const {
    return tables[i * m() + j][xi * output_cards[j] + yj];
  }
  void validate() const;
};

struct CimConditional {
  std::vector<std::vector<double>> factors;  // p(y_j | x)
  ExactDist joint;                           // p(y | x), normalized directly
  double identity_error = 0.0;               // max |joint - Π factors|
};

CimConditional exact_conditional(const GeneralCim& c, const Config& x);
/// p(y) = Σ_x px(x) p(y|x). Throws ResourceError beyond the enumeration bound.
ExactDist exact_marginal(const GeneralCim& c, const ExactDist& px);
/// p̂(y) ∝ exp Σ_ij Σ_{x_i} p(x_i) u_ij(x_i, y_j) from the marginals of px.
ExactDist approx_marginal(const GeneralCim& c, const ExactDist& px);
/// Per-output factors of approx_marginal.
std::vector<std::vector<double>> approx_factors(const GeneralCim& c, const ExactDist& px);

struct DecayReport {
  std::vector<double> spreads;
  std::vector<double> kl;
  double slope = 0.0;  // least-squares slope of log KL against log spread
};

/// KL(exact || approx) for spread_around(center, t) over the given spreads.
DecayReport concentration_decay(const GeneralCim& c, const Config& center, const std::vector<double>& spreads);
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Value of binary state index s (0 or 1) under an encoding.
double state_value(Encoding e, std::size_t s) noexcept;

/// Small DCIM whose configuration spaces are enumerable. Every layer is
/// binary; the top layer is either binary or one categorical variable.
class TinyDcim {
 public:
  explicit TinyDcim(Params params);

  const Params& params() const noexcept { return params_; }
  std::size_t depth() const noexcept { return params_.depth(); }
  /// Cardinalities of the variables of layer k.
  std::vector<std::size_t> layer_cards(std::size_t k) const;
  /// Transition p(x^k | x^{k-1}) of layer k (1-based) as a GeneralCim.
  const GeneralCim& transition(std::size_t k) const { return transitions_.at(k - 1); }
  /// Encoded layer values (state values, or a one-hot for a categorical layer).
  Vector layer_values(std::size_t k, const Config& x) const;

 private:
  Params params_;
  std::vector<GeneralCim> transitions_;
};

/// Transition of layer k (1-based) of `p` as a GeneralCim.
GeneralCim layer_cim(const Params& p, std::size_t k);

struct ForwardPosterior {
  ExactDist top;                   // exact p(x^d | x^0)
  std::vector<ExactDist> layers;   // exact p(x^k | x^0), k = 1..d (index k-1)
  std::vector<Vector> layer_means; // exact E[x^k | x^0] in the network encoding
};

ForwardPosterior exact_forward_posterior(const TinyDcim& m, const Config& x0);
/// Top-layer distribution implied by the moment-propagation recursion.
ExactDist approx_forward_posterior(const TinyDcim& m, const Config& x0);

enum class Completion {
  Uniform,         // p(x^0) uniform
  RbmConsistent,   // p(x^0) ∝ exp(<a^0, x^0>) Z_1(x^0): the d=1 pair's RBM joint
};

struct GapReport {
  double max_gap = 0.0;   // max over x^{k+1} of TV(p(x^k|x^{k+1}), Π marginals)
  Config worst_state;
};

/// Exact reverse conditional p(x^k | x^{k+1}) of the completed forward model
/// compared with the product of its own per-unit marginals.
GapReport reverse_independence_gap(const TinyDcim& m, std::size_t level, Completion completion = Completion::Uniform);

struct RbmReport {
  double forward_error = 0.0;    // max |forward_means - exact E[x^1|x^0]|
  double backward_error = 0.0;   // max |backward_means - exact E[x^0|x^1]|
  double objective_error = 0.0;  // |Bidirectional objective - exact pair NLL|
  double objective_value = 0.0;
  double exact_value = 0.0;
  std::size_t pairs = 0;
};

/// Compares a single tied layer with the RBM exp(x1ᵀWx0 + bᵀx1 + aᵀx0).
/// The objective is evaluated on every (x^0, x^1) pair, or on
/// `max_pairs` pairs drawn from `rng` when there are more.
RbmReport rbm_check(const Params& layer, Rng& rng, std::size_t max_pairs = 4096);

// Property suites shared by the CLI and the acceptance suite.

enum class Suite { Cim, Dcim, Rbm, Independence, Decay };

struct PropertyResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool upper_bound = true;  // measured <= threshold, else measured > threshold
  bool passed = false;
};

std::vector<PropertyResult> run_suite(Suite suite, std::uint64_t seed);
std::string format_results(const std::vector<PropertyResult>& results);

/// Random Params with weights and biases uniform in [-scale, scale].
Params random_params(const NetworkSpec& spec, Rng& rng, double scale = 1.0, bool tie_interior_biases = false);

}  // namespace dcim::oracle
