#include <algorithm>
#include <cmath>
#include <limits>

#include "dcim/oracle.hpp"

namespace dcim::oracle {

namespace {

PropertyResult at_most(std::string name, double measured, double threshold) {
  return {std::move(name), measured, threshold, true, measured <= threshold};
}

PropertyResult above(std::string name, double measured, double threshold) {
  return {std::move(name), measured, threshold, false, measured > threshold};
}

Config random_config(const std::vector<std::size_t>& cards, Rng& rng) {
  Config x(cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) x[i] = rng.below(cards[i]);
  return x;
}

std::vector<std::size_t> random_cards(Rng& rng, std::size_t max_vars, std::size_t max_card) {
  std::vector<std::size_t> cards(1 + rng.below(max_vars));
  for (auto& c : cards) c = 2 + rng.below(max_card - 1);
  return cards;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<PropertyResult> cim_suite(Rng& rng) {
  double identity = 0.0, point = 0.0, zero = 0.0, norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_cards(rng, 3, 3);
    const auto out = random_cards(rng, 3, 3);
    const GeneralCim c = GeneralCim::random(in, out, rng, 2.0);
    const Config x = random_config(in, rng);
    const auto cond = exact_conditional(c, x);
    identity = std::max(identity, cond.identity_error);
    const ExactDist px = point_mass(in, x);
    point = std::max(point, max_abs_diff(exact_marginal(c, px).probs, approx_marginal(c, px).probs));

    ExactDist noisy = spread_around(in, random_config(in, rng), rng.uniform(0.0, 0.5));
    norm = std::max({norm, std::abs(exact_marginal(c, noisy).total() - 1.0),
                     std::abs(approx_marginal(c, noisy).total() - 1.0)});

    const auto z = exact_conditional(GeneralCim::zeros(in, out), x).joint;
    const double uniform = 1.0 / static_cast<double>(z.probs.size());
    for (double p : z.probs) zero = std::max(zero, std::abs(p - uniform));
  }
  return {at_most("cim.conditional_factorizes", identity, 1e-12),
          at_most("cim.point_mass_approx_exact", point, 1e-12),
          at_most("cim.marginals_normalized", norm, 1e-12),
          at_most("cim.zero_tables_uniform", zero, 1e-15)};
}

std::vector<PropertyResult> dcim_suite(Rng& rng) {
  double single = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n0 = 1 + rng.below(6);
    const std::size_t n1 = 1 + rng.below(6);
    const Encoding e = rng.below(2) ? Encoding::PlusMinusOne : Encoding::ZeroOne;
    const bool categorical = rng.below(2) && n1 >= 2;
    const TinyDcim m(random_params(make_spec({n0, n1}, e, categorical), rng, 1.0));
    const Config x0 = random_config(m.layer_cards(0), rng);
    const auto exact = exact_forward_posterior(m, x0);
    const auto approx = approx_forward_posterior(m, x0);
    const Vector fwd = forward_means(m.params(), m.layer_values(0, x0)).means[1];
    single = std::max({single, max_abs_diff(exact.top.probs, approx.probs),
                       max_abs_diff(exact.layer_means[0].values(), fwd.values())});
  }

  // Seeded 2-2-2 tanh network: error of the moment recursion at depth 2.
  Rng net_rng(Rng::stream(rng.next_u64(), 0));
  const TinyDcim deep(random_params(make_spec({2, 2, 2}, Encoding::PlusMinusOne, false), net_rng, 1.0));
  double kl = 0.0;
  for (std::size_t idx = 0; idx < 4; ++idx) {
    const Config x0 = ConfigSpace({2, 2}).decode(idx);
    kl = std::max(kl, kl_divergence(exact_forward_posterior(deep, x0).top, approx_forward_posterior(deep, x0)));
  }

  const TinyDcim zero(init_params(make_spec({3, 3, 3}, Encoding::PlusMinusOne, false), 0, InitScheme::Zeros));
  const auto zp = exact_forward_posterior(zero, {0, 1, 1});
  double zero_err = std::abs(zp.top.probs[0] - 0.125) + max_abs_diff(zp.top.probs, approx_forward_posterior(zero, {0, 1, 1}).probs);
  for (const auto& mean : zp.layer_means)
    for (double v : mean) zero_err = std::max(zero_err, std::abs(v));

  return {at_most("dcim.single_layer_forward_exact", single, 1e-12),
          at_most("dcim.depth2_forward_kl", kl, 0.05),
          at_most("dcim.zero_weights_uniform", zero_err, 1e-15)};
}

std::vector<PropertyResult> rbm_suite(Rng& rng) {
  double fwd = 0.0, bwd = 0.0, obj = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n0 = trial == 0 ? 3 : 1 + rng.below(5);
    const std::size_t n1 = trial == 0 ? 4 : 1 + rng.below(5);
    const Params p = random_params(make_spec({n0, n1}, Encoding::ZeroOne, false), rng, 1.0);
    const auto rep = rbm_check(p, rng);
    fwd = std::max(fwd, rep.forward_error);
    bwd = std::max(bwd, rep.backward_error);
    obj = std::max(obj, rep.objective_error);
  }
  const Params z = init_params(make_spec({3, 4}, Encoding::ZeroOne, false), 0, InitScheme::Zeros);
  const double zero_obj = std::abs(rbm_check(z, rng).objective_value - 7.0 * std::log(2.0));
  return {at_most("rbm.forward_conditional", fwd, 1e-10),
          at_most("rbm.backward_conditional", bwd, 1e-10),
          at_most("rbm.objective_matches_pair_nll", obj, 1e-10),
          at_most("rbm.zero_weights_objective", zero_obj, 1e-10)};
}

std::vector<PropertyResult> independence_suite(Rng& rng) {
  // Witness family: seeded 2-2-2 tanh networks under a uniform input.
  double witness = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const TinyDcim m(random_params(make_spec({2, 2, 2}, Encoding::PlusMinusOne, false), rng, 2.0));
    witness = std::max({witness, reverse_independence_gap(m, 0).max_gap, reverse_independence_gap(m, 1).max_gap});
  }
  const TinyDcim zero(init_params(make_spec({2, 3, 2}, Encoding::PlusMinusOne, false), 0, InitScheme::Zeros));
  const double zero_gap = std::max(reverse_independence_gap(zero, 0).max_gap, reverse_independence_gap(zero, 1).max_gap);
  double rbm_gap = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Encoding e = trial % 2 ? Encoding::ZeroOne : Encoding::PlusMinusOne;
    const TinyDcim m(random_params(make_spec({3, 3}, e, false), rng, 1.0));
    rbm_gap = std::max(rbm_gap, reverse_independence_gap(m, 0, Completion::RbmConsistent).max_gap);
  }
  return {above("independence.witness_gap", witness, 1e-6),
          at_most("independence.zero_weights_gap", zero_gap, 1e-12),
          at_most("independence.single_layer_rbm_gap", rbm_gap, 1e-12)};
}

std::vector<PropertyResult> decay_suite(Rng& rng) {
  std::vector<double> spreads;
  for (int k = 0; k <= 8; ++k) spreads.push_back(std::pow(10.0, -4.0 + 0.25 * k));
  double point = 0.0, min_slope = std::numeric_limits<double>::infinity(), zero = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const GeneralCim c = GeneralCim::random({2, 2, 2}, {2, 2}, rng, 1.0);
    const Config center = random_config(c.input_cards, rng);
    point = std::max(point, concentration_decay(c, center, {0.0}).kl[0]);
    min_slope = std::min(min_slope, concentration_decay(c, center, spreads).slope);
    for (double kl : concentration_decay(GeneralCim::zeros({2, 2, 2}, {2, 2}), center, spreads).kl)
      zero = std::max(zero, kl);
  }
  return {at_most("decay.point_mass_kl", point, 1e-12),
          above("decay.loglog_slope", min_slope, 1.9),
          at_most("decay.zero_tables_kl", zero, 1e-15)};
}

}  // namespace

std::vector<PropertyResult> run_suite(Suite suite, std::uint64_t seed) {
  Rng rng(seed);
  switch (suite) {
    case Suite::Cim: return cim_suite(rng);
    case Suite::Dcim: return dcim_suite(rng);
    case Suite::Rbm: return rbm_suite(rng);
    case Suite::Independence: return independence_suite(rng);
    case Suite::Decay: return decay_suite(rng);
  }
  return {};
}

}  // namespace dcim::oracle
