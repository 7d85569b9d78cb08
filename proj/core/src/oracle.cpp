#include "dcim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dcim/dataset.hpp"
#include "dcim/errors.hpp"
#include "dcim/objectives.hpp"

namespace dcim::oracle {

namespace {

constexpr std::size_t kWorkBound = std::size_t{1} << 26;

double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

std::vector<double> normalize_log(const std::vector<double>& logw) {
  const double lz = log_sum_exp(logw);
  std::vector<double> out(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) out[i] = std::exp(logw[i] - lz);
  return out;
}

/// Unnormalized log p(y|x) = Σ_i Σ_j u_ij(x_i, y_j) for every y.
std::vector<double> conditional_energies(const GeneralCim& c, const Config& x, const ConfigSpace& ys) {
  std::vector<double> e(ys.size());
  for (std::size_t yi = 0; yi < ys.size(); ++yi) {
    const Config y = ys.decode(yi);
    double s = 0.0;
    for (std::size_t i = 0; i < c.n(); ++i)
      for (std::size_t j = 0; j < c.m(); ++j) s += c.u(i, j, x[i], y[j]);
    e[yi] = s;
  }
  return e;
}

void check_config(const std::vector<std::size_t>& cards, const Config& x) {
  if (x.size() != cards.size()) throw std::invalid_argument("configuration has wrong number of variables");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= cards[i]) throw std::invalid_argument("configuration state out of range");
}

std::size_t binary_one_bits(std::size_t k, const Params& p) {
  const auto& l = p.spec().layers;
  return k == 0 ? l.front().in_dim : l[k - 1].out_dim;
}

}  // namespace

ConfigSpace::ConfigSpace(std::vector<std::size_t> cards) : cards_(std::move(cards)) {
  for (std::size_t c : cards_) {
    if (c == 0) throw std::invalid_argument("ConfigSpace: zero cardinality");
    if (size_ > kEnumerationBound / c)
      throw ResourceError("configuration space exceeds the enumeration bound of " +
                          std::to_string(kEnumerationBound) + " states");
    size_ *= c;
  }
}

Config ConfigSpace::decode(std::size_t index) const {
  Config x(cards_.size());
  for (std::size_t i = 0; i < cards_.size(); ++i) {
    x[i] = index % cards_[i];
    index /= cards_[i];
  }
  return x;
}

std::size_t ConfigSpace::encode(const Config& x) const {
  check_config(cards_, x);
  std::size_t index = 0;
  for (std::size_t i = cards_.size(); i-- > 0;) index = index * cards_[i] + x[i];
  return index;
}

double ExactDist::total() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

std::vector<std::vector<double>> ExactDist::marginals() const {
  const ConfigSpace space(cards);
  std::vector<std::vector<double>> out;
  for (std::size_t c : cards) out.emplace_back(c, 0.0);
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const Config x = space.decode(idx);
    for (std::size_t i = 0; i < x.size(); ++i) out[i][x[i]] += probs[idx];
  }
  return out;
}

ExactDist point_mass(const std::vector<std::size_t>& cards, const Config& x) {
  const ConfigSpace space(cards);
  ExactDist d{cards, std::vector<double>(space.size(), 0.0)};
  d.probs[space.encode(x)] = 1.0;
  return d;
}

ExactDist product_dist(const std::vector<std::vector<double>>& factors) {
  std::vector<std::size_t> cards;
  for (const auto& f : factors) cards.push_back(f.size());
  const ConfigSpace space(cards);
  ExactDist d{cards, std::vector<double>(space.size(), 1.0)};
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const Config x = space.decode(idx);
    double p = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) p *= factors[i][x[i]];
    d.probs[idx] = p;
  }
  return d;
}

ExactDist spread_around(const std::vector<std::size_t>& cards, const Config& x, double t) {
  check_config(cards, x);
  std::vector<std::vector<double>> factors;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    std::vector<double> f(cards[i], cards[i] > 1 ? t / static_cast<double>(cards[i] - 1) : 0.0);
    f[x[i]] = cards[i] > 1 ? 1.0 - t : 1.0;
    factors.push_back(std::move(f));
  }
  return product_dist(factors);
}

double kl_divergence(const ExactDist& p, const ExactDist& q) {
  if (p.probs.size() != q.probs.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    if (p.probs[i] <= 0.0) continue;
    if (q.probs[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p.probs[i] * (std::log(p.probs[i]) - std::log(q.probs[i]));
  }
  return std::max(kl, 0.0);
}

double total_variation(const ExactDist& p, const ExactDist& q) {
  if (p.probs.size() != q.probs.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) s += std::abs(p.probs[i] - q.probs[i]);
  return 0.5 * s;
}

GeneralCim GeneralCim::zeros(std::vector<std::size_t> input_cards, std::vector<std::size_t> output_cards) {
  GeneralCim c{std::move(input_cards), std::move(output_cards), {}};
  for (std::size_t i = 0; i < c.n(); ++i)
    for (std::size_t j = 0; j < c.m(); ++j) c.tables.emplace_back(c.input_cards[i] * c.output_cards[j], 0.0);
  return c;
}

GeneralCim GeneralCim::random(std::vector<std::size_t> input_cards, std::vector<std::size_t> output_cards, Rng& rng,
                              double scale) {
  GeneralCim c = zeros(std::move(input_cards), std::move(output_cards));
  for (auto& t : c.tables)
    for (double& v : t) v = rng.uniform(-scale, scale);
  return c;
}

void GeneralCim::validate() const {
  if (tables.size() != n() * m()) throw std::invalid_argument("GeneralCim: need one table per (i, j) pair");
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = 0; j < m(); ++j)
      if (tables[i * m() + j].size() != input_cards[i] * output_cards[j])
        throw std::invalid_argument("GeneralCim: table shape does not match cardinalities");
}

CimConditional exact_conditional(const GeneralCim& c, const Config& x) {
  c.validate();
  check_config(c.input_cards, x);
  const ConfigSpace ys(c.output_cards);
  CimConditional out;
  out.joint = {c.output_cards, normalize_log(conditional_energies(c, x, ys))};
  for (std::size_t j = 0; j < c.m(); ++j) {
    std::vector<double> s(c.output_cards[j], 0.0);
    for (std::size_t l = 0; l < s.size(); ++l)
      for (std::size_t i = 0; i < c.n(); ++i) s[l] += c.u(i, j, x[i], l);
    out.factors.push_back(normalize_log(s));
  }
  const ExactDist prod = product_dist(out.factors);
  for (std::size_t k = 0; k < prod.probs.size(); ++k)
    out.identity_error = std::max(out.identity_error, std::abs(prod.probs[k] - out.joint.probs[k]));
  return out;
}

ExactDist exact_marginal(const GeneralCim& c, const ExactDist& px) {
  c.validate();
  if (px.cards != c.input_cards) throw std::invalid_argument("exact_marginal: px does not match the model inputs");
  const ConfigSpace xs(c.input_cards);
  const ConfigSpace ys(c.output_cards);
  if (xs.size() > kWorkBound / ys.size())
    throw ResourceError("exact_marginal: |X|*|Y| exceeds the enumeration work bound");
  ExactDist out{c.output_cards, std::vector<double>(ys.size(), 0.0)};
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const double w = px.probs[xi];
    if (w <= 0.0) continue;
    const auto cond = normalize_log(conditional_energies(c, xs.decode(xi), ys));
    for (std::size_t yi = 0; yi < ys.size(); ++yi) out.probs[yi] += w * cond[yi];
  }
  const double z = out.total();
  for (double& p : out.probs) p /= z;
  return out;
}

std::vector<std::vector<double>> approx_factors(const GeneralCim& c, const ExactDist& px) {
  c.validate();
  if (px.cards != c.input_cards) throw std::invalid_argument("approx_marginal: px does not match the model inputs");
  const auto marg = px.marginals();
  std::vector<std::vector<double>> factors;
  for (std::size_t j = 0; j < c.m(); ++j) {
    std::vector<double> s(c.output_cards[j], 0.0);
    for (std::size_t l = 0; l < s.size(); ++l)
      for (std::size_t i = 0; i < c.n(); ++i)
        for (std::size_t k = 0; k < c.input_cards[i]; ++k) s[l] += marg[i][k] * c.u(i, j, k, l);
    factors.push_back(normalize_log(s));
  }
  return factors;
}

ExactDist approx_marginal(const GeneralCim& c, const ExactDist& px) { return product_dist(approx_factors(c, px)); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DecayReport concentration_decay(const GeneralCim& c, const Config& center, const std::vector<double>& spreads) {
  DecayReport rep;
  std::vector<double> fit_x, fit_y;
  for (double t : spreads) {
    const ExactDist px = spread_around(c.input_cards, center, t);
    const double kl = kl_divergence(exact_marginal(c, px), approx_marginal(c, px));
    rep.spreads.push_back(t);
    rep.kl.push_back(kl);
    if (t > 0.0 && kl > 0.0) {
      fit_x.push_back(t);
      fit_y.push_back(kl);
    }
  }
  rep.slope = fit_x.size() >= 2 ? loglog_slope(fit_x, fit_y) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

double state_value(Encoding e, std::size_t s) noexcept {
  return e == Encoding::PlusMinusOne ? (s ? 1.0 : -1.0) : (s ? 1.0 : 0.0);
}

GeneralCim layer_cim(const Params& p, std::size_t k) {
  if (k == 0 || k > p.depth()) throw std::invalid_argument("layer_cim: layer out of range");
  const auto& spec = p.spec();
  const auto& ls = spec.layers[k - 1];
  const auto& lp = p.layer(k - 1);
  const Encoding e = spec.encoding;
  const bool categorical = ls.activation == Activation::Softmax;
  GeneralCim c = GeneralCim::zeros(std::vector<std::size_t>(ls.in_dim, 2),
                                   categorical ? std::vector<std::size_t>{ls.out_dim}
                                               : std::vector<std::size_t>(ls.out_dim, 2));
  for (std::size_t i = 0; i < ls.in_dim; ++i) {
    for (std::size_t xs = 0; xs < 2; ++xs) {
      const double xv = state_value(e, xs);
      if (categorical) {
        for (std::size_t cls = 0; cls < ls.out_dim; ++cls)
          c.tables[i][xs * ls.out_dim + cls] = lp.weight(cls, i) * xv + (i == 0 ? lp.forward_bias[cls] : 0.0);
      } else {
        for (std::size_t j = 0; j < ls.out_dim; ++j)
          for (std::size_t ys = 0; ys < 2; ++ys) {
            const double yv = state_value(e, ys);
            c.tables[i * ls.out_dim + j][xs * 2 + ys] =
                yv * lp.weight(j, i) * xv + (i == 0 ? lp.forward_bias[j] * yv : 0.0);
          }
      }
    }
  }
  return c;
}

TinyDcim::TinyDcim(Params params) : params_(std::move(params)) {
  std::size_t hidden_states = 1;
  for (std::size_t k = 1; k < depth(); ++k) {
    const std::size_t s = ConfigSpace(layer_cards(k)).size();
    if (hidden_states > kEnumerationBound / s)
      throw ResourceError("TinyDcim: hidden configuration space exceeds the enumeration bound");
    hidden_states *= s;
  }
  ConfigSpace(layer_cards(0));
  ConfigSpace(layer_cards(depth()));
  for (std::size_t k = 1; k <= depth(); ++k) transitions_.push_back(layer_cim(params_, k));
}

std::vector<std::size_t> TinyDcim::layer_cards(std::size_t k) const {
  if (k == depth() && params_.spec().categorical_output()) return {params_.spec().output_dim()};
  return std::vector<std::size_t>(binary_one_bits(k, params_), 2);
}

Vector TinyDcim::layer_values(std::size_t k, const Config& x) const {
  if (k == depth() && params_.spec().categorical_output()) {
    Vector v(params_.spec().output_dim());
    v[x.at(0)] = 1.0;
    return v;
  }
  check_config(layer_cards(k), x);
  Vector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = state_value(params_.spec().encoding, x[i]);
  return v;
}

namespace {

Vector dist_means(const TinyDcim& m, std::size_t k, const ExactDist& d) {
  const auto marg = d.marginals();
  if (k == m.depth() && m.params().spec().categorical_output()) return Vector(marg[0]);
  Vector v(marg.size());
  const Encoding e = m.params().spec().encoding;
  for (std::size_t i = 0; i < marg.size(); ++i) v[i] = marg[i][0] * state_value(e, 0) + marg[i][1] * state_value(e, 1);
  return v;
}

/// Exact layer-k marginal of the forward chain started from p0.
ExactDist propagate(const TinyDcim& m, ExactDist dist, std::size_t k) {
  for (std::size_t j = 1; j <= k; ++j) dist = exact_marginal(m.transition(j), dist);
  return dist;
}

}  // namespace

ForwardPosterior exact_forward_posterior(const TinyDcim& m, const Config& x0) {
  ForwardPosterior out;
  ExactDist dist = point_mass(m.layer_cards(0), x0);
  for (std::size_t k = 1; k <= m.depth(); ++k) {
    dist = exact_marginal(m.transition(k), dist);
    out.layers.push_back(dist);
    out.layer_means.push_back(dist_means(m, k, dist));
  }
  out.top = dist;
  return out;
}

ExactDist approx_forward_posterior(const TinyDcim& m, const Config& x0) {
  const auto& spec = m.params().spec();
  const MeanStack fwd = forward_means(m.params(), m.layer_values(0, x0));
  const Vector& top = fwd.means.back();
  if (spec.categorical_output()) return {{top.size()}, top.values()};
  std::vector<std::vector<double>> factors;
  for (double mean : top) {
    const double p1 = spec.encoding == Encoding::PlusMinusOne ? 0.5 * (1.0 + mean) : mean;
    factors.push_back({1.0 - p1, p1});
  }
  return product_dist(factors);
}

GapReport reverse_independence_gap(const TinyDcim& m, std::size_t level, Completion completion) {
  if (level >= m.depth()) throw std::invalid_argument("reverse_independence_gap: level must be below the top layer");
  const auto cards0 = m.layer_cards(0);
  const ConfigSpace xs0(cards0);
  ExactDist p0{cards0, {}};
  if (completion == Completion::Uniform) {
    p0.probs.assign(xs0.size(), 1.0 / static_cast<double>(xs0.size()));
  } else {
    // exp(<a^0, x^0>) Z_1(x^0) makes the first transition the conditional of
    // the RBM exp(<x^1, W x^0 + b> + <a^0, x^0>).
    const GeneralCim& t1 = m.transition(1);
    const ConfigSpace ys(t1.output_cards);
    const Vector& a0 = m.params().layer(0).backward_bias;
    std::vector<double> logw(xs0.size());
    for (std::size_t xi = 0; xi < xs0.size(); ++xi) {
      const Config x = xs0.decode(xi);
      const Vector v = m.layer_values(0, x);
      double lin = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) lin += a0[i] * v[i];
      logw[xi] = lin + log_sum_exp(conditional_energies(t1, x, ys));
    }
    p0.probs = normalize_log(logw);
  }
  const ExactDist pk = propagate(m, p0, level);
  const GeneralCim& next = m.transition(level + 1);
  const ConfigSpace xk(pk.cards);
  const ConfigSpace yk(next.output_cards);
  std::vector<double> joint(xk.size() * yk.size(), 0.0);  // [x * |Y| + y]
  for (std::size_t xi = 0; xi < xk.size(); ++xi) {
    if (pk.probs[xi] <= 0.0) continue;
    const auto cond = normalize_log(conditional_energies(next, xk.decode(xi), yk));
    for (std::size_t yi = 0; yi < yk.size(); ++yi) joint[xi * yk.size() + yi] = pk.probs[xi] * cond[yi];
  }
  GapReport rep;
  for (std::size_t yi = 0; yi < yk.size(); ++yi) {
    ExactDist rev{pk.cards, std::vector<double>(xk.size())};
    double py = 0.0;
    for (std::size_t xi = 0; xi < xk.size(); ++xi) py += joint[xi * yk.size() + yi];
    if (py <= 0.0) continue;
    for (std::size_t xi = 0; xi < xk.size(); ++xi) rev.probs[xi] = joint[xi * yk.size() + yi] / py;
    const double gap = total_variation(rev, product_dist(rev.marginals()));
    if (gap > rep.max_gap || rep.worst_state.empty()) {
      rep.max_gap = std::max(rep.max_gap, gap);
      rep.worst_state = yk.decode(yi);
    }
  }
  return rep;
}

RbmReport rbm_check(const Params& layer, Rng& rng, std::size_t max_pairs) {
  const auto& spec = layer.spec();
  if (layer.depth() != 1 || spec.categorical_output())
    throw std::invalid_argument("rbm_check: needs a single layer with binary outputs");
  const Encoding e = spec.encoding;
  const std::size_t n0 = spec.input_dim();
  const std::size_t n1 = spec.output_dim();
  const ConfigSpace xs(std::vector<std::size_t>(n0, 2));
  const ConfigSpace ys(std::vector<std::size_t>(n1, 2));
  if (xs.size() > kEnumerationBound / ys.size()) throw ResourceError("rbm_check: joint space exceeds the bound");
  const auto& lp = layer.layer(0);

  auto values = [e](const Config& c) {
    Vector v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = state_value(e, c[i]);
    return v;
  };
  // Log-potential of the joint: x1ᵀ W x0 + bᵀ x1 + aᵀ x0.
  std::vector<double> energy(xs.size() * ys.size());
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const Vector x = values(xs.decode(xi));
    for (std::size_t yi = 0; yi < ys.size(); ++yi) {
      const Vector y = values(ys.decode(yi));
      double s = 0.0;
      for (std::size_t j = 0; j < n1; ++j) {
        for (std::size_t i = 0; i < n0; ++i) s += y[j] * lp.weight(j, i) * x[i];
        s += lp.forward_bias[j] * y[j];
      }
      for (std::size_t i = 0; i < n0; ++i) s += lp.backward_bias[i] * x[i];
      energy[xi * ys.size() + yi] = s;
    }
  }

  RbmReport rep;
  std::vector<double> log_fwd(energy.size()), log_bwd(energy.size());
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    std::vector<double> row(energy.begin() + static_cast<std::ptrdiff_t>(xi * ys.size()),
                            energy.begin() + static_cast<std::ptrdiff_t>((xi + 1) * ys.size()));
    const double lz = log_sum_exp(row);
    Vector mean(n1);
    for (std::size_t yi = 0; yi < ys.size(); ++yi) {
      log_fwd[xi * ys.size() + yi] = row[yi] - lz;
      const Vector y = values(ys.decode(yi));
      for (std::size_t j = 0; j < n1; ++j) mean[j] += std::exp(row[yi] - lz) * y[j];
    }
    const Vector approx = forward_means(layer, values(xs.decode(xi))).means[1];
    for (std::size_t j = 0; j < n1; ++j) rep.forward_error = std::max(rep.forward_error, std::abs(approx[j] - mean[j]));
  }
  for (std::size_t yi = 0; yi < ys.size(); ++yi) {
    std::vector<double> col(xs.size());
    for (std::size_t xi = 0; xi < xs.size(); ++xi) col[xi] = energy[xi * ys.size() + yi];
    const double lz = log_sum_exp(col);
    Vector mean(n0);
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      log_bwd[xi * ys.size() + yi] = col[xi] - lz;
      const Vector x = values(xs.decode(xi));
      for (std::size_t i = 0; i < n0; ++i) mean[i] += std::exp(col[xi] - lz) * x[i];
    }
    const Vector approx = backward_means(layer, values(ys.decode(yi))).means[0];
    for (std::size_t i = 0; i < n0; ++i)
      rep.backward_error = std::max(rep.backward_error, std::abs(approx[i] - mean[i]));
  }

  // Objective over (x0, x1) pairs with 0/1 pixel and target values.
  const std::size_t all = xs.size() * ys.size();
  std::vector<std::size_t> pairs;
  if (all <= max_pairs) {
    for (std::size_t k = 0; k < all; ++k) pairs.push_back(k);
  } else {
    for (std::size_t k = 0; k < max_pairs; ++k) pairs.push_back(rng.below(all));
  }
  std::vector<Vector> inputs, targets;
  double exact = 0.0;
  for (std::size_t k : pairs) {
    const std::size_t xi = k / ys.size(), yi = k % ys.size();
    const Config x = xs.decode(xi), y = ys.decode(yi);
    Vector xin(n0), yt(n1);
    for (std::size_t i = 0; i < n0; ++i) xin[i] = static_cast<double>(x[i]);
    for (std::size_t j = 0; j < n1; ++j) yt[j] = static_cast<double>(y[j]);
    inputs.push_back(std::move(xin));
    targets.push_back(std::move(yt));
    exact -= log_fwd[k] + log_bwd[k];
  }
  rep.pairs = pairs.size();
  rep.exact_value = exact / static_cast<double>(pairs.size());
  Rng unused(0);
  rep.objective_value =
      objective_value(layer, make_unit_batch(inputs, targets), {Objective::Bidirectional, 1.0}, unused).total;
  rep.objective_error = std::abs(rep.objective_value - rep.exact_value);
  return rep;
}

Params random_params(const NetworkSpec& spec, Rng& rng, double scale, bool tie_interior_biases) {
  std::vector<LayerParams> layers;
  for (const auto& s : spec.layers) {
    LayerParams l{Matrix(s.out_dim, s.in_dim), Vector(s.out_dim), Vector(s.in_dim)};
    for (double& v : l.weight.span()) v = rng.uniform(-scale, scale);
    for (double& v : l.forward_bias) v = rng.uniform(-scale, scale);
    for (double& v : l.backward_bias) v = rng.uniform(-scale, scale);
    layers.push_back(std::move(l));
  }
  return Params(spec, std::move(layers), tie_interior_biases);
}

std::string format_results(const std::vector<PropertyResult>& results) {
  std::string out;
  char buf[512];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s %-40s measured=%.17g %s %.3g\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.measured, r.upper_bound ? "<=" : ">", r.threshold);
    out += buf;
  }
  return out;
}

}  // namespace dcim::oracle
