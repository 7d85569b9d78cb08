#include "dcim/gradcheck.hpp"

#include <stdexcept>

#include "dcim/oracle.hpp"

namespace dcim {

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  if (opts.trials == 0) throw std::invalid_argument("gradcheck: trials must be positive");
  if (!(opts.step > 0.0)) throw std::invalid_argument("gradcheck: step must be positive");
  GradcheckReport rep;
  rep.trials = opts.trials;
  Rng rng(opts.seed);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t depth = 2 + rng.below(2);
    std::vector<std::size_t> sizes{2 + rng.below(4)};
    for (std::size_t k = 1; k < depth; ++k) sizes.push_back(2 + rng.below(4));
    sizes.push_back(2 + rng.below(3));
    const Encoding enc = rng.below(2) ? Encoding::ZeroOne : Encoding::PlusMinusOne;
    const bool tie = rng.below(2) == 1;
    const NetworkSpec spec = make_spec(sizes, enc);
    const Params p = oracle::random_params(spec, rng, 1.0, tie);

    const std::size_t n = 3;
    std::vector<Vector> inputs, targets;
    for (std::size_t i = 0; i < n; ++i) {
      Vector x(sizes.front());
      for (double& v : x) v = rng.uniform(0.1, 0.9);
      Vector y(sizes.back());
      y[rng.below(sizes.back())] = 1.0;
      inputs.push_back(std::move(x));
      targets.push_back(std::move(y));
    }
    const LabeledBatch batch = make_unit_batch(inputs, targets);

    const Rng sample_rng(rng.next_u64());
    Rng engine_rng = sample_rng;
    Gradients analytic = grad(p, batch, opts.objective, engine_rng).second;
    if (opts.fault != 0.0 && t == 0) analytic.layers[0].weight.data()[0] += opts.fault;
    const Gradients numeric = finite_diff_grad(p, batch, opts.objective, opts.step, sample_rng);
    const GradientComparison cmp = compare_gradients(analytic, numeric);
    if (t == 0 || cmp.max_rel_error > rep.worst.max_rel_error) {
      rep.worst = cmp;
      rep.worst_trial = t;
      rep.worst_arch = format_arch(spec) + (tie ? " tied" : "");
    }
  }
  rep.passed = rep.worst.max_rel_error <= opts.tolerance;
  return rep;
}

}  // namespace dcim
