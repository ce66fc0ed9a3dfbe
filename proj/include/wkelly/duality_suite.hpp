#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "wkelly/inner_oracle.hpp"
#include "wkelly/rng.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

struct DualityCheckResult {
  int instances = 0;
  int evaluations = 0;   // one per (instance, sample)
  double max_gap = 0.0;  // max |inner_min_value - conjugate_inner_value|
};

/// Seeded randomized check of the per-sample duality identity: on each
/// instance (n in {1,2,3}, N in {1..5}, random interior weights, lambda in
/// [0.1, 10]), the primal inner minimum over r must match the conjugate
/// maximization over v for every sample.
inline DualityCheckResult run_duality_suite(std::uint64_t seed, int instances,
                                            double p = 2.0, Norm norm = Norm::L2,
                                            const InnerEvalConfig& cfg = {}) {
  if (instances < 1) throw ValidationError("run_duality_suite: instances must be >= 1");
  DualityCheckResult out;
  out.instances = instances;
  for (int k = 0; k < instances; ++k) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    const int n = 1 + static_cast<int>(rng.below(3));
    const int N = 1 + static_cast<int>(rng.below(5));
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = rng.exponential();
    SimplexWeights w = make_weights(Eigen::VectorXd(raw / raw.sum()));
    const double lambda = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    const BallSpec ball = BallSpec::make(p, 0.0, norm);
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd rhat(n);
      for (int i = 0; i < n; ++i) rhat[i] = 0.2 * rng.normal();
      const ExtendedReal primal = inner_min_value(w, lambda, rhat, ball, cfg);
      const ExtendedReal dual = conjugate_inner_value(w, lambda, rhat, ball, cfg);
      double gap;
      if (primal.is_finite() && dual.is_finite()) {
        gap = std::abs(primal.value() - dual.value());
      } else {
        gap = primal == dual ? 0.0 : std::numeric_limits<double>::infinity();
      }
      out.max_gap = std::max(out.max_gap, gap);
      ++out.evaluations;
    }
  }
  return out;
}

}  // namespace wkelly
