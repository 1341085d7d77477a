#include "seqtrain/generator.hpp"

#include <cmath>
#include <string>

#include "seqtrain/rng.hpp"

namespace seqtrain {

void GeneratorConfig::validate() const {
  require(n >= 1, "generator: n must be >= 1");
  require(x0_low > 0.0 && x0_low <= x0_high, "generator: x0 range must satisfy 0 < low <= high");
  require(a_low <= a_high, "generator: a range must satisfy low <= high");
  require(std::isfinite(x0_high) && std::isfinite(a_low) && std::isfinite(a_high) && std::isfinite(t1),
          "generator: ranges and t1 must be finite");
}

void growth_sample(double x0, double a, double t1, double& u1, double& u2) {
  u1 = x0;
  u2 = x0 * std::exp(t1 * a);
}

Datasetd generate(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Matrix<double> inputs(cfg.n, 2);
  Vector<double> targets(cfg.n);
  for (Index i = 0; i < cfg.n; ++i) {
    const double x0 = rng.uniform(cfg.x0_low, cfg.x0_high);
    const double a = rng.uniform(cfg.a_low, cfg.a_high);
    growth_sample(x0, a, cfg.t1, inputs(i, 0), inputs(i, 1));
    targets(i) = a;
  }
  return Datasetd(std::move(inputs), std::move(targets));
}

}  // namespace seqtrain
