#ifndef SEQTRAIN_GENERATOR_HPP_
#define SEQTRAIN_GENERATOR_HPP_

#include <cstdint>

#include "seqtrain/dataset.hpp"

namespace seqtrain {

/// Two-point observation of exponential growth x(t) = x(0) e^{a t}.
/// Each sample has input [x(0), x(0) e^{a t1}] and target a.
struct GeneratorConfig {
  Index n = 500;
  double x0_low = 0.5;
  double x0_high = 2.0;
  double a_low = -1.0;
  double a_high = 1.0;
  double t1 = 2.0;
  std::uint64_t seed = 2020;

  void validate() const;
};

/// Draws x(0) then a for every sample from one generator seeded with cfg.seed.
Datasetd generate(const GeneratorConfig& cfg);

/// The exact sample for given x(0) and a.
void growth_sample(double x0, double a, double t1, double& u1, double& u2);

}  // namespace seqtrain

#endif  // SEQTRAIN_GENERATOR_HPP_
