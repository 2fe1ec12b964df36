#pragma once

#include "aknet/numerics/param_store.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aknet {

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer over one ParamStore.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParamStore& params, AdamConfig config = {});

  // Applies one bias-corrected update in place. Throws NumericalError naming
  // the offending block if any gradient entry is not finite; params are left
  // untouched in that case.
  void step(ParamStore& params, std::span<const double> grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t steps_taken() const { return steps_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t steps_ = 0;
};

}  // namespace aknet
