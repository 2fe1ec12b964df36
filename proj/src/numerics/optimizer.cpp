#include "aknet/numerics/optimizer.hpp"

#include "aknet/errors.hpp"

#include <cmath>
#include <string>

namespace aknet {

AdamOptimizer::AdamOptimizer(const ParamStore& params, AdamConfig config)
    : config_(config), m_(params.size(), 0.0), v_(params.size(), 0.0) {
  if (!(config_.step_size > 0.0) || !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.epsilon > 0.0)) {
    throw ContractViolation("AdamOptimizer: invalid hyperparameters");
  }
}

void AdamOptimizer::step(ParamStore& params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ContractViolation("AdamOptimizer::step: expected " + std::to_string(m_.size()) +
                            " entries, got params=" + std::to_string(params.size()) +
                            " grads=" + std::to_string(grads.size()));
  }
  for (const auto& block : params.blocks()) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (!std::isfinite(grads[block.offset + i])) {
        throw NumericalError("non-finite gradient in parameter block '" + block.name + "'");
      }
    }
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  auto values = params.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    values[i] -= config_.step_size * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace aknet
