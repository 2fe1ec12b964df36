#pragma once

#include "aknet/hypercm/cm_weights.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/numerics/param_store.hpp"
#include "aknet/numerics/tape.hpp"

#include <span>

namespace aknet {

// Scalar fed to the hypernetwork for a given SoW: log10(sow). Throws
// ContractViolation for sow <= 0 or non-finite sow.
double encode_sow(double sow);

struct HyperNetConfig {
  Index hidden = 5;
  Index output_dim = 0;  // total modulated width of the target gain network
};

// Small MLP d(encode(sow), switch): (2 -> h1, tanh) -> (h1 -> h1, tanh) -> (h1 -> output_dim).
// switch = 1 yields gains through 1 + tanh(raw); switch = 0 yields shifts as raw.
class HyperNet {
 public:
  explicit HyperNet(HyperNetConfig config);

  // Trunk gets uniform fan-in init; the head starts at zero weights and bias so
  // every SoW maps to g = 1, s = 0.
  static HyperNet create(const GainNet& target, Index hidden, Rng& rng);

  const HyperNetConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Bounded gains for switch = 1, raw shifts for switch = 0 (1 x output_dim).
  Vector forward(double sow, int switch_bit) const;

  // One row of CM weights per SoW entry.
  CMWeights modulation(std::span<const double> sows) const;

 private:
  HyperNetConfig config_;
  ParamStore params_;
};

class HyperNetGraph {
 public:
  HyperNetGraph(Tape& tape, const HyperNet& net, bool trainable);

  // encoded: rows x 1 column of encode_sow values.
  ModulationVars forward(Var encoded);

 private:
  Var raw(Var encoded, double switch_value);

  Tape& tape_;
  std::vector<Var> p_;
};

}  // namespace aknet
