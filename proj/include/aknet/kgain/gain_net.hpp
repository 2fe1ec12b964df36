#pragma once

#include "aknet/hypercm/cm_weights.hpp"
#include "aknet/numerics/param_store.hpp"
#include "aknet/numerics/tape.hpp"
#include "aknet/ssm/model.hpp"

#include <optional>

namespace aknet {

enum class FeatureNorm : std::uint8_t {
  kUnit = 0,        // each block scaled to unit L2 norm
  kRunningRms = 1,  // each block divided by its running RMS along the trajectory
};

const char* feature_norm_name(FeatureNorm norm);
FeatureNorm parse_feature_norm(const std::string& name);

inline constexpr double kFeatureEpsilon = 1e-8;
inline constexpr double kOutputInitScale = 0.1;

struct GainNetConfig {
  Index state_dim = 2;
  Index obs_dim = 2;
  Index hidden = 40;
  FeatureNorm norm = FeatureNorm::kUnit;
  double rms_decay = 0.9;

  Index feature_dim() const { return state_dim + obs_dim; }
  Index gain_dim() const { return state_dim * obs_dim; }
  void validate() const;
};

// Hidden width used when none is configured: 10 (m + n), which puts the
// 2x2 network at ~10k parameters.
Index default_hidden_size(Index state_dim, Index obs_dim);

// Unit-normalized feature vector [dy / |dy|, dx / |dx|] with guard
// kFeatureEpsilon. dx is x_{t-1} - x_{t-1|t-2}; pass equal vectors at t = 1.
Vector features(const Vector& y, const Vector& y_prior, const Vector& x_prev,
                const Vector& x_prev_prior);

// KalmanNet gain network: fc-in (relu) -> GRU cell -> fc-out (identity),
// producing a flattened row-major m x n gain. Weights are stored input-major
// (in x out) so batched rows multiply on the left.
class GainNet {
 public:
  explicit GainNet(GainNetConfig config);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init, except fc_out: its weight
  // is shrunk by kOutputInitScale and its bias starts at zero.
  static GainNet create(GainNetConfig config, Rng& rng);

  const GainNetConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // fc_in, gru.update, gru.reset, gru.candidate, fc_out.
  const std::vector<CMSite>& cm_sites() const { return sites_; }
  Index cm_width() const { return total_cm_width(sites_); }

  struct Blocks {
    std::size_t fc_in_w, fc_in_b;
    std::size_t update_wx, update_wh, update_b;
    std::size_t reset_wx, reset_wh, reset_b;
    std::size_t cand_wx, cand_wh, cand_b;
    std::size_t fc_out_w, fc_out_b;
  };
  const Blocks& blocks() const { return blocks_; }

 private:
  GainNetConfig config_;
  ParamStore params_;
  Blocks blocks_{};
  std::vector<CMSite> sites_;
};

// Modulation rows recorded on a tape (rows x cm width each).
struct ModulationVars {
  Var gain;
  Var shift;
};

// Binds a GainNet to a tape. With `trainable` false the parameters enter as
// constants, so no gradient reaches them.
class GainNetGraph {
 public:
  GainNetGraph(Tape& tape, const GainNet& net, bool trainable);

  struct Output {
    Var gain;    // rows x (m n)
    Var hidden;  // rows x h
  };

  // features: rows x (m + n); hidden: rows x h. cm may be null (no modulation).
  Output forward(Var features, Var hidden, const ModulationVars* cm);

 private:
  Var site(Var pre, const ModulationVars* cm, std::size_t index);

  Tape& tape_;
  const GainNet& net_;
  std::vector<Var> p_;
};

struct GainForward {
  Matrix gain;  // m x n
  Vector hidden;
};

// Single-row convenience over GainNetGraph.
GainForward kgain_forward(const GainNet& net, const Vector& features, const Vector& hidden,
                          const CMWeights* cm);

struct ParamCount {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> per_block;
};

ParamCount param_count(const ParamStore& params);

}  // namespace aknet
