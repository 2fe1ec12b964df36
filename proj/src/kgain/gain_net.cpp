#include "aknet/kgain/gain_net.hpp"

#include "aknet/errors.hpp"

#include <cmath>

namespace aknet {

namespace {

Vector unit_block(const Vector& v) { return v / (v.norm() + kFeatureEpsilon); }

void init_uniform(ParamStore& params, std::size_t block, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto view = params.view(block);
  for (Index i = 0; i < view.size(); ++i) view.data()[i] = dist(rng);
}

}  // namespace

const char* feature_norm_name(FeatureNorm norm) {
  return norm == FeatureNorm::kUnit ? "unit" : "rms";
}

FeatureNorm parse_feature_norm(const std::string& name) {
  if (name == "unit") return FeatureNorm::kUnit;
  if (name == "rms") return FeatureNorm::kRunningRms;
  throw ContractViolation("unknown feature normalization '" + name + "' (expected unit|rms)");
}

void GainNetConfig::validate() const {
  if (state_dim <= 0 || obs_dim <= 0 || hidden <= 0) {
    throw ContractViolation("GainNetConfig: dimensions must be positive");
  }
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) {
    throw ContractViolation("GainNetConfig: rms_decay must lie in [0, 1)");
  }
}

Index default_hidden_size(Index state_dim, Index obs_dim) { return 10 * (state_dim + obs_dim); }

Vector features(const Vector& y, const Vector& y_prior, const Vector& x_prev,
                const Vector& x_prev_prior) {
  if (y.size() != y_prior.size() || x_prev.size() != x_prev_prior.size()) {
    throw ContractViolation("features: dimension mismatch");
  }
  Vector out(y.size() + x_prev.size());
  out << unit_block(y - y_prior), unit_block(x_prev - x_prev_prior);
  return out;
}

GainNet::GainNet(GainNetConfig config) : config_(config) {
  config_.validate();
  const Index d = config_.feature_dim();
  const Index h = config_.hidden;
  const Index k = config_.gain_dim();
  blocks_.fc_in_w = params_.add_block("theta/fc_in.weight", d, h);
  blocks_.fc_in_b = params_.add_block("theta/fc_in.bias", 1, h);
  blocks_.update_wx = params_.add_block("theta/gru.update.w_input", h, h);
  blocks_.update_wh = params_.add_block("theta/gru.update.w_hidden", h, h);
  blocks_.update_b = params_.add_block("theta/gru.update.bias", 1, h);
  blocks_.reset_wx = params_.add_block("theta/gru.reset.w_input", h, h);
  blocks_.reset_wh = params_.add_block("theta/gru.reset.w_hidden", h, h);
  blocks_.reset_b = params_.add_block("theta/gru.reset.bias", 1, h);
  blocks_.cand_wx = params_.add_block("theta/gru.candidate.w_input", h, h);
  blocks_.cand_wh = params_.add_block("theta/gru.candidate.w_hidden", h, h);
  blocks_.cand_b = params_.add_block("theta/gru.candidate.bias", 1, h);
  blocks_.fc_out_w = params_.add_block("theta/fc_out.weight", h, k);
  blocks_.fc_out_b = params_.add_block("theta/fc_out.bias", 1, k);

  Index offset = 0;
  auto add_site = [&](const char* name, Index width, Activation act) {
    sites_.push_back(CMSite{name, offset, width, act});
    offset += width;
  };
  add_site("fc_in", h, Activation::kRelu);
  add_site("gru.update", h, Activation::kSigmoid);
  add_site("gru.reset", h, Activation::kSigmoid);
  add_site("gru.candidate", h, Activation::kTanh);
  add_site("fc_out", k, Activation::kIdentity);
}

GainNet GainNet::create(GainNetConfig config, Rng& rng) {
  GainNet net(config);
  const Index d = net.config_.feature_dim();
  const Index h = net.config_.hidden;
  const auto& b = net.blocks_;
  init_uniform(net.params_, b.fc_in_w, d, rng);
  init_uniform(net.params_, b.fc_in_b, d, rng);
  for (std::size_t blk : {b.update_wx, b.update_wh, b.update_b, b.reset_wx, b.reset_wh, b.reset_b,
                          b.cand_wx, b.cand_wh, b.cand_b, b.fc_out_w}) {
    init_uniform(net.params_, blk, h, rng);
  }
  // A near-zero initial gain keeps the untrained filter close to open-loop
  // prediction, which is stable for stable F; a full-scale random gain can
  // blow the first epochs up and leave the GRU saturated.
  net.params_.view(b.fc_out_w) *= kOutputInitScale;
  net.params_.view(b.fc_out_b).setZero();
  return net;
}

GainNetGraph::GainNetGraph(Tape& tape, const GainNet& net, bool trainable)
    : tape_(tape), net_(net) {
  const ParamStore& params = net.params();
  p_.reserve(params.blocks().size());
  for (std::size_t i = 0; i < params.blocks().size(); ++i) {
    p_.push_back(trainable ? tape.parameter(params, i) : tape.constant(Matrix(params.view(i))));
  }
}

Var GainNetGraph::site(Var pre, const ModulationVars* cm, std::size_t index) {
  const CMSite& s = net_.cm_sites()[index];
  if (cm != nullptr) {
    Var g = tape_.cols(cm->gain, s.offset, s.width);
    Var sh = tape_.cols(cm->shift, s.offset, s.width);
    pre = tape_.add(tape_.mul(pre, g), sh);
  }
  return s.activation == Activation::kIdentity ? pre : tape_.activate(pre, s.activation);
}

GainNetGraph::Output GainNetGraph::forward(Var features, Var hidden, const ModulationVars* cm) {
  const auto& cfg = net_.config();
  if (tape_.cols(features) != cfg.feature_dim()) {
    throw ContractViolation("kgain_forward: expected " + std::to_string(cfg.feature_dim()) +
                            " features, got " + std::to_string(tape_.cols(features)));
  }
  if (tape_.cols(hidden) != cfg.hidden || tape_.rows(hidden) != tape_.rows(features)) {
    throw ContractViolation("kgain_forward: hidden state has wrong shape");
  }
  if (cm != nullptr && (tape_.cols(cm->gain) != net_.cm_width() ||
                        tape_.rows(cm->gain) != tape_.rows(features))) {
    throw ContractViolation("kgain_forward: modulation has wrong shape");
  }
  const auto& b = net_.blocks();
  auto P = [&](std::size_t blk) { return p_[blk]; };
  auto affine = [&](Var x, std::size_t w, std::size_t bias) {
    return tape_.add_row(tape_.matmul(x, P(w)), P(bias));
  };

  Var a = site(affine(features, b.fc_in_w, b.fc_in_b), cm, 0);

  Var z = site(tape_.add(affine(a, b.update_wx, b.update_b), tape_.matmul(hidden, P(b.update_wh))),
               cm, 1);
  Var r = site(tape_.add(affine(a, b.reset_wx, b.reset_b), tape_.matmul(hidden, P(b.reset_wh))),
               cm, 2);
  Var c = site(tape_.add(affine(a, b.cand_wx, b.cand_b),
                         tape_.matmul(tape_.mul(r, hidden), P(b.cand_wh))),
               cm, 3);
  Var keep = tape_.add_scalar(tape_.scale(z, -1.0), 1.0);
  Var next_hidden = tape_.add(tape_.mul(keep, hidden), tape_.mul(z, c));

  Var gain = site(affine(next_hidden, b.fc_out_w, b.fc_out_b), cm, 4);
  return Output{gain, next_hidden};
}

GainForward kgain_forward(const GainNet& net, const Vector& features, const Vector& hidden,
                          const CMWeights* cm) {
  const auto& cfg = net.config();
  if (features.size() != cfg.feature_dim() || hidden.size() != cfg.hidden) {
    throw ContractViolation("kgain_forward: dimension mismatch");
  }
  Tape tape;
  GainNetGraph graph(tape, net, false);
  Var f = tape.constant(features.transpose());
  Var h = tape.constant(hidden.transpose());
  std::optional<ModulationVars> mod;
  if (cm != nullptr) {
    if (cm->rows() != 1 || cm->width() != net.cm_width()) {
      throw ContractViolation("kgain_forward: CM weights must be 1 x " +
                              std::to_string(net.cm_width()));
    }
    mod = ModulationVars{tape.constant(cm->gain), tape.constant(cm->shift)};
  }
  auto out = graph.forward(f, h, mod ? &*mod : nullptr);
  GainForward result;
  const Matrix& k = tape.value(out.gain);
  result.gain = Eigen::Map<const Matrix>(k.data(), cfg.state_dim, cfg.obs_dim);
  result.hidden = tape.value(out.hidden).row(0).transpose();
  return result;
}

ParamCount param_count(const ParamStore& params) {
  ParamCount out;
  for (const auto& b : params.blocks()) {
    out.per_block.emplace_back(b.name, b.size());
    out.total += b.size();
  }
  return out;
}

}  // namespace aknet
