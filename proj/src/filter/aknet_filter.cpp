#include "aknet/filter/aknet_filter.hpp"

#include "aknet/errors.hpp"

#include <algorithm>

namespace aknet {

BatchStateValues BatchStateValues::initial(const Matrix& x0, Index hidden_size) {
  BatchStateValues s;
  s.x_post = x0;
  s.x_prior_prev = x0;
  s.hidden = Matrix::Zero(x0.rows(), hidden_size);
  s.scale_y = Matrix::Zero(x0.rows(), 1);
  s.scale_x = Matrix::Zero(x0.rows(), 1);
  s.step = 0;
  return s;
}

FilterNetState FilterNetState::initial(const Vector& x0, Index hidden_size) {
  return FilterNetState{BatchStateValues::initial(x0.transpose(), hidden_size)};
}

FilterGraph::FilterGraph(Tape& tape, const SSModel& model, const GainNet& gain_net,
                         const HyperNet* hyper, Options options)
    : tape_(tape),
      model_(model),
      gain_net_(gain_net),
      hyper_(hyper),
      gain_graph_(tape, gain_net, options.train_gain_net) {
  const auto& cfg = gain_net.config();
  if (model.state_dim() != cfg.state_dim || model.obs_dim() != cfg.obs_dim) {
    throw ContractViolation("FilterGraph: gain network dimensions do not match the model");
  }
  if (hyper != nullptr) {
    if (hyper->config().output_dim != gain_net.cm_width()) {
      throw ContractViolation("FilterGraph: hypernetwork output does not tile the CM sites");
    }
    hyper_graph_.emplace(tape, *hyper, options.train_hyper);
  }
  f_t_ = tape.constant(model.F.transpose());
  h_t_ = tape.constant(model.H.transpose());
}

FilterGraph::StateVars FilterGraph::load(const BatchStateValues& v) {
  return StateVars{tape_.constant(v.x_post),  tape_.constant(v.x_prior_prev),
                   tape_.constant(v.hidden),  tape_.constant(v.scale_y),
                   tape_.constant(v.scale_x), v.step};
}

BatchStateValues FilterGraph::store(const StateVars& s) const {
  BatchStateValues v;
  v.x_post = tape_.value(s.x_post);
  v.x_prior_prev = tape_.value(s.x_prior_prev);
  v.hidden = tape_.value(s.hidden);
  v.scale_y = tape_.value(s.scale_y);
  v.scale_x = tape_.value(s.scale_x);
  v.step = s.step;
  return v;
}

Var FilterGraph::normalize(Var v, Var& scale, bool first) {
  Var sq = tape_.row_sq_sum(v);
  const auto& cfg = gain_net_.config();
  if (cfg.norm == FeatureNorm::kUnit || first) {
    scale = sq;
  } else {
    scale = tape_.add(tape_.scale(scale, cfg.rms_decay), tape_.scale(sq, 1.0 - cfg.rms_decay));
  }
  return tape_.div_rows(v, tape_.add_scalar(tape_.sqrt(scale), kFeatureEpsilon));
}

FilterGraph::StepVars FilterGraph::step_impl(const StateVars& state, Var y,
                                             const ModulationVars* mod) {
  const Index rows = tape_.rows(state.x_post);
  const Index m = model_.state_dim();
  if (tape_.rows(y) != rows || tape_.cols(y) != model_.obs_dim()) {
    throw ContractViolation("filter step: observation batch has wrong shape");
  }
  StepVars out;
  out.x_prior = tape_.matmul(state.x_post, f_t_);
  out.y_prior = tape_.matmul(out.x_prior, h_t_);
  out.innovation = tape_.sub(y, out.y_prior);

  Var scale_y = state.scale_y;
  Var scale_x = state.scale_x;
  Var fy = normalize(out.innovation, scale_y, state.step == 0);
  Var fx;
  if (state.step == 0) {
    fx = tape_.constant(Matrix::Zero(rows, m));
  } else {
    fx = normalize(tape_.sub(state.x_post, state.x_prior_prev), scale_x, state.step == 1);
  }
  Var feats = tape_.concat_cols(fy, fx);

  auto net = gain_graph_.forward(feats, state.hidden, mod);
  out.gain = net.gain;
  out.x_post = tape_.add(out.x_prior, tape_.row_matvec(net.gain, out.innovation, m));
  out.next = StateVars{out.x_post, out.x_prior, net.hidden, scale_y, scale_x, state.step + 1};
  return out;
}

FilterGraph::StepVars FilterGraph::step(const StateVars& state, Var y,
                                        std::span<const double> sow) {
  if (!hyper_graph_) return step_impl(state, y, nullptr);
  const Index rows = tape_.rows(state.x_post);
  if (static_cast<Index>(sow.size()) != rows) {
    throw ContractViolation("filter step: expected one SoW per batch row");
  }
  if (!cached_mod_ || !std::equal(sow.begin(), sow.end(), cached_sow_.begin(), cached_sow_.end())) {
    Matrix encoded(rows, 1);
    for (Index i = 0; i < rows; ++i) encoded(i, 0) = encode_sow(sow[static_cast<std::size_t>(i)]);
    cached_mod_ = hyper_graph_->forward(tape_.constant(std::move(encoded)));
    cached_sow_.assign(sow.begin(), sow.end());
  }
  return step_impl(state, y, &*cached_mod_);
}

FilterGraph::StepVars FilterGraph::step_with_cm(const StateVars& state, Var y,
                                                const CMWeights* cm) {
  if (cm == nullptr) return step_impl(state, y, nullptr);
  ModulationVars mod{tape_.constant(cm->gain), tape_.constant(cm->shift)};
  return step_impl(state, y, &mod);
}

BatchRunner::BatchRunner(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
                         const Matrix& x0)
    : model_(model),
      gain_net_(gain_net),
      hyper_(hyper),
      state_(BatchStateValues::initial(x0, gain_net.config().hidden)) {}

StepResult BatchRunner::step(const Matrix& y, std::span<const double> sow) {
  Tape tape;
  FilterGraph graph(tape, model_, gain_net_, hyper_, {});
  auto out = graph.step(graph.load(state_), tape.constant(y), sow);
  state_ = graph.store(out.next);
  return StepResult{tape.value(out.x_post), tape.value(out.x_prior), tape.value(out.y_prior),
                    tape.value(out.innovation), tape.value(out.gain)};
}

AknetStep aknet_step(const SSModel& model, const Vector& y, const GainNet& gain_net,
                     FilterNetState& state, const CMWeights* cm) {
  if (state.batch.rows() != 1) throw ContractViolation("aknet_step: state must hold one row");
  Tape tape;
  FilterGraph graph(tape, model, gain_net, nullptr, {});
  auto out = graph.step_with_cm(graph.load(state.batch), tape.constant(y.transpose()), cm);
  state.batch = graph.store(out.next);
  AknetStep r;
  r.x_post = tape.value(out.x_post).row(0).transpose();
  r.x_prior = tape.value(out.x_prior).row(0).transpose();
  r.y_prior = tape.value(out.y_prior).row(0).transpose();
  const Matrix& k = tape.value(out.gain);
  r.gain = Eigen::Map<const Matrix>(k.data(), model.state_dim(), model.obs_dim());
  return r;
}

std::vector<Matrix> aknet_filter(const SSModel& model, const GainNet& gain_net,
                                 const HyperNet* hyper, std::span<const Trajectory* const> batch,
                                 std::span<const std::vector<double>* const> sows) {
  if (batch.empty()) return {};
  if (hyper != nullptr && sows.size() != batch.size()) {
    throw ContractViolation("aknet_filter: one SoW sequence per trajectory required");
  }
  const auto rows = static_cast<Index>(batch.size());
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  const std::size_t T = batch.front()->length();
  Matrix x0(rows, m);
  for (Index i = 0; i < rows; ++i) {
    const Trajectory& tr = *batch[static_cast<std::size_t>(i)];
    if (tr.length() != T) throw ContractViolation("aknet_filter: trajectories differ in length");
    x0.row(i) = tr.x0.transpose();
  }
  BatchRunner runner(model, gain_net, hyper, x0);
  std::vector<Matrix> out(batch.size(), Matrix(static_cast<Index>(T), m));
  Matrix y(rows, n);
  std::vector<double> sow_t(batch.size(), 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (Index i = 0; i < rows; ++i) {
      const auto k = static_cast<std::size_t>(i);
      y.row(i) = batch[k]->observations.row(static_cast<Index>(t));
      if (hyper != nullptr) sow_t[k] = (*sows[k])[t];
    }
    StepResult r = runner.step(y, sow_t);
    for (Index i = 0; i < rows; ++i) out[static_cast<std::size_t>(i)].row(static_cast<Index>(t)) = r.x_post.row(i);
  }
  return out;
}

}  // namespace aknet
