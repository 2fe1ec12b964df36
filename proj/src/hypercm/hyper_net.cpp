#include "aknet/hypercm/hyper_net.hpp"

#include "aknet/errors.hpp"

#include <cmath>

namespace aknet {

namespace {

enum Block : std::size_t { kEmbedW, kEmbedB, kHiddenW, kHiddenB, kHeadW, kHeadB };

}  // namespace

double encode_sow(double sow) {
  if (!(sow > 0.0) || !std::isfinite(sow)) {
    throw ContractViolation("SoW must be positive and finite, got " + std::to_string(sow));
  }
  return std::log10(sow);
}

HyperNet::HyperNet(HyperNetConfig config) : config_(config) {
  if (config_.hidden <= 0 || config_.output_dim <= 0) {
    throw ContractViolation("HyperNetConfig: dimensions must be positive");
  }
  const Index h = config_.hidden;
  params_.add_block("psi/embed.weight", 2, h);
  params_.add_block("psi/embed.bias", 1, h);
  params_.add_block("psi/hidden.weight", h, h);
  params_.add_block("psi/hidden.bias", 1, h);
  params_.add_block("psi/head.weight", h, config_.output_dim);
  params_.add_block("psi/head.bias", 1, config_.output_dim);
}

HyperNet HyperNet::create(const GainNet& target, Index hidden, Rng& rng) {
  HyperNet net(HyperNetConfig{hidden, target.cm_width()});
  auto fill = [&](std::size_t blk, Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto view = net.params_.view(blk);
    for (Index i = 0; i < view.size(); ++i) view.data()[i] = dist(rng);
  };
  fill(kEmbedW, 2);
  fill(kEmbedB, 2);
  fill(kHiddenW, hidden);
  fill(kHiddenB, hidden);
  return net;
}

Vector HyperNet::forward(double sow, int switch_bit) const {
  if (switch_bit != 0 && switch_bit != 1) throw ContractViolation("switch must be 0 or 1");
  const double sows[1] = {sow};
  CMWeights w = modulation(sows);
  return switch_bit == 1 ? Vector(w.gain.row(0).transpose()) : Vector(w.shift.row(0).transpose());
}

CMWeights HyperNet::modulation(std::span<const double> sows) const {
  Matrix encoded(static_cast<Index>(sows.size()), 1);
  for (std::size_t i = 0; i < sows.size(); ++i) encoded(static_cast<Index>(i), 0) = encode_sow(sows[i]);
  Tape tape;
  HyperNetGraph graph(tape, *this, false);
  auto vars = graph.forward(tape.constant(std::move(encoded)));
  return CMWeights{tape.value(vars.gain), tape.value(vars.shift)};
}

HyperNetGraph::HyperNetGraph(Tape& tape, const HyperNet& net, bool trainable) : tape_(tape) {
  const ParamStore& params = net.params();
  for (std::size_t i = 0; i < params.blocks().size(); ++i) {
    p_.push_back(trainable ? tape.parameter(params, i) : tape.constant(Matrix(params.view(i))));
  }
}

Var HyperNetGraph::raw(Var encoded, double switch_value) {
  const Index rows = tape_.rows(encoded);
  Var input = tape_.concat_cols(encoded, tape_.constant(Matrix::Constant(rows, 1, switch_value)));
  Var h1 = tape_.activate(tape_.add_row(tape_.matmul(input, p_[kEmbedW]), p_[kEmbedB]),
                          Activation::kTanh);
  Var h2 = tape_.activate(tape_.add_row(tape_.matmul(h1, p_[kHiddenW]), p_[kHiddenB]),
                          Activation::kTanh);
  return tape_.add_row(tape_.matmul(h2, p_[kHeadW]), p_[kHeadB]);
}

ModulationVars HyperNetGraph::forward(Var encoded) {
  if (tape_.cols(encoded) != 1) throw ContractViolation("hypernet input must be a column");
  Var gain = tape_.add_scalar(tape_.activate(raw(encoded, 1.0), Activation::kTanh), 1.0);
  Var shift = raw(encoded, 0.0);
  return ModulationVars{gain, shift};
}

}  // namespace aknet
