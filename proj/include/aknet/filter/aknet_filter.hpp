#pragma once

#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/ssm/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace aknet {

// Recurrent filter state for a batch of trajectories (one row each).
struct BatchStateValues {
  Matrix x_post;        // x_{t-1}
  Matrix x_prior_prev;  // x_{t-1|t-2}
  Matrix hidden;        // GRU state
  Matrix scale_y;       // running mean square of the innovation (rows x 1)
  Matrix scale_x;       // running mean square of the update difference
  std::size_t step = 0;

  static BatchStateValues initial(const Matrix& x0, Index hidden_size);
  Index rows() const { return x_post.rows(); }
};

// Single-trajectory view of the same state.
struct FilterNetState {
  BatchStateValues batch;

  static FilterNetState initial(const Vector& x0, Index hidden_size);
};

// Builds the AKNet predict/update recursion on a tape:
//   x_{t|t-1} = F x_{t-1}, y_{t|t-1} = H x_{t|t-1}, x_t = x_{t|t-1} + K_t (y_t - y_{t|t-1})
// with K_t from the gain network, modulated by the hypernetwork when one is given.
class FilterGraph {
 public:
  struct Options {
    bool train_gain_net = false;
    bool train_hyper = false;
  };

  FilterGraph(Tape& tape, const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
              Options options);

  struct StateVars {
    Var x_post;
    Var x_prior_prev;
    Var hidden;
    Var scale_y;
    Var scale_x;
    std::size_t step = 0;
  };

  struct StepVars {
    Var x_post;
    Var x_prior;
    Var y_prior;
    Var innovation;
    Var gain;
    StateVars next;
  };

  StateVars load(const BatchStateValues& values);
  BatchStateValues store(const StateVars& vars) const;

  // y: rows x n. sow is consulted only when a hypernetwork is attached.
  // Modulation is recomputed only when the SoW row values change.
  StepVars step(const StateVars& state, Var y, std::span<const double> sow);

  // Explicit CM weights instead of the hypernetwork (used for identity checks).
  StepVars step_with_cm(const StateVars& state, Var y, const CMWeights* cm);

 private:
  StepVars step_impl(const StateVars& state, Var y, const ModulationVars* mod);
  Var normalize(Var v, Var& scale, bool first);

  Tape& tape_;
  const SSModel& model_;
  const GainNet& gain_net_;
  const HyperNet* hyper_;
  GainNetGraph gain_graph_;
  std::optional<HyperNetGraph> hyper_graph_;
  Var f_t_;
  Var h_t_;
  std::vector<double> cached_sow_;
  std::optional<ModulationVars> cached_mod_;
};

struct StepResult {
  Matrix x_post;
  Matrix x_prior;
  Matrix y_prior;
  Matrix innovation;
  Matrix gain;  // rows x (m n), row-major m x n per row
};

// Evaluation-time batch stepper. Each step is recorded on a fresh tape, so
// memory stays flat over long trajectories.
class BatchRunner {
 public:
  BatchRunner(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
              const Matrix& x0);

  StepResult step(const Matrix& y, std::span<const double> sow);
  const BatchStateValues& state() const { return state_; }

 private:
  const SSModel& model_;
  const GainNet& gain_net_;
  const HyperNet* hyper_;
  BatchStateValues state_;
};

struct AknetStep {
  Vector x_post;
  Vector x_prior;
  Vector y_prior;
  Matrix gain;  // m x n
};

// One filter step for a single trajectory. cm == nullptr means no modulation.
AknetStep aknet_step(const SSModel& model, const Vector& y, const GainNet& gain_net,
                     FilterNetState& state, const CMWeights* cm);

// Runs AKNet over whole trajectories with the SoW sequence supplied per
// trajectory (sows[i] has one entry per step). Returns T x m estimates each.
std::vector<Matrix> aknet_filter(const SSModel& model, const GainNet& gain_net,
                                 const HyperNet* hyper, std::span<const Trajectory* const> batch,
                                 std::span<const std::vector<double>* const> sows);

}  // namespace aknet
