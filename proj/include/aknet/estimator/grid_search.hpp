#pragma once

#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/ssm/model.hpp"

#include <span>
#include <vector>

namespace aknet {

struct GridEstimator {
  std::vector<double> grid;  // ascending SoW candidates
  std::size_t window = 0;    // observations scored per search; 0 = whole trajectory

  static GridEstimator log_spaced(double lo, double hi, std::size_t count, std::size_t window);
  void validate() const;
};

// Returns the grid SoW whose AKNet run over `observations` (W x n, W >= 2)
// minimizes sum_t |y_t - y_{t|t-1}|^2. Ties go to the smallest SoW. All
// candidates are filtered as one batch from the same start state x0.
double grid_search_sow(const SSModel& model, const Matrix& observations, const GainNet& gain_net,
                       const HyperNet& hyper, std::span<const double> grid, const Vector& x0);

// Per-candidate unsupervised prediction losses, in grid order.
std::vector<double> grid_search_losses(const SSModel& model, const Matrix& observations,
                                       const GainNet& gain_net, const HyperNet& hyper,
                                       std::span<const double> grid, const Vector& x0);

}  // namespace aknet
