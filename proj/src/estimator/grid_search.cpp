#include "aknet/estimator/grid_search.hpp"

#include "aknet/errors.hpp"
#include "aknet/filter/aknet_filter.hpp"

#include <algorithm>
#include <cmath>

namespace aknet {

GridEstimator GridEstimator::log_spaced(double lo, double hi, std::size_t count,
                                        std::size_t window) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw ContractViolation("GridEstimator: need 0 < lo <= hi and count > 0");
  }
  GridEstimator g;
  g.window = window;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    g.grid.push_back(std::pow(10.0, a + frac * (b - a)));
  }
  return g;
}

void GridEstimator::validate() const {
  if (grid.empty()) throw ContractViolation("GridEstimator: grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ContractViolation("GridEstimator: grid must be sorted ascending");
  }
  for (double s : grid) {
    if (!(s > 0.0)) throw ContractViolation("GridEstimator: grid entries must be positive");
  }
}

std::vector<double> grid_search_losses(const SSModel& model, const Matrix& observations,
                                       const GainNet& gain_net, const HyperNet& hyper,
                                       std::span<const double> grid, const Vector& x0) {
  if (observations.rows() < 2) throw ContractViolation("grid_search_sow: window length must be >= 2");
  if (grid.empty()) throw ContractViolation("grid_search_sow: grid is empty");
  const auto rows = static_cast<Index>(grid.size());
  Matrix x0_rows = x0.transpose().replicate(rows, 1);
  BatchRunner runner(model, gain_net, &hyper, x0_rows);
  std::vector<double> loss(grid.size(), 0.0);
  for (Index t = 0; t < observations.rows(); ++t) {
    Matrix y = observations.row(t).replicate(rows, 1);
    StepResult r = runner.step(y, grid);
    for (Index i = 0; i < rows; ++i) loss[static_cast<std::size_t>(i)] += r.innovation.row(i).squaredNorm();
  }
  return loss;
}

double grid_search_sow(const SSModel& model, const Matrix& observations, const GainNet& gain_net,
                       const HyperNet& hyper, std::span<const double> grid, const Vector& x0) {
  GridEstimator{std::vector<double>(grid.begin(), grid.end()), 0}.validate();
  const auto loss = grid_search_losses(model, observations, gain_net, hyper, grid, x0);
  std::size_t best = 0;
  for (std::size_t i = 1; i < loss.size(); ++i) {
    if (loss[i] < loss[best]) best = i;
  }
  return grid[best];
}

}  // namespace aknet
