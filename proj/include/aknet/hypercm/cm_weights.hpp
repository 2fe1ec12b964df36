#pragma once

#include "aknet/numerics/matrix.hpp"

#include <string>
#include <vector>

namespace aknet {

// A modulated pre-activation inside the gain network: `width` consecutive
// entries starting at `offset` in the flattened modulation vector.
struct CMSite {
  std::string name;
  Index offset = 0;
  Index width = 0;
  Activation activation = Activation::kIdentity;
};

Index total_cm_width(const std::vector<CMSite>& sites);

// Per-row gains and shifts for every modulated neuron (rows x total width).
// Identity is gain = 1, shift = 0.
struct CMWeights {
  Matrix gain;
  Matrix shift;

  static CMWeights identity(Index rows, Index width);
  Index rows() const { return gain.rows(); }
  Index width() const { return gain.cols(); }
};

// act(z .* g + s). Throws ContractViolation on length mismatch.
Matrix cm_apply(const Matrix& z, const Matrix& g, const Matrix& s, Activation act);

}  // namespace aknet
