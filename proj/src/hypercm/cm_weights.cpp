#include "aknet/hypercm/cm_weights.hpp"

#include "aknet/errors.hpp"

namespace aknet {

Index total_cm_width(const std::vector<CMSite>& sites) {
  Index total = 0;
  for (const auto& s : sites) total += s.width;
  return total;
}

CMWeights CMWeights::identity(Index rows, Index width) {
  return CMWeights{Matrix::Ones(rows, width), Matrix::Zero(rows, width)};
}

Matrix cm_apply(const Matrix& z, const Matrix& g, const Matrix& s, Activation act) {
  if (z.rows() != g.rows() || z.cols() != g.cols() || z.rows() != s.rows() ||
      z.cols() != s.cols()) {
    throw ContractViolation("cm_apply: length mismatch z=" + shape_string(z) +
                            " g=" + shape_string(g) + " s=" + shape_string(s));
  }
  return activate(z.cwiseProduct(g) + s, act);
}

}  // namespace aknet
