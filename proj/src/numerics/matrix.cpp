#include "aknet/numerics/matrix.hpp"

#include "aknet/errors.hpp"

#include <sstream>

namespace aknet {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: dimension mismatch " + shape_string(a) + " * " +
                            shape_string(b));
  }
  return a * b;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Matrix& m) {
  if (m.rows() != m.cols()) throw ContractViolation("min_eigenvalue: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(m));
  return solver.eigenvalues().minCoeff();
}

bool project_psd(Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(m));
  Eigen::VectorXd values = solver.eigenvalues();
  bool clamped = false;
  for (Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= floor)) {
      values(i) = floor;
      clamped = true;
    }
  }
  if (clamped) {
    const Eigen::MatrixXd& vecs = solver.eigenvectors();
    m = vecs * values.asDiagonal() * vecs.transpose();
  } else {
    m = symmetrized(m);
  }
  return clamped;
}

std::string shape_string(const Matrix& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kRelu:
      return z.cwiseMax(0.0);
  }
  return z;
}

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "unknown";
}

}  // namespace aknet
