#pragma once

#include <Eigen/Dense>

#include <string>

namespace aknet {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Dimension-checked product. Throws ContractViolation on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);

Matrix symmetrized(const Matrix& m);

// Smallest eigenvalue of the symmetric part of a square matrix.
double min_eigenvalue(const Matrix& m);

// Projects a symmetric matrix onto the PSD cone by clamping eigenvalues at `floor`.
// Returns true if any eigenvalue was clamped.
bool project_psd(Matrix& m, double floor);

std::string shape_string(const Matrix& m);

enum class Activation { kIdentity, kSigmoid, kTanh, kRelu };

Matrix activate(const Matrix& z, Activation act);

const char* activation_name(Activation act);

}  // namespace aknet
