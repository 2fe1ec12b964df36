#include "aknet/errors.hpp"
#include "aknet/numerics/matrix.hpp"
#include "aknet/numerics/optimizer.hpp"
#include "aknet/numerics/param_store.hpp"
#include "aknet/numerics/tape.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

namespace aknet {
namespace {

using testing::check_gradient;
using testing::random_matrix;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Matrix a(2, 2);
  a << 1.5, -2.0, 0.25, 7.0;
  EXPECT_EQ(matmul(Matrix::Identity(2, 2), a), a);
}

TEST(Matmul, HandArithmetic) {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(2, 1);
  b << 1, 1;
  Matrix c = matmul(a, b);
  EXPECT_EQ(c(0, 0), 3.0);
  EXPECT_EQ(c(1, 0), 7.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(11);
  Matrix a = random_matrix(5, 4, rng);
  Matrix b = random_matrix(4, 3, rng);
  Matrix c = matmul(a, b);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 3; ++j) {
      double s = 0.0;
      for (Index k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-12);
    }
  }
}

TEST(Matmul, DimensionMismatchThrows) {
  EXPECT_THROW(matmul(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), ContractViolation);
}

TEST(Matmul, AssociativityWithIdentity) {
  std::mt19937_64 rng(12);
  Matrix a = random_matrix(3, 4, rng);
  Matrix b = random_matrix(4, 2, rng);
  const Matrix i = Matrix::Identity(4, 4);
  EXPECT_LE((matmul(matmul(a, i), b) - matmul(a, matmul(i, b))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectPsd, ClampsNegativeEigenvalues) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  EXPECT_TRUE(project_psd(m, 1e-12));
  EXPECT_GE(min_eigenvalue(m), 1e-12 - 1e-15);
  Matrix ok = Matrix::Identity(2, 2);
  EXPECT_FALSE(project_psd(ok, 1e-12));
}

TEST(Tape, SquareGradient) {
  ParamStore store;
  store.add_block("p", 1, 1);
  store.view(0)(0, 0) = 3.0;
  Tape tape;
  Var p = tape.parameter(store, 0);
  auto g = tape.grad(tape.sum(tape.mul(p, p)), store);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0], 6.0);
}

TEST(Tape, ConstantLossHasZeroGradient) {
  ParamStore store;
  store.add_block("w", 2, 2);
  Tape tape;
  tape.parameter(store, 0);
  Var c = tape.constant(Matrix::Constant(1, 1, 4.0));
  auto g = tape.grad(tape.scale(c, 2.0), store);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Tape, NonScalarLossThrows) {
  ParamStore store;
  store.add_block("w", 2, 2);
  Tape tape;
  Var w = tape.parameter(store, 0);
  EXPECT_THROW(tape.backward(w), ContractViolation);
}

TEST(Tape, BackwardIsRepeatable) {
  std::mt19937_64 rng(3);
  ParamStore store;
  store.add_block("w", 3, 3);
  auto v = store.view(0);
  v = random_matrix(3, 3, rng);
  Tape tape;
  Var w = tape.parameter(store, 0);
  Var loss = tape.sum(tape.activate(tape.matmul(w, w), Activation::kTanh));
  auto g1 = tape.grad(loss, store);
  auto g2 = tape.grad(loss, store);
  EXPECT_EQ(g1, g2);
}

// loss = sum(sigmoid(W x + b)) on a 3 x 3 layer.
TEST(Tape, SigmoidLayerMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  ParamStore store;
  const auto w = store.add_block("w", 3, 3);
  const auto b = store.add_block("b", 1, 3);
  store.view(w) = random_matrix(3, 3, rng);
  store.view(b) = random_matrix(1, 3, rng);
  const Matrix x = random_matrix(1, 3, rng);
  auto f = [&](Tape& tape) {
    Var z = tape.add_row(tape.matmul(tape.constant(x), tape.parameter(store, w)),
                         tape.parameter(store, b));
    return tape.sum(tape.activate(z, Activation::kSigmoid));
  };
  Tape tape;
  auto g = tape.grad(f(tape), store);
  auto value = [&] {
    Tape t;
    return t.value(f(t))(0, 0);
  };
  EXPECT_LT(check_gradient(store, g, value, 1e-5).worst, 1e-4);
}

struct OpCase {
  const char* name;
  // Builds a non-scalar output from the parameter leaves a (3x4), b (4x2), c (1x4).
  std::function<Var(Tape&, Var, Var, Var)> build;
};

class TapeOp : public ::testing::TestWithParam<OpCase> {};

TEST_P(TapeOp, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  ParamStore store;
  const auto a = store.add_block("a", 3, 4);
  const auto b = store.add_block("b", 4, 2);
  const auto c = store.add_block("c", 1, 4);
  store.view(a) = random_matrix(3, 4, rng);
  store.view(b) = random_matrix(4, 2, rng);
  store.view(c) = random_matrix(1, 4, rng);
  Matrix weights;
  auto f = [&](Tape& tape) {
    Var out = GetParam().build(tape, tape.parameter(store, a), tape.parameter(store, b),
                               tape.parameter(store, c));
    if (weights.size() == 0) {
      std::mt19937_64 wr(99);
      weights = random_matrix(tape.rows(out), tape.cols(out), wr);
    }
    return tape.sum(tape.mul(out, tape.constant(weights)));
  };
  Tape tape;
  auto g = tape.grad(f(tape), store);
  auto value = [&] {
    Tape t;
    return t.value(f(t))(0, 0);
  };
  const auto check = check_gradient(store, g, value);
  EXPECT_LT(check.worst, 1e-6) << GetParam().name << " block " << check.worst_block;
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, TapeOp,
    ::testing::Values(
        OpCase{"matmul", [](Tape& t, Var a, Var b, Var) { return t.matmul(a, b); }},
        OpCase{"add", [](Tape& t, Var a, Var, Var) { return t.add(a, t.scale(a, 0.5)); }},
        OpCase{"sub", [](Tape& t, Var a, Var b, Var) {
                 return t.sub(t.matmul(a, b), t.cols(a, 1, 2));
               }},
        OpCase{"mul", [](Tape& t, Var a, Var, Var) { return t.mul(a, a); }},
        OpCase{"add_row", [](Tape& t, Var a, Var, Var c) { return t.add_row(a, c); }},
        OpCase{"add_scalar", [](Tape& t, Var a, Var, Var) { return t.add_scalar(a, 2.0); }},
        OpCase{"sigmoid",
               [](Tape& t, Var a, Var, Var) { return t.activate(a, Activation::kSigmoid); }},
        OpCase{"tanh", [](Tape& t, Var a, Var, Var) { return t.activate(a, Activation::kTanh); }},
        OpCase{"relu", [](Tape& t, Var a, Var, Var) { return t.activate(a, Activation::kRelu); }},
        OpCase{"sqrt",
               [](Tape& t, Var a, Var, Var) { return t.sqrt(t.add_scalar(t.mul(a, a), 1.0)); }},
        OpCase{"row_sq_sum", [](Tape& t, Var a, Var, Var) { return t.row_sq_sum(a); }},
        OpCase{"div_rows",
               [](Tape& t, Var a, Var, Var) {
                 return t.div_rows(a, t.add_scalar(t.row_sq_sum(a), 0.5));
               }},
        OpCase{"concat_cols", [](Tape& t, Var a, Var b, Var) {
                 return t.concat_cols(t.matmul(a, b), a);
               }},
        OpCase{"row_matvec",
               [](Tape& t, Var a, Var b, Var) {
                 // rows of a hold 2 x 2 matrices; vec is a 3 x 2 slice of a*b
                 return t.row_matvec(a, t.matmul(a, b), 2);
               }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  ParamStore store;
  store.add_block("p", 1, 3);
  store.view(0) << 1.0, -2.0, 3.0;
  const ParamStore before = store;
  AdamOptimizer opt(store);
  std::vector<double> zero(3, 0.0);
  for (int i = 0; i < 10; ++i) opt.step(store, zero);
  EXPECT_EQ(store, before);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  ParamStore store;
  store.add_block("p", 1, 1);
  AdamOptimizer opt(store);
  std::vector<double> g{2.5};
  double prev = 0.0;
  for (int i = 0; i < 100; ++i) {
    opt.step(store, g);
    const double now = store.values()[0];
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Adam, MinimizesQuadraticBowl) {
  ParamStore store;
  store.add_block("p", 1, 4);
  store.view(0) << 0.1, -0.2, 0.05, 0.3;
  AdamOptimizer opt(store);
  double f = 1.0;
  for (int i = 0; i < 2000 && f >= 1e-6; ++i) {
    std::vector<double> g(4);
    f = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double p = store.values()[k];
      f += p * p;
      g[k] = 2.0 * p;
    }
    opt.step(store, g);
  }
  EXPECT_LT(f, 1e-6);
}

TEST(Adam, MatchesScalarUpdateRule) {
  ParamStore store;
  store.add_block("p", 1, 1);
  store.values()[0] = 0.7;
  AdamOptimizer opt(store, AdamConfig{0.01});
  double p = 0.7, m = 0.0, v = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double g = std::sin(p) + 0.1 * t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    p -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
    std::vector<double> grad{std::sin(store.values()[0]) + 0.1 * t};
    opt.step(store, grad);
    EXPECT_NEAR(store.values()[0], p, 1e-14);
  }
}

TEST(Adam, NonFiniteGradientNamesBlock) {
  ParamStore store;
  store.add_block("first", 1, 1);
  store.add_block("second", 1, 2);
  const ParamStore before = store;
  AdamOptimizer opt(store);
  std::vector<double> g{0.1, 0.2, std::numeric_limits<double>::quiet_NaN()};
  try {
    opt.step(store, g);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
  }
  EXPECT_EQ(store, before);
}

}  // namespace
}  // namespace aknet
