#pragma once

#include "aknet/numerics/matrix.hpp"
#include "aknet/numerics/param_store.hpp"

#include <cstdint>
#include <vector>

namespace aknet {

// Handle to a node recorded on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Matrix-valued reverse-mode autodiff tape.
//
// Nodes are appended in evaluation order, so the node list is already
// topologically sorted and backward() is a single reverse sweep. Rows are
// typically a batch of independent trajectories; every op except matmul and
// the explicit reductions acts row-wise.
//
// A tape is meant to be rebuilt per minibatch; it is not thread-safe.
class Tape {
 public:
  Tape() = default;

  Var constant(Matrix value);
  // Leaf bound to one block of `store`. The store must outlive the tape.
  Var parameter(const ParamStore& store, std::size_t block);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // element-wise
  // a (r x c) plus a 1 x c row broadcast over rows.
  Var add_row(Var a, Var row);
  Var scale(Var a, double factor);
  Var add_scalar(Var a, double offset);
  Var activate(Var a, Activation act);
  Var sqrt(Var a);
  // Row-wise squared norm, r x c -> r x 1.
  Var row_sq_sum(Var a);
  // Divides every row of a by the matching entry of the r x 1 column.
  Var div_rows(Var a, Var column);
  Var cols(Var a, Index start, Index count);
  Var concat_cols(Var a, Var b);
  // Each row of `gain` holds a row-major out x in matrix; returns the
  // row-wise product with `vec` (r x in) as an r x out matrix.
  Var row_matvec(Var gain, Var vec, Index out_dim);
  Var sum(Var a);  // -> 1 x 1

  const Matrix& value(Var v) const;
  Index rows(Var v) const { return value(v).rows(); }
  Index cols(Var v) const { return value(v).cols(); }
  std::size_t size() const { return nodes_.size(); }

  // Runs the reverse sweep from a 1 x 1 node. Clears previous gradients, so
  // repeated calls are idempotent.
  void backward(Var loss);
  // Gradient of the last backward() with respect to node v (zeros if unreached).
  Matrix grad(Var v) const;
  // Gradient laid out like store.values(); zeros for blocks not on the tape.
  std::vector<double> gradient(const ParamStore& store) const;
  // backward(loss) followed by gradient(store).
  std::vector<double> grad(Var loss, const ParamStore& store);

 private:
  enum class Op : std::uint8_t {
    kConstant,
    kParameter,
    kMatmul,
    kAdd,
    kSub,
    kMul,
    kAddRow,
    kScale,
    kAddScalar,
    kActivate,
    kSqrt,
    kRowSqSum,
    kDivRows,
    kCols,
    kConcatCols,
    kRowMatvec,
    kSum,
  };

  struct Node {
    Op op = Op::kConstant;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double scalar = 0.0;
    Index i0 = 0;
    Activation act = Activation::kIdentity;
    const ParamStore* store = nullptr;
    std::size_t block = 0;
    Matrix value;
    Matrix grad;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void accumulate(std::int32_t id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(std::int32_t id, const Expr& g);

  std::vector<Node> nodes_;
};

}  // namespace aknet
