#include "aknet/numerics/tape.hpp"

#include "aknet/errors.hpp"

#include <cmath>
#include <string>

namespace aknet {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                            shape_string(b));
  }
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractViolation("tape: invalid variable handle");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(const ParamStore& store, std::size_t block) {
  Node n;
  n.op = Op::kParameter;
  n.store = &store;
  n.block = block;
  n.value = store.view(block);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.rows()) {
    throw ContractViolation("matmul: dimension mismatch " + shape_string(va) + " * " +
                            shape_string(vb));
  }
  Node n;
  n.op = Op::kMatmul;
  n.a = a.id;
  n.b = b.id;
  n.value.noalias() = va * vb;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& va = value(a);
  const Matrix& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw ContractViolation("add_row: expected 1x" + std::to_string(va.cols()) + " row, got " +
                            shape_string(vr));
  }
  Node n;
  n.op = Op::kAddRow;
  n.a = a.id;
  n.b = row.id;
  n.value = va.rowwise() + vr.row(0);
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.scalar = factor;
  n.value = value(a) * factor;
  return push(std::move(n));
}

Var Tape::add_scalar(Var a, double offset) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.id;
  n.scalar = offset;
  n.value = value(a).array() + offset;
  return push(std::move(n));
}

Var Tape::activate(Var a, Activation act) {
  Node n;
  n.op = Op::kActivate;
  n.a = a.id;
  n.act = act;
  n.value = aknet::activate(value(a), act);
  return push(std::move(n));
}

Var Tape::sqrt(Var a) {
  Node n;
  n.op = Op::kSqrt;
  n.a = a.id;
  n.value = value(a).array().sqrt();
  return push(std::move(n));
}

Var Tape::row_sq_sum(Var a) {
  Node n;
  n.op = Op::kRowSqSum;
  n.a = a.id;
  n.value = value(a).rowwise().squaredNorm();
  return push(std::move(n));
}

Var Tape::div_rows(Var a, Var column) {
  const Matrix& va = value(a);
  const Matrix& vc = value(column);
  if (vc.cols() != 1 || vc.rows() != va.rows()) {
    throw ContractViolation("div_rows: expected " + std::to_string(va.rows()) + "x1 column, got " +
                            shape_string(vc));
  }
  Node n;
  n.op = Op::kDivRows;
  n.a = a.id;
  n.b = column.id;
  n.value = va.array().colwise() / vc.col(0).array();
  return push(std::move(n));
}

Var Tape::cols(Var a, Index start, Index count) {
  const Matrix& va = value(a);
  if (start < 0 || count <= 0 || start + count > va.cols()) {
    throw ContractViolation("cols: slice [" + std::to_string(start) + ", " +
                            std::to_string(start + count) + ") out of range for " +
                            shape_string(va));
  }
  Node n;
  n.op = Op::kCols;
  n.a = a.id;
  n.i0 = start;
  n.value = va.middleCols(start, count);
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows()) {
    throw ContractViolation("concat_cols: row mismatch " + shape_string(va) + " | " +
                            shape_string(vb));
  }
  Node n;
  n.op = Op::kConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(va.rows(), va.cols() + vb.cols());
  n.value << va, vb;
  return push(std::move(n));
}

Var Tape::row_matvec(Var gain, Var vec, Index out_dim) {
  const Matrix& vk = value(gain);
  const Matrix& vv = value(vec);
  const Index in_dim = vv.cols();
  if (vk.rows() != vv.rows() || vk.cols() != out_dim * in_dim) {
    throw ContractViolation("row_matvec: gain " + shape_string(vk) + " incompatible with vector " +
                            shape_string(vv) + " and out_dim " + std::to_string(out_dim));
  }
  Node n;
  n.op = Op::kRowMatvec;
  n.a = gain.id;
  n.b = vec.id;
  n.i0 = out_dim;
  n.value = Matrix::Zero(vk.rows(), out_dim);
  for (Index r = 0; r < vk.rows(); ++r) {
    for (Index i = 0; i < out_dim; ++i) {
      double acc = 0.0;
      for (Index j = 0; j < in_dim; ++j) acc += vk(r, i * in_dim + j) * vv(r, j);
      n.value(r, i) = acc;
    }
  }
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = Matrix::Constant(1, 1, value(a).sum());
  return push(std::move(n));
}

template <typename Expr>
void Tape::accumulate_expr(std::int32_t id, const Expr& g) {
  Node& target = nodes_[static_cast<std::size_t>(id)];
  if (target.grad.size() == 0) {
    target.grad = g;
  } else {
    target.grad += g;
  }
}

void Tape::accumulate(std::int32_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractViolation("backward: loss must be 1x1, got " + shape_string(lv));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);

  for (std::size_t k = static_cast<std::size_t>(loss.id) + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (n.grad.size() == 0) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParameter:
        break;
      case Op::kMatmul: {
        const Matrix& va = nodes_[n.a].value;
        const Matrix& vb = nodes_[n.b].value;
        accumulate_expr(n.a, g * vb.transpose());
        accumulate_expr(n.b, va.transpose() * g);
        break;
      }
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kSub:
        accumulate(n.a, g);
        accumulate_expr(n.b, -g);
        break;
      case Op::kMul: {
        Matrix ga = g.cwiseProduct(nodes_[n.b].value);
        Matrix gb = g.cwiseProduct(nodes_[n.a].value);
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case Op::kAddRow:
        accumulate(n.a, g);
        accumulate_expr(n.b, g.colwise().sum());
        break;
      case Op::kScale:
        accumulate_expr(n.a, g * n.scalar);
        break;
      case Op::kAddScalar:
        accumulate(n.a, g);
        break;
      case Op::kActivate: {
        const Matrix& y = n.value;
        switch (n.act) {
          case Activation::kIdentity:
            accumulate(n.a, g);
            break;
          case Activation::kSigmoid:
            accumulate_expr(n.a, (g.array() * y.array() * (1.0 - y.array())).matrix());
            break;
          case Activation::kTanh:
            accumulate_expr(n.a, (g.array() * (1.0 - y.array().square())).matrix());
            break;
          case Activation::kRelu: {
            const Matrix& x = nodes_[n.a].value;
            accumulate_expr(n.a, (x.array() > 0.0).select(g.array(), 0.0).matrix());
            break;
          }
        }
        break;
      }
      case Op::kSqrt: {
        Matrix ga = g;
        for (Index i = 0; i < ga.size(); ++i) {
          const double y = n.value.data()[i];
          ga.data()[i] = y > 0.0 ? ga.data()[i] * 0.5 / y : 0.0;
        }
        accumulate(n.a, ga);
        break;
      }
      case Op::kRowSqSum: {
        const Matrix& x = nodes_[n.a].value;
        accumulate_expr(n.a, (2.0 * (x.array().colwise() * g.col(0).array())).matrix());
        break;
      }
      case Op::kDivRows: {
        const Matrix& x = nodes_[n.a].value;
        const Matrix& c = nodes_[n.b].value;
        Matrix ga = g.array().colwise() / c.col(0).array();
        Matrix gc = -((g.array() * x.array()).rowwise().sum() / c.col(0).array().square()).matrix();
        accumulate(n.a, ga);
        accumulate(n.b, gc);
        break;
      }
      case Op::kCols: {
        const Matrix& x = nodes_[n.a].value;
        Matrix ga = Matrix::Zero(x.rows(), x.cols());
        ga.middleCols(n.i0, g.cols()) = g;
        accumulate(n.a, ga);
        break;
      }
      case Op::kConcatCols: {
        const Index ca = nodes_[n.a].value.cols();
        const Index cb = nodes_[n.b].value.cols();
        Matrix ga = g.leftCols(ca);
        Matrix gb = g.rightCols(cb);
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case Op::kRowMatvec: {
        const Matrix& k = nodes_[n.a].value;
        const Matrix& v = nodes_[n.b].value;
        const Index out_dim = n.i0;
        const Index in_dim = v.cols();
        Matrix gk = Matrix::Zero(k.rows(), k.cols());
        Matrix gv = Matrix::Zero(v.rows(), v.cols());
        for (Index r = 0; r < k.rows(); ++r) {
          for (Index i = 0; i < out_dim; ++i) {
            const double go = g(r, i);
            for (Index j = 0; j < in_dim; ++j) {
              gk(r, i * in_dim + j) = go * v(r, j);
              gv(r, j) += go * k(r, i * in_dim + j);
            }
          }
        }
        accumulate(n.a, gk);
        accumulate(n.b, gv);
        break;
      }
      case Op::kSum: {
        const Matrix& x = nodes_[n.a].value;
        accumulate_expr(n.a, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

std::vector<double> Tape::gradient(const ParamStore& store) const {
  std::vector<double> out(store.size(), 0.0);
  for (const auto& n : nodes_) {
    if (n.op != Op::kParameter || n.store != &store || n.grad.size() == 0) continue;
    const auto& block = store.blocks()[n.block];
    for (std::size_t i = 0; i < block.size(); ++i) out[block.offset + i] += n.grad.data()[i];
  }
  return out;
}

std::vector<double> Tape::grad(Var loss, const ParamStore& store) {
  backward(loss);
  return gradient(store);
}

}  // namespace aknet
