#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qweblab {

// Reverse-mode tape over dense Eigen matrices. One tape = one forward pass;
// nodes are appended in evaluation order, so the reverse sweep is a plain
// backwards loop. Column vectors are n-by-1 matrices.
//
// Instantiated with float for training and double for finite-difference
// checks.

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,          // hadamard
  MatMul,       // A * B
  MatMulTN,     // A^T * B
  AddColVec,    // X + b broadcast over columns
  AffineConst,  // a * X + b, elementwise constants
  ScaleVar,     // X * s, s a 1x1 node
  Relu,
  Tanh,
  Sigmoid,
  SoftmaxCol,   // softmax of an n-by-1 column
  Dot,          // a^T b -> 1x1
  SumAll,       // -> 1x1
  RowSum,       // m-by-n -> m-by-1
  ColSum,       // m-by-n -> 1-by-n
  RowsSlice,    // rows [i0, i0+i1)
  VStack,
  HStack,
  Transpose,
  GatherRows,   // table rows by id -> k-by-d
  EmbedWSum,    // weighted sum of table rows -> d-by-1
  Entry,        // X(i0, i1) -> 1x1
};

template <typename S>
class Tape {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  struct Node {
    Mat val;
    Mat grad;
    Op op = Op::Leaf;
    bool rg = false;  // requires grad (self or any input)
    int in_off = 0, in_n = 0;
    int ids_off = 0, ids_n = 0;
    int i0 = 0, i1 = 0;
    S a = 0, b = 0;
  };

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  void reset() {
    nodes_.clear();
    in_pool_.clear();
    ids_pool_.clear();
    w_pool_.clear();
  }

  const Mat& val(int v) const { return nodes_[v].val; }
  const Mat& grad(int v) const { return nodes_[v].grad; }

  int leaf(Mat m, bool requires_grad = false) {
    Node n;
    n.val = std::move(m);
    n.op = Op::Leaf;
    n.rg = requires_grad && grad_enabled_;
    return push(std::move(n));
  }

  int scalar(S x, bool requires_grad = false) {
    Mat m(1, 1);
    m(0, 0) = x;
    return leaf(std::move(m), requires_grad);
  }

  int add(int a, int b) { return binary(Op::Add, a, b, val(a) + val(b)); }
  int sub(int a, int b) { return binary(Op::Sub, a, b, val(a) - val(b)); }

  int mul(int a, int b) {
    return binary(Op::Mul, a, b, val(a).cwiseProduct(val(b)));
  }

  int matmul(int a, int b) { return binary(Op::MatMul, a, b, val(a) * val(b)); }

  int matmul_tn(int a, int b) {
    return binary(Op::MatMulTN, a, b, val(a).transpose() * val(b));
  }

  int add_colvec(int x, int b) {
    return binary(Op::AddColVec, x, b, val(x).colwise() + val(b).col(0));
  }

  int affine_const(int x, S a, S b) {
    Node n;
    n.val = (val(x).array() * a + b).matrix();
    n.op = Op::AffineConst;
    n.a = a;
    n.b = b;
    return unary(std::move(n), x);
  }

  int scale_var(int x, int s) {
    return binary(Op::ScaleVar, x, s, val(x) * val(s)(0, 0));
  }

  int relu(int x) {
    return unary_simple(Op::Relu, x, val(x).cwiseMax(S(0)));
  }

  int tanh(int x) {
    return unary_simple(Op::Tanh, x, val(x).array().tanh().matrix());
  }

  int sigmoid(int x) {
    return unary_simple(
        Op::Sigmoid, x,
        (S(1) / (S(1) + (-val(x).array()).exp())).matrix());
  }

  int softmax_col(int x) {
    const Mat& v = val(x);
    if (v.cols() != 1) throw std::invalid_argument("softmax_col wants a column");
    Eigen::Array<S, Eigen::Dynamic, 1> e = (v.col(0).array() - v.col(0).maxCoeff()).exp();
    Mat y = (e / e.sum()).matrix();
    return unary_simple(Op::SoftmaxCol, x, std::move(y));
  }

  int dot(int a, int b) {
    Mat y(1, 1);
    y(0, 0) = (val(a).array() * val(b).array()).sum();
    return binary(Op::Dot, a, b, std::move(y));
  }

  int sum_all(int x) {
    Mat y(1, 1);
    y(0, 0) = val(x).sum();
    return unary_simple(Op::SumAll, x, std::move(y));
  }

  int row_sum(int x) {
    return unary_simple(Op::RowSum, x, val(x).rowwise().sum());
  }

  int col_sum(int x) {
    return unary_simple(Op::ColSum, x, val(x).colwise().sum());
  }

  int rows(int x, int first, int count) {
    Node n;
    n.val = val(x).middleRows(first, count);
    n.op = Op::RowsSlice;
    n.i0 = first;
    n.i1 = count;
    return unary(std::move(n), x);
  }

  int entry(int x, int r, int c) {
    Node n;
    n.val = Mat(1, 1);
    n.val(0, 0) = val(x)(r, c);
    n.op = Op::Entry;
    n.i0 = r;
    n.i1 = c;
    return unary(std::move(n), x);
  }

  int transpose(int x) {
    return unary_simple(Op::Transpose, x, val(x).transpose());
  }

  int vstack(std::span<const int> parts) {
    return stack(Op::VStack, parts);
  }

  int hstack(std::span<const int> parts) {
    return stack(Op::HStack, parts);
  }

  int gather_rows(int table, std::span<const int> ids) {
    const Mat& t = val(table);
    Node n;
    n.val = Mat(static_cast<int>(ids.size()), t.cols());
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= t.rows())
        throw std::out_of_range("embedding id out of range");
      n.val.row(static_cast<int>(i)) = t.row(ids[i]);
    }
    n.op = Op::GatherRows;
    n.ids_off = static_cast<int>(ids_pool_.size());
    n.ids_n = static_cast<int>(ids.size());
    ids_pool_.insert(ids_pool_.end(), ids.begin(), ids.end());
    return unary(std::move(n), table);
  }

  // sum_i w_i * table.row(ids[i]), as a column. Empty id list -> zero vector.
  int embed_wsum(int table, std::span<const int> ids, std::span<const double> w) {
    const Mat& t = val(table);
    Node n;
    n.val = Mat::Zero(t.cols(), 1);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= t.rows())
        throw std::out_of_range("embedding id out of range");
      n.val.col(0) += static_cast<S>(w[i]) * t.row(ids[i]).transpose();
    }
    n.op = Op::EmbedWSum;
    n.ids_off = static_cast<int>(ids_pool_.size());
    n.ids_n = static_cast<int>(ids.size());
    n.i0 = static_cast<int>(w_pool_.size());  // weight offset
    ids_pool_.insert(ids_pool_.end(), ids.begin(), ids.end());
    w_pool_.insert(w_pool_.end(), w.begin(), w.end());
    return unary(std::move(n), table);
  }

  // Reverse sweep from a 1x1 loss node.
  void backward(int loss) {
    if (!grad_enabled_) throw std::logic_error("backward on a no-grad tape");
    if (val(loss).size() != 1) throw std::invalid_argument("loss must be 1x1");
    for (Node& n : nodes_) n.grad.setZero(n.val.rows(), n.val.cols());
    nodes_[loss].grad(0, 0) = S(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (i > loss || !nodes_[i].rg) continue;
      backprop(i);
    }
  }

 private:
  int push(Node n) {
#ifndef NDEBUG
    assert(n.val.allFinite());
#endif
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int unary(Node n, int x) {
    n.in_off = static_cast<int>(in_pool_.size());
    n.in_n = 1;
    in_pool_.push_back(x);
    n.rg = nodes_[x].rg;
    return push(std::move(n));
  }

  int unary_simple(Op op, int x, Mat y) {
    Node n;
    n.val = std::move(y);
    n.op = op;
    return unary(std::move(n), x);
  }

  int binary(Op op, int a, int b, Mat y) {
    Node n;
    n.val = std::move(y);
    n.op = op;
    n.in_off = static_cast<int>(in_pool_.size());
    n.in_n = 2;
    in_pool_.push_back(a);
    in_pool_.push_back(b);
    n.rg = nodes_[a].rg || nodes_[b].rg;
    return push(std::move(n));
  }

  int stack(Op op, std::span<const int> parts) {
    if (parts.empty()) throw std::invalid_argument("stack of nothing");
    Eigen::Index rows = 0, cols = 0;
    for (int p : parts) {
      if (op == Op::VStack) {
        rows += val(p).rows();
        cols = val(p).cols();
      } else {
        cols += val(p).cols();
        rows = val(p).rows();
      }
    }
    Node n;
    n.val = Mat(rows, cols);
    Eigen::Index at = 0;
    for (int p : parts) {
      if (op == Op::VStack) {
        n.val.middleRows(at, val(p).rows()) = val(p);
        at += val(p).rows();
      } else {
        n.val.middleCols(at, val(p).cols()) = val(p);
        at += val(p).cols();
      }
    }
    n.op = op;
    n.in_off = static_cast<int>(in_pool_.size());
    n.in_n = static_cast<int>(parts.size());
    for (int p : parts) {
      in_pool_.push_back(p);
      n.rg = n.rg || nodes_[p].rg;
    }
    return push(std::move(n));
  }

  void backprop(int i) {
    Node& n = nodes_[i];
    const Mat& g = n.grad;
    const int* in = in_pool_.data() + n.in_off;
    auto G = [&](int k) -> Mat& { return nodes_[in[k]].grad; };
    auto V = [&](int k) -> const Mat& { return nodes_[in[k]].val; };
    auto want = [&](int k) { return nodes_[in[k]].rg; };

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        if (want(0)) G(0) += g;
        if (want(1)) G(1) += g;
        break;
      case Op::Sub:
        if (want(0)) G(0) += g;
        if (want(1)) G(1) -= g;
        break;
      case Op::Mul:
        if (want(0)) G(0).array() += g.array() * V(1).array();
        if (want(1)) G(1).array() += g.array() * V(0).array();
        break;
      case Op::MatMul:
        if (want(0)) G(0).noalias() += g * V(1).transpose();
        if (want(1)) G(1).noalias() += V(0).transpose() * g;
        break;
      case Op::MatMulTN:
        if (want(0)) G(0).noalias() += V(1) * g.transpose();
        if (want(1)) G(1).noalias() += V(0) * g;
        break;
      case Op::AddColVec:
        if (want(0)) G(0) += g;
        if (want(1)) G(1).col(0) += g.rowwise().sum();
        break;
      case Op::AffineConst:
        if (want(0)) G(0) += n.a * g;
        break;
      case Op::ScaleVar:
        if (want(0)) G(0) += g * V(1)(0, 0);
        if (want(1)) G(1)(0, 0) += (g.array() * V(0).array()).sum();
        break;
      case Op::Relu:
        if (want(0))
          G(0).array() += g.array() * (n.val.array() > S(0)).template cast<S>();
        break;
      case Op::Tanh:
        if (want(0))
          G(0).array() += g.array() * (S(1) - n.val.array().square());
        break;
      case Op::Sigmoid:
        if (want(0))
          G(0).array() += g.array() * n.val.array() * (S(1) - n.val.array());
        break;
      case Op::SoftmaxCol:
        if (want(0)) {
          S dot = (g.array() * n.val.array()).sum();
          G(0).array() += n.val.array() * (g.array() - dot);
        }
        break;
      case Op::Dot:
        if (want(0)) G(0) += g(0, 0) * V(1);
        if (want(1)) G(1) += g(0, 0) * V(0);
        break;
      case Op::SumAll:
        if (want(0)) G(0).array() += g(0, 0);
        break;
      case Op::RowSum:
        if (want(0)) G(0).colwise() += g.col(0);
        break;
      case Op::ColSum:
        if (want(0)) G(0).rowwise() += g.row(0);
        break;
      case Op::RowsSlice:
        if (want(0)) G(0).middleRows(n.i0, n.i1) += g;
        break;
      case Op::Entry:
        if (want(0)) G(0)(n.i0, n.i1) += g(0, 0);
        break;
      case Op::Transpose:
        if (want(0)) G(0) += g.transpose();
        break;
      case Op::VStack: {
        Eigen::Index at = 0;
        for (int k = 0; k < n.in_n; ++k) {
          if (want(k)) G(k) += g.middleRows(at, V(k).rows());
          at += V(k).rows();
        }
        break;
      }
      case Op::HStack: {
        Eigen::Index at = 0;
        for (int k = 0; k < n.in_n; ++k) {
          if (want(k)) G(k) += g.middleCols(at, V(k).cols());
          at += V(k).cols();
        }
        break;
      }
      case Op::GatherRows:
        if (want(0)) {
          const int* ids = ids_pool_.data() + n.ids_off;
          for (int k = 0; k < n.ids_n; ++k) G(0).row(ids[k]) += g.row(k);
        }
        break;
      case Op::EmbedWSum:
        if (want(0)) {
          const int* ids = ids_pool_.data() + n.ids_off;
          const double* wp = w_pool_.data() + n.i0;
          for (int k = 0; k < n.ids_n; ++k)
            G(0).row(ids[k]) += static_cast<S>(wp[k]) * g.col(0).transpose();
        }
        break;
    }
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::vector<int> in_pool_;
  std::vector<int> ids_pool_;
  std::vector<double> w_pool_;
};

}  // namespace qweblab
