#include "odp/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "odp/error.hpp"

namespace odp {

namespace {
constexpr double kProbClamp = 1e-7;

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ConfigError(std::string(op) + ": shape mismatch");
}
}  // namespace

Tensor Tape::push(Node&& n) {
  n.grad = Matrix(n.val.rows, n.val.cols);
  nodes_.push_back(std::move(n));
  return Tensor{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tensor Tape::leaf(const Matrix& m) {
  Node n;
  n.op = Op::Leaf;
  n.val = m;
  return push(std::move(n));
}

Tensor Tape::scalar(double v) {
  Matrix m(1, 1);
  m.v[0] = v;
  return leaf(m);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  Node n;
  n.op = Op::MatMul;
  n.p0 = a.id;
  n.p1 = b.id;
  n.val = mat_mul(nodes_[a.id].val, nodes_[b.id].val);
  return push(std::move(n));
}

Tensor Tape::add(Tensor a, Tensor b) {
  const Matrix& va = nodes_[a.id].val;
  const Matrix& vb = nodes_[b.id].val;
  require_same_shape(va, vb, "add");
  Node n;
  n.op = Op::Add;
  n.p0 = a.id;
  n.p1 = b.id;
  n.val = va;
  for (std::size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] += vb.v[i];
  return push(std::move(n));
}

Tensor Tape::add_rowvec(Tensor a, Tensor row) {
  const Matrix& va = nodes_[a.id].val;
  const Matrix& vr = nodes_[row.id].val;
  if (vr.rows != 1 || vr.cols != va.cols)
    throw ConfigError("add_rowvec: row must be 1 x cols(a)");
  Node n;
  n.op = Op::AddRowVec;
  n.p0 = a.id;
  n.p1 = row.id;
  n.val = va;
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) n.val.at(i, j) += vr.v[j];
  return push(std::move(n));
}

Tensor Tape::sub(Tensor a, Tensor b) {
  const Matrix& va = nodes_[a.id].val;
  const Matrix& vb = nodes_[b.id].val;
  require_same_shape(va, vb, "sub");
  Node n;
  n.op = Op::Sub;
  n.p0 = a.id;
  n.p1 = b.id;
  n.val = va;
  for (std::size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] -= vb.v[i];
  return push(std::move(n));
}

Tensor Tape::mul(Tensor a, Tensor b) {
  const Matrix& va = nodes_[a.id].val;
  const Matrix& vb = nodes_[b.id].val;
  require_same_shape(va, vb, "mul");
  Node n;
  n.op = Op::Mul;
  n.p0 = a.id;
  n.p1 = b.id;
  n.val = va;
  for (std::size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] *= vb.v[i];
  return push(std::move(n));
}

Tensor Tape::scalar_mul(Tensor a, double s) {
  Node n;
  n.op = Op::ScalarMul;
  n.p0 = a.id;
  n.s = s;
  n.val = nodes_[a.id].val;
  for (double& v : n.val.v) v *= s;
  return push(std::move(n));
}

Tensor Tape::sigmoid(Tensor a) {
  Node n;
  n.op = Op::Sigmoid;
  n.p0 = a.id;
  n.val = nodes_[a.id].val;
  for (double& v : n.val.v) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

Tensor Tape::relu(Tensor a) {
  Node n;
  n.op = Op::Relu;
  n.p0 = a.id;
  n.val = nodes_[a.id].val;
  for (double& v : n.val.v) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Tensor Tape::log(Tensor a) {
  Node n;
  n.op = Op::Log;
  n.p0 = a.id;
  n.val = nodes_[a.id].val;
  for (double& v : n.val.v) {
    if (v <= 0.0) throw ConfigError("log: non-positive input");
    v = std::log(v);
  }
  return push(std::move(n));
}

Tensor Tape::softmax(Tensor a) {
  Node n;
  n.op = Op::Softmax;
  n.p0 = a.id;
  n.val = nodes_[a.id].val;
  Matrix& m = n.val;
  for (int i = 0; i < m.rows; ++i) {
    double mx = m.at(i, 0);
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      m.at(i, j) = std::exp(m.at(i, j) - mx);
      sum += m.at(i, j);
    }
    for (int j = 0; j < m.cols; ++j) m.at(i, j) /= sum;
  }
  return push(std::move(n));
}

Tensor Tape::l2_norm_sq(Tensor a) {
  Node n;
  n.op = Op::L2NormSq;
  n.p0 = a.id;
  n.val = Matrix(1, 1);
  double s = 0.0;
  for (double v : nodes_[a.id].val.v) s += v * v;
  n.val.v[0] = s;
  return push(std::move(n));
}

Tensor Tape::mean(Tensor a) {
  Node n;
  n.op = Op::Mean;
  n.p0 = a.id;
  n.val = Matrix(1, 1);
  double s = 0.0;
  for (double v : nodes_[a.id].val.v) s += v;
  n.val.v[0] = s / static_cast<double>(nodes_[a.id].val.v.size());
  return push(std::move(n));
}

Tensor Tape::mean_rows(Tensor a) {
  const Matrix& va = nodes_[a.id].val;
  Node n;
  n.op = Op::MeanRows;
  n.p0 = a.id;
  n.val = Matrix(1, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) n.val.v[j] += va.at(i, j);
  const double inv = 1.0 / static_cast<double>(va.rows);
  for (double& v : n.val.v) v *= inv;
  return push(std::move(n));
}

Tensor Tape::gather_rows(Tensor a, std::span<const int> rows) {
  const Matrix& va = nodes_[a.id].val;
  Node n;
  n.op = Op::GatherRows;
  n.p0 = a.id;
  n.idx.assign(rows.begin(), rows.end());
  n.val = Matrix(static_cast<int>(rows.size()), va.cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t] < 0 || rows[t] >= va.rows)
      throw ConfigError("gather_rows: index out of range");
    for (int j = 0; j < va.cols; ++j)
      n.val.at(static_cast<int>(t), j) = va.at(rows[t], j);
  }
  return push(std::move(n));
}

Tensor Tape::slice_cols(Tensor a, int offset, int len) {
  const Matrix& va = nodes_[a.id].val;
  if (offset < 0 || len <= 0 || offset + len > va.cols)
    throw ConfigError("slice_cols: range out of bounds");
  Node n;
  n.op = Op::SliceCols;
  n.p0 = a.id;
  n.a0 = offset;
  n.a1 = len;
  n.val = Matrix(va.rows, len);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < len; ++j) n.val.at(i, j) = va.at(i, offset + j);
  return push(std::move(n));
}

Tensor Tape::stop_gradient(Tensor a) {
  Node n;
  n.op = Op::StopGrad;
  n.p0 = a.id;
  n.val = nodes_[a.id].val;
  return push(std::move(n));
}

Tensor Tape::ste_threshold(Tensor p) {
  Node n;
  n.op = Op::Ste;
  n.p0 = p.id;
  n.val = nodes_[p.id].val;
  if (!ste_identity_forward) {
    for (double& v : n.val.v) v = v > 0.5 ? 1.0 : 0.0;
  }
  return push(std::move(n));
}

Tensor Tape::cross_entropy(Tensor logits, std::span<const int> labels) {
  const Matrix& lg = nodes_[logits.id].val;
  if (static_cast<int>(labels.size()) != lg.rows)
    throw ConfigError("cross_entropy: one label per row required");
  Node n;
  n.op = Op::CrossEntropy;
  n.p0 = logits.id;
  n.idx.assign(labels.begin(), labels.end());
  n.val = Matrix(1, 1);
  double total = 0.0;
  for (int i = 0; i < lg.rows; ++i) {
    const int y = n.idx[static_cast<std::size_t>(i)];
    if (y < 0 || y >= lg.cols)
      throw ConfigError("cross_entropy: label out of range");
    double mx = lg.at(i, 0);
    for (int j = 1; j < lg.cols; ++j) mx = std::max(mx, lg.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < lg.cols; ++j) sum += std::exp(lg.at(i, j) - mx);
    total += mx + std::log(sum) - lg.at(i, y);
  }
  n.val.v[0] = total / static_cast<double>(lg.rows);
  return push(std::move(n));
}

Tensor Tape::kl_div(Tensor p, Tensor q) {
  const Matrix& vp = nodes_[p.id].val;
  const Matrix& vq = nodes_[q.id].val;
  require_same_shape(vp, vq, "kl_div");
  Node n;
  n.op = Op::KlDiv;
  n.p0 = p.id;
  n.p1 = q.id;
  n.val = Matrix(1, 1);
  double total = 0.0;
  for (std::size_t i = 0; i < vp.v.size(); ++i) {
    const double pc = std::clamp(vp.v[i], kProbClamp, 1.0);
    const double qc = std::clamp(vq.v[i], kProbClamp, 1.0);
    total += pc * (std::log(pc) - std::log(qc));
  }
  n.val.v[0] = total / static_cast<double>(vp.rows);
  return push(std::move(n));
}

void Tape::backward(Tensor loss) {
  Node& top = nodes_[loss.id];
  if (top.val.rows != 1 || top.val.cols != 1)
    throw ConfigError("backward: loss must be scalar");
  for (Node& n : nodes_) std::fill(n.grad.v.begin(), n.grad.v.end(), 0.0);
  top.grad.v[0] = 1.0;
  for (std::int32_t i = loss.id; i >= 0; --i) backprop(nodes_[i]);
}

void Tape::backprop(Node& n) {
  switch (n.op) {
    case Op::Leaf:
    case Op::StopGrad:
      return;
    case Op::MatMul: {
      const Matrix& a = nodes_[n.p0].val;
      const Matrix& b = nodes_[n.p1].val;
      Matrix& da = nodes_[n.p0].grad;
      Matrix& db = nodes_[n.p1].grad;
      const Matrix& dc = n.grad;
      // dA += dC * B^T
      for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
          double s = 0.0;
          const double* dcrow = &dc.v[static_cast<std::size_t>(i) * dc.cols];
          const double* brow = &b.v[static_cast<std::size_t>(k) * b.cols];
          for (int j = 0; j < b.cols; ++j) s += dcrow[j] * brow[j];
          da.at(i, k) += s;
        }
      }
      // dB += A^T * dC
      for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.v[static_cast<std::size_t>(i) * a.cols];
        const double* dcrow = &dc.v[static_cast<std::size_t>(i) * dc.cols];
        for (int k = 0; k < a.cols; ++k) {
          const double aik = arow[k];
          double* dbrow = &db.v[static_cast<std::size_t>(k) * db.cols];
          for (int j = 0; j < b.cols; ++j) dbrow[j] += aik * dcrow[j];
        }
      }
      return;
    }
    case Op::Add: {
      Matrix& da = nodes_[n.p0].grad;
      Matrix& db = nodes_[n.p1].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i) {
        da.v[i] += n.grad.v[i];
        db.v[i] += n.grad.v[i];
      }
      return;
    }
    case Op::AddRowVec: {
      Matrix& da = nodes_[n.p0].grad;
      Matrix& dr = nodes_[n.p1].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i) da.v[i] += n.grad.v[i];
      for (int i = 0; i < n.val.rows; ++i)
        for (int j = 0; j < n.val.cols; ++j) dr.v[j] += n.grad.at(i, j);
      return;
    }
    case Op::Sub: {
      Matrix& da = nodes_[n.p0].grad;
      Matrix& db = nodes_[n.p1].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i) {
        da.v[i] += n.grad.v[i];
        db.v[i] -= n.grad.v[i];
      }
      return;
    }
    case Op::Mul: {
      const Matrix& a = nodes_[n.p0].val;
      const Matrix& b = nodes_[n.p1].val;
      Matrix& da = nodes_[n.p0].grad;
      Matrix& db = nodes_[n.p1].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i) {
        da.v[i] += n.grad.v[i] * b.v[i];
        db.v[i] += n.grad.v[i] * a.v[i];
      }
      return;
    }
    case Op::ScalarMul: {
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i)
        da.v[i] += n.s * n.grad.v[i];
      return;
    }
    case Op::Sigmoid: {
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i)
        da.v[i] += n.grad.v[i] * n.val.v[i] * (1.0 - n.val.v[i]);
      return;
    }
    case Op::Relu: {
      const Matrix& a = nodes_[n.p0].val;
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i)
        da.v[i] += a.v[i] > 0.0 ? n.grad.v[i] : 0.0;
      return;
    }
    case Op::Log: {
      const Matrix& a = nodes_[n.p0].val;
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i)
        da.v[i] += n.grad.v[i] / a.v[i];
      return;
    }
    case Op::Softmax: {
      Matrix& da = nodes_[n.p0].grad;
      for (int i = 0; i < n.val.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n.val.cols; ++j)
          dot += n.grad.at(i, j) * n.val.at(i, j);
        for (int j = 0; j < n.val.cols; ++j)
          da.at(i, j) += n.val.at(i, j) * (n.grad.at(i, j) - dot);
      }
      return;
    }
    case Op::L2NormSq: {
      const Matrix& a = nodes_[n.p0].val;
      Matrix& da = nodes_[n.p0].grad;
      const double g = n.grad.v[0];
      for (std::size_t i = 0; i < a.v.size(); ++i) da.v[i] += 2.0 * g * a.v[i];
      return;
    }
    case Op::Mean: {
      Matrix& da = nodes_[n.p0].grad;
      const double g = n.grad.v[0] / static_cast<double>(da.v.size());
      for (double& v : da.v) v += g;
      return;
    }
    case Op::MeanRows: {
      Matrix& da = nodes_[n.p0].grad;
      const double inv = 1.0 / static_cast<double>(da.rows);
      for (int i = 0; i < da.rows; ++i)
        for (int j = 0; j < da.cols; ++j) da.at(i, j) += inv * n.grad.v[j];
      return;
    }
    case Op::GatherRows: {
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t t = 0; t < n.idx.size(); ++t)
        for (int j = 0; j < n.val.cols; ++j)
          da.at(n.idx[t], j) += n.grad.at(static_cast<int>(t), j);
      return;
    }
    case Op::SliceCols: {
      Matrix& da = nodes_[n.p0].grad;
      for (int i = 0; i < n.val.rows; ++i)
        for (int j = 0; j < n.a1; ++j)
          da.at(i, n.a0 + j) += n.grad.at(i, j);
      return;
    }
    case Op::Ste: {
      Matrix& da = nodes_[n.p0].grad;
      for (std::size_t i = 0; i < n.grad.v.size(); ++i)
        da.v[i] += n.grad.v[i];
      return;
    }
    case Op::CrossEntropy: {
      const Matrix& lg = nodes_[n.p0].val;
      Matrix& da = nodes_[n.p0].grad;
      const double g = n.grad.v[0] / static_cast<double>(lg.rows);
      for (int i = 0; i < lg.rows; ++i) {
        double mx = lg.at(i, 0);
        for (int j = 1; j < lg.cols; ++j) mx = std::max(mx, lg.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < lg.cols; ++j) sum += std::exp(lg.at(i, j) - mx);
        for (int j = 0; j < lg.cols; ++j) {
          const double soft = std::exp(lg.at(i, j) - mx) / sum;
          const double onehot = j == n.idx[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
          da.at(i, j) += g * (soft - onehot);
        }
      }
      return;
    }
    case Op::KlDiv: {
      const Matrix& vp = nodes_[n.p0].val;
      const Matrix& vq = nodes_[n.p1].val;
      Matrix& dp = nodes_[n.p0].grad;
      Matrix& dq = nodes_[n.p1].grad;
      const double g = n.grad.v[0] / static_cast<double>(vp.rows);
      for (std::size_t i = 0; i < vp.v.size(); ++i) {
        const double pc = std::clamp(vp.v[i], kProbClamp, 1.0);
        const double qc = std::clamp(vq.v[i], kProbClamp, 1.0);
        if (vp.v[i] > kProbClamp && vp.v[i] < 1.0)
          dp.v[i] += g * (std::log(pc) - std::log(qc) + 1.0);
        if (vq.v[i] > kProbClamp && vq.v[i] < 1.0)
          dq.v[i] += g * (-pc / qc);
      }
      return;
    }
  }
}

double grad_check(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& build,
    std::vector<Matrix> params, double eps) {
  // Analytic pass.
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
    Tensor loss = build(tape, leaves);
    tape.backward(loss);
    for (Tensor t : leaves) analytic.push_back(tape.grad(t));
  }

  auto eval = [&](const std::vector<Matrix>& ps) {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(ps.size());
    for (const Matrix& p : ps) leaves.push_back(tape.leaf(p));
    return tape.value(build(tape, leaves)).v[0];
  };

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t ei = 0; ei < params[pi].v.size(); ++ei) {
      const double orig = params[pi].v[ei];
      params[pi].v[ei] = orig + eps;
      const double f_plus = eval(params);
      params[pi].v[ei] = orig - eps;
      const double f_minus = eval(params);
      params[pi].v[ei] = orig;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi].v[ei];
      const double denom = std::max(std::abs(a), std::abs(numeric));
      if (denom < 1e-6) continue;
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace odp
