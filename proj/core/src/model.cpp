#include "odp/model.hpp"

#include <algorithm>
#include <cmath>

#include "bytes.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/rng.hpp"

namespace odp {

namespace {

Matrix init_weight(Rng& rng, int in_dim, int out_dim) {
  Matrix w(in_dim, out_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : w.v) v = scale * rng.normal();
  return w;
}

std::vector<Matrix> init_head(Rng& rng, int in_dim, int out_dim, int hidden) {
  std::vector<Matrix> head;
  if (hidden > 0) {
    head.push_back(init_weight(rng, in_dim, hidden));
    head.push_back(Matrix(1, hidden));
    head.push_back(init_weight(rng, hidden, out_dim));
    head.push_back(Matrix(1, out_dim));
  } else {
    head.push_back(init_weight(rng, in_dim, out_dim));
    head.push_back(Matrix(1, out_dim));
  }
  return head;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.dim <= 0) throw ConfigError("model: dim must be positive");
  if (cfg.n_generators < 1)
    throw ConfigError("model: n_generators must be >= 1");
  ModelParams p;
  p.cfg = cfg;
  if (p.cfg.hidden <= 0) p.cfg.hidden = 2 * cfg.dim;
  Rng rng = substream(seed, "init");
  const int d = p.cfg.dim, h = p.cfg.hidden;
  p.gate_w1 = init_weight(rng, d, h);
  p.gate_b1 = Matrix(1, h);
  p.gate_w2 = init_weight(rng, h, 2 * d);
  p.gate_b2 = Matrix(1, 2 * d);
  p.auth_head = init_head(rng, d, 2, p.cfg.head_hidden);
  p.gen_head = init_head(rng, d, p.cfg.n_generators + 1, p.cfg.head_hidden);
  return p;
}

std::vector<Matrix*> ModelParams::parameters() {
  std::vector<Matrix*> out{&gate_w1, &gate_b1, &gate_w2, &gate_b2};
  for (Matrix& m : auth_head) out.push_back(&m);
  for (Matrix& m : gen_head) out.push_back(&m);
  return out;
}

std::vector<const Matrix*> ModelParams::parameters() const {
  std::vector<const Matrix*> out{&gate_w1, &gate_b1, &gate_w2, &gate_b2};
  for (const Matrix& m : auth_head) out.push_back(&m);
  for (const Matrix& m : gen_head) out.push_back(&m);
  return out;
}

std::vector<std::string> ModelParams::parameter_names() const {
  std::vector<std::string> out{"gate_w1", "gate_b1", "gate_w2", "gate_b2"};
  for (std::size_t i = 0; i < auth_head.size(); ++i)
    out.push_back("auth_head[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < gen_head.size(); ++i)
    out.push_back("gen_head[" + std::to_string(i) + "]");
  return out;
}

namespace {

// row := sigmoid(x W + b) evaluated with mat_mul's accumulation order.
std::vector<double> affine(std::span<const double> x, const Matrix& w,
                           const Matrix& b) {
  Matrix in(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), in.v.begin());
  Matrix out = mat_mul(in, w);
  for (int j = 0; j < out.cols; ++j) out.v[static_cast<std::size_t>(j)] += b.v[static_cast<std::size_t>(j)];
  return out.v;
}

}  // namespace

void gate_probs(const ModelParams& params, std::span<const double> z,
                std::vector<double>& p_u, std::vector<double>& p_s) {
  if (static_cast<int>(z.size()) != params.cfg.dim)
    throw ConfigError("gate_probs: feature length does not match model dim");
  std::vector<double> h = affine(z, params.gate_w1, params.gate_b1);
  for (double& v : h) v = v > 0.0 ? v : 0.0;
  std::vector<double> logits = affine(h, params.gate_w2, params.gate_b2);
  const int d = params.cfg.dim;
  p_u.resize(static_cast<std::size_t>(d));
  p_s.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    p_u[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-logits[static_cast<std::size_t>(i)]));
    p_s[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-logits[static_cast<std::size_t>(d + i)]));
  }
}

Decomposition decompose(std::span<const double> z, std::span<const double> p_u,
                        std::span<const double> p_s, MaskMode mode) {
  if (z.size() != p_u.size() || z.size() != p_s.size())
    throw ConfigError("decompose: length mismatch");
  Decomposition d;
  d.p_u.assign(p_u.begin(), p_u.end());
  d.p_s.assign(p_s.begin(), p_s.end());
  const std::size_t n = z.size();
  d.m_u.resize(n);
  d.m_s.resize(n);
  d.z_u.resize(n);
  d.z_s.resize(n);
  d.z_n.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = mode == MaskMode::Soft ? p_u[i] : (p_u[i] > 0.5 ? 1.0 : 0.0);
    const double ms = mode == MaskMode::Soft ? p_s[i] : (p_s[i] > 0.5 ? 1.0 : 0.0);
    d.m_u[i] = mu;
    d.m_s[i] = ms;
    d.z_u[i] = z[i] * mu;
    d.z_s[i] = z[i] * (1.0 - mu) * ms;
    d.z_n[i] = z[i] * (1.0 - mu) * (1.0 - ms);
  }
  return d;
}

Decomposition decompose_sample(const ModelParams& params,
                               std::span<const double> z, MaskMode mode) {
  std::vector<double> p_u, p_s;
  gate_probs(params, z, p_u, p_s);
  // Random mode freezes masks into the gate biases at init, so the hard
  // threshold reproduces them here.
  return decompose(z, p_u, p_s, mode == MaskMode::Random ? MaskMode::Hard : mode);
}

std::vector<double> head_eval(const std::vector<Matrix>& head,
                              std::span<const double> in) {
  std::vector<double> x(in.begin(), in.end());
  for (std::size_t layer = 0; layer + 2 < head.size(); layer += 2) {
    x = affine(x, head[layer], head[layer + 1]);
    for (double& v : x) v = v > 0.0 ? v : 0.0;
  }
  return affine(x, head[head.size() - 2], head[head.size() - 1]);
}

Matrix head_jacobian(const std::vector<Matrix>& head,
                     std::span<const double> in) {
  if (head.size() == 2) return head[0];  // linear: J == W
  // One reverse pass per output logit through a throwaway tape.
  Matrix zin(1, static_cast<int>(in.size()));
  std::copy(in.begin(), in.end(), zin.v.begin());
  const int out_dim = head.back().cols;
  Matrix jac(static_cast<int>(in.size()), out_dim);
  for (int c = 0; c < out_dim; ++c) {
    Tape tape;
    Tensor z = tape.leaf(zin);
    std::vector<Tensor> ht;
    ht.reserve(head.size());
    for (const Matrix& m : head) ht.push_back(tape.leaf(m));
    Tensor logits = head_forward(tape, ht, z);
    Tensor one = tape.slice_cols(logits, c, 1);
    tape.backward(tape.mean(one));
    const Matrix& g = tape.grad(z);
    for (int d = 0; d < jac.rows; ++d) jac.at(d, c) = g.v[static_cast<std::size_t>(d)];
  }
  return jac;
}

InferResult infer(const ModelParams& params, std::span<const double> z,
                  MaskMode mode) {
  std::vector<double> p_u, p_s;
  gate_probs(params, z, p_u, p_s);
  std::vector<double> z_u(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double mu =
        mode == MaskMode::Soft ? p_u[i] : (p_u[i] > 0.5 ? 1.0 : 0.0);
    z_u[i] = z[i] * mu;
  }
  const std::vector<double> logits = head_eval(params.auth_head, z_u);
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx);
  const double e1 = std::exp(logits[1] - mx);
  InferResult r;
  r.p_fake = e1 / (e0 + e1);
  r.label = r.p_fake >= 0.5 ? 1 : 0;
  return r;
}

// --- tape builders -----------------------------------------------------------

ParamTensors params_on_tape(Tape& tape, const ModelParams& params) {
  ParamTensors pt;
  pt.gate_w1 = tape.leaf(params.gate_w1);
  pt.gate_b1 = tape.leaf(params.gate_b1);
  pt.gate_w2 = tape.leaf(params.gate_w2);
  pt.gate_b2 = tape.leaf(params.gate_b2);
  pt.all = {pt.gate_w1, pt.gate_b1, pt.gate_w2, pt.gate_b2};
  for (const Matrix& m : params.auth_head) {
    pt.auth_head.push_back(tape.leaf(m));
    pt.all.push_back(pt.auth_head.back());
  }
  for (const Matrix& m : params.gen_head) {
    pt.gen_head.push_back(tape.leaf(m));
    pt.all.push_back(pt.gen_head.back());
  }
  return pt;
}

GateOut gate_forward(Tape& tape, const ParamTensors& pt, Tensor z_batch) {
  Tensor h = tape.relu(
      tape.add_rowvec(tape.matmul(z_batch, pt.gate_w1), pt.gate_b1));
  Tensor logits = tape.add_rowvec(tape.matmul(h, pt.gate_w2), pt.gate_b2);
  const int d = tape.value(logits).cols / 2;
  GateOut out;
  out.p_u = tape.sigmoid(tape.slice_cols(logits, 0, d));
  out.p_s = tape.sigmoid(tape.slice_cols(logits, d, d));
  return out;
}

Tensor head_forward(Tape& tape, const std::vector<Tensor>& head,
                    Tensor in_batch) {
  Tensor x = in_batch;
  for (std::size_t layer = 0; layer + 2 < head.size(); layer += 2) {
    x = tape.relu(tape.add_rowvec(tape.matmul(x, head[layer]), head[layer + 1]));
  }
  return tape.add_rowvec(tape.matmul(x, head[head.size() - 2]),
                         head[head.size() - 1]);
}

DecompositionT decompose_on_tape(Tape& tape, Tensor z_batch, Tensor p_u,
                                 Tensor p_s, MaskMode mode) {
  DecompositionT d;
  if (mode == MaskMode::Soft) {
    d.m_u = p_u;
    d.m_s = p_s;
  } else {
    d.m_u = tape.ste_threshold(p_u);
    d.m_s = tape.ste_threshold(p_s);
  }
  const Matrix& zm = tape.value(z_batch);
  Tensor ones = tape.leaf(Matrix(zm.rows, zm.cols, 1.0));
  Tensor not_mu = tape.sub(ones, d.m_u);
  Tensor not_ms = tape.sub(ones, d.m_s);
  d.z_u = tape.mul(z_batch, d.m_u);
  d.z_s = tape.mul(tape.mul(z_batch, not_mu), d.m_s);
  d.z_n = tape.mul(tape.mul(z_batch, not_mu), not_ms);
  return d;
}

// --- persistence ---------------------------------------------------------------

namespace {

void put_matrix(std::string& out, const Matrix& m) {
  bytes::put_u32(out, static_cast<std::uint32_t>(m.rows));
  bytes::put_u32(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.v) bytes::put_f32(out, static_cast<float>(v));
}

Matrix get_matrix(bytes::Reader& r) {
  const std::uint32_t rows = r.u32("matrix rows");
  const std::uint32_t cols = r.u32("matrix cols");
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (double& v : m.v) v = r.f32("matrix values");
  return m;
}

}  // namespace

void save_model(const ModelParams& params, const std::string& path) {
  std::string out = "ODPM";
  bytes::put_u32(out, 1);
  bytes::put_u32(out, static_cast<std::uint32_t>(params.cfg.dim));
  bytes::put_u32(out, static_cast<std::uint32_t>(params.cfg.hidden));
  bytes::put_u32(out, static_cast<std::uint32_t>(params.cfg.n_generators));
  for (const Matrix* m : params.parameters()) put_matrix(out, *m);
  write_file_atomic(path, out);
}

ModelParams load_model(const std::string& path) {
  bytes::Reader r(read_file(path), path);
  r.magic("ODPM");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    throw DataError(path + ": unsupported ODPM version " +
                    std::to_string(version));
  ModelParams p;
  p.cfg.dim = static_cast<int>(r.u32("dim"));
  p.cfg.hidden = static_cast<int>(r.u32("hidden"));
  p.cfg.n_generators = static_cast<int>(r.u32("n_generators"));
  std::vector<Matrix> mats;
  while (!r.at_end()) mats.push_back(get_matrix(r));
  // 8 matrices = linear heads, 12 = one-hidden-layer heads.
  std::size_t per_head;
  if (mats.size() == 8) {
    per_head = 2;
    p.cfg.head_hidden = 0;
  } else if (mats.size() == 12) {
    per_head = 4;
    p.cfg.head_hidden = static_cast<int>(mats[4].cols);
  } else {
    throw DataError(path + ": unexpected matrix count " +
                    std::to_string(mats.size()));
  }
  p.gate_w1 = std::move(mats[0]);
  p.gate_b1 = std::move(mats[1]);
  p.gate_w2 = std::move(mats[2]);
  p.gate_b2 = std::move(mats[3]);
  for (std::size_t i = 0; i < per_head; ++i)
    p.auth_head.push_back(std::move(mats[4 + i]));
  for (std::size_t i = 0; i < per_head; ++i)
    p.gen_head.push_back(std::move(mats[4 + per_head + i]));
  // Shape sanity against the header.
  if (p.gate_w1.rows != p.cfg.dim || p.gate_w1.cols != p.cfg.hidden ||
      p.gate_w2.cols != 2 * p.cfg.dim ||
      p.gen_head.back().cols != p.cfg.n_generators + 1)
    throw DataError(path + ": matrix shapes disagree with header dims");
  return p;
}

}  // namespace odp
