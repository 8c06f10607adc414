#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odp/autodiff.hpp"
#include "odp/linalg.hpp"

namespace odp {

/// How channel-selection probabilities become masks.
///  - Hard: straight-through threshold (the trained configuration).
///  - Soft: masks are the probabilities themselves (ablation).
///  - Random: binary masks frozen at init, independent of the input
///    (ablation; the frozen masks are encoded into the gate biases so a
///    saved model stays self-contained).
enum class MaskMode { Hard, Soft, Random };

struct ModelConfig {
  int dim = 0;          // D, feature channels
  int hidden = 0;       // gating hidden width (0 -> 2*D at init)
  int n_generators = 0; // K; the generator head emits K+1 logits (0 = real)
  int head_hidden = 0;  // classifier hidden width; 0 -> linear heads
};

/// Gating network (D -> H -> 2D logits for (P_u, P_s)) plus the two
/// classifier heads. Heads are stored as (W, b) stacks applied with ReLU
/// between layers; linear heads have a single pair. All weight matrices
/// are input-major (in_dim x out_dim).
struct ModelParams {
  ModelConfig cfg;
  Matrix gate_w1, gate_b1, gate_w2, gate_b2;
  std::vector<Matrix> auth_head;  // D -> 2 logits
  std::vector<Matrix> gen_head;   // D -> K+1 logits

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  /// Fixed-order view over every weight matrix (serialization and
  /// optimizer order).
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

/// Channel-selection probabilities sigmoid(G(z)) for one sample.
void gate_probs(const ModelParams& params, std::span<const double> z,
                std::vector<double>& p_u, std::vector<double>& p_s);

/// The triple (z_u, z_s, z_n) with the masks and probabilities that
/// produced it. z_u + z_s + z_n == z bitwise and the three supports are
/// pairwise disjoint when masks are binary.
struct Decomposition {
  std::vector<double> p_u, p_s;
  std::vector<double> m_u, m_s;
  std::vector<double> z_u, z_s, z_n;
};

/// Cascaded masking: m_u = 1{p_u > 0.5}, m_s = 1{p_s > 0.5},
/// z_u = z*m_u, z_s = z*(1-m_u)*m_s, z_n = z*(1-m_u)*(1-m_s).
/// MaskMode::Soft uses the probabilities as masks instead.
Decomposition decompose(std::span<const double> z, std::span<const double> p_u,
                        std::span<const double> p_s,
                        MaskMode mode = MaskMode::Hard);

/// Full per-sample decomposition through the gate.
Decomposition decompose_sample(const ModelParams& params,
                               std::span<const double> z,
                               MaskMode mode = MaskMode::Hard);

struct InferResult {
  int label = 0;       // 0 = real, 1 = fake
  double p_fake = 0.0;
};

/// Evaluation path: only the universal mask and the authenticity head run.
/// Ties at p_fake == 0.5 resolve to fake.
InferResult infer(const ModelParams& params, std::span<const double> z,
                  MaskMode mode = MaskMode::Hard);

/// Plain (tape-free) head evaluation: logits of a (W, b) ReLU stack.
std::vector<double> head_eval(const std::vector<Matrix>& head,
                              std::span<const double> in);

/// Jacobian d logits / d input at `in`, shaped (in_dim x out_dim).
Matrix head_jacobian(const std::vector<Matrix>& head,
                     std::span<const double> in);

// --- tape builders (training / verification graphs) -----------------------

/// Model parameters as tape leaves, same order as parameters().
struct ParamTensors {
  Tensor gate_w1, gate_b1, gate_w2, gate_b2;
  std::vector<Tensor> auth_head;
  std::vector<Tensor> gen_head;
  std::vector<Tensor> all;
};

ParamTensors params_on_tape(Tape& tape, const ModelParams& params);

struct GateOut {
  Tensor p_u, p_s;  // each (batch x D)
};

GateOut gate_forward(Tape& tape, const ParamTensors& pt, Tensor z_batch);

Tensor head_forward(Tape& tape, const std::vector<Tensor>& head,
                    Tensor in_batch);

struct DecompositionT {
  Tensor m_u, m_s, z_u, z_s, z_n;
};

/// On-tape cascade. Hard mode routes gradients through the straight-
/// through estimator; Soft skips thresholding.
DecompositionT decompose_on_tape(Tape& tape, Tensor z_batch, Tensor p_u,
                                 Tensor p_s, MaskMode mode);

// --- persistence -----------------------------------------------------------

/// Binary model container: magic "ODPM", version u32=1, D u32, H u32,
/// K u32, then every matrix as (rows u32, cols u32, row-major f32).
/// Save->load->save is byte-identical.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace odp
