#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odp/autodiff.hpp"
#include "odp/model.hpp"
#include "odp/synth.hpp"

namespace odp {

/// Coefficients of the composite objective
/// total = cls + alpha*(suff_auth + suff_gen) + beta*puri + gamma*align
///         + lambda*sparse.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;
};

/// Per-term values of one batch, batch-mean convention throughout.
struct LossBreakdown {
  double cls = 0.0;
  double suff_auth = 0.0;
  double suff_gen = 0.0;
  double puri = 0.0;
  double align = 0.0;
  double sparse = 0.0;
  double total = 0.0;
};

/// (|p_u|_1 + |p_s|_1) / D, batch-mean. Probability tensors are (B x D).
Tensor sparsity_loss(Tape& tape, Tensor p_u, Tensor p_s);

/// KL(softmax(student) || sg[softmax(teacher)]), summed over classes,
/// batch-mean. The teacher branch contributes no gradient.
Tensor sufficiency_loss(Tape& tape, Tensor student_logits,
                        Tensor teacher_logits);

/// z_hybrid = z_u + z_donor * (1 - m_u_donor): the target's universal trace
/// carrying the donor's fingerprint and semantics.
Tensor make_hybrid(Tape& tape, Tensor z_u, Tensor z_donor, Tensor m_u_donor);

/// Mean over the batch of |logits_a - logits_b|^2 per row.
Tensor purification_loss(Tape& tape, Tensor logits_a, Tensor logits_b);

/// (1/K) sum_k |c_k - c_global|^2 over the generator ids present in the
/// batch (fake rows only when fake_only). K is the number of such
/// generators; with no eligible rows the loss is 0.
Tensor alignment_loss(Tape& tape, Tensor z_u_batch,
                      std::span<const std::uint16_t> gen_ids,
                      std::span<const std::uint8_t> y, bool fake_only);

/// |L_half(z_u, z_u + t*delta) - 0.5 |J^T (t*delta)|^2| where
/// L_half = 0.5 |f(z_u) - f(z_u + t*delta)|^2 and J is the head Jacobian
/// at z_u. Zero to float precision for linear heads; O(t^3)-and-better
/// convergence for smooth heads.
double taylor_residual(const std::vector<Matrix>& auth_head,
                       std::span<const double> z_u,
                       std::span<const double> delta, double scale);

/// Mean over samples of |J^T delta| / (|J|_F |delta|) with J the
/// authenticity-head Jacobian at z_u and delta the donor nuisance for a
/// seeded derangement of the first `max_samples` rows. Samples with
/// delta = 0 contribute 0.
double ortho_projection(const ModelParams& params, const Dataset& dataset,
                        MaskMode mode, std::size_t max_samples,
                        std::uint64_t seed);

}  // namespace odp
