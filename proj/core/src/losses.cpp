#include "odp/losses.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "odp/error.hpp"
#include "odp/rng.hpp"

namespace odp {

Tensor sparsity_loss(Tape& tape, Tensor p_u, Tensor p_s) {
  // Probabilities are non-negative, so the elementwise mean equals |.|_1/D
  // averaged over the batch.
  return tape.add(tape.mean(p_u), tape.mean(p_s));
}

Tensor sufficiency_loss(Tape& tape, Tensor student_logits,
                        Tensor teacher_logits) {
  Tensor p_student = tape.softmax(student_logits);
  Tensor p_teacher = tape.stop_gradient(tape.softmax(teacher_logits));
  return tape.kl_div(p_student, p_teacher);
}

Tensor make_hybrid(Tape& tape, Tensor z_u, Tensor z_donor, Tensor m_u_donor) {
  const Matrix& m = tape.value(m_u_donor);
  Tensor ones = tape.leaf(Matrix(m.rows, m.cols, 1.0));
  Tensor nuisance = tape.mul(z_donor, tape.sub(ones, m_u_donor));
  return tape.add(z_u, nuisance);
}

Tensor purification_loss(Tape& tape, Tensor logits_a, Tensor logits_b) {
  const int batch = tape.value(logits_a).rows;
  Tensor diff = tape.sub(logits_a, logits_b);
  return tape.scalar_mul(tape.l2_norm_sq(diff), 1.0 / batch);
}

Tensor alignment_loss(Tape& tape, Tensor z_u_batch,
                      std::span<const std::uint16_t> gen_ids,
                      std::span<const std::uint8_t> y, bool fake_only) {
  const Matrix& z = tape.value(z_u_batch);
  if (static_cast<std::size_t>(z.rows) != gen_ids.size() ||
      gen_ids.size() != y.size())
    throw ConfigError("alignment_loss: batch size mismatch");

  std::map<int, std::vector<int>> groups;  // ordered: fixed reduction order
  for (int i = 0; i < z.rows; ++i) {
    if (fake_only && y[static_cast<std::size_t>(i)] == 0) continue;
    groups[gen_ids[static_cast<std::size_t>(i)]].push_back(i);
  }
  if (groups.empty()) return tape.scalar(0.0);

  std::vector<Tensor> centroids;
  centroids.reserve(groups.size());
  for (const auto& [gen, rows] : groups)
    centroids.push_back(tape.mean_rows(tape.gather_rows(z_u_batch, rows)));

  Tensor sum = centroids[0];
  for (std::size_t k = 1; k < centroids.size(); ++k)
    sum = tape.add(sum, centroids[k]);
  const double inv_k = 1.0 / static_cast<double>(centroids.size());
  Tensor c_global = tape.scalar_mul(sum, inv_k);

  Tensor acc = tape.scalar(0.0);
  for (Tensor c_k : centroids)
    acc = tape.add(acc, tape.l2_norm_sq(tape.sub(c_k, c_global)));
  return tape.scalar_mul(acc, inv_k);
}

double taylor_residual(const std::vector<Matrix>& auth_head,
                       std::span<const double> z_u,
                       std::span<const double> delta, double scale) {
  if (scale <= 0.0) throw ConfigError("taylor_residual: scale must be > 0");
  if (z_u.size() != delta.size())
    throw ConfigError("taylor_residual: length mismatch");

  std::vector<double> shifted(z_u.begin(), z_u.end());
  for (std::size_t i = 0; i < shifted.size(); ++i)
    shifted[i] += scale * delta[i];
  const std::vector<double> f0 = head_eval(auth_head, z_u);
  const std::vector<double> f1 = head_eval(auth_head, shifted);
  double loss_half = 0.0;
  for (std::size_t c = 0; c < f0.size(); ++c) {
    const double d = f0[c] - f1[c];
    loss_half += d * d;
  }
  loss_half *= 0.5;

  const Matrix jac = head_jacobian(auth_head, z_u);  // (D x C)
  double proj_sq = 0.0;
  for (int c = 0; c < jac.cols; ++c) {
    double dot = 0.0;
    for (int d = 0; d < jac.rows; ++d)
      dot += jac.at(d, c) * scale * delta[static_cast<std::size_t>(d)];
    proj_sq += dot * dot;
  }
  return std::abs(loss_half - 0.5 * proj_sq);
}

double ortho_projection(const ModelParams& params, const Dataset& dataset,
                        MaskMode mode, std::size_t max_samples,
                        std::uint64_t seed) {
  const std::size_t n = std::min(max_samples, dataset.size());
  if (n < 2) throw ConfigError("ortho_projection: need at least 2 samples");
  Rng rng = substream(seed, "ortho-donor");
  const std::vector<int> perm = derangement(rng, static_cast<int>(n));

  const int dim = dataset.dim;
  std::vector<Decomposition> decomp(n);
  std::vector<double> zbuf(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = dataset.row(i);
    for (int d = 0; d < dim; ++d) zbuf[static_cast<std::size_t>(d)] = row[d];
    decomp[i] = decompose_sample(params, zbuf, mode);
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Decomposition& donor = decomp[static_cast<std::size_t>(perm[i])];
    std::vector<double> delta(static_cast<std::size_t>(dim));
    double delta_norm_sq = 0.0;
    const float* donor_row = dataset.row(static_cast<std::size_t>(perm[i]));
    for (int d = 0; d < dim; ++d) {
      delta[static_cast<std::size_t>(d)] =
          donor_row[d] * (1.0 - donor.m_u[static_cast<std::size_t>(d)]);
      delta_norm_sq += delta[static_cast<std::size_t>(d)] * delta[static_cast<std::size_t>(d)];
    }
    if (delta_norm_sq == 0.0) continue;  // projection 0 by convention

    const Matrix jac = head_jacobian(params.auth_head, decomp[i].z_u);
    double fro_sq = 0.0;
    for (double v : jac.v) fro_sq += v * v;
    if (fro_sq == 0.0) continue;
    double proj_sq = 0.0;
    for (int c = 0; c < jac.cols; ++c) {
      double dot = 0.0;
      for (int d = 0; d < jac.rows; ++d)
        dot += jac.at(d, c) * delta[static_cast<std::size_t>(d)];
      proj_sq += dot * dot;
    }
    acc += std::sqrt(proj_sq) / (std::sqrt(fro_sq) * std::sqrt(delta_norm_sq));
  }
  return acc / static_cast<double>(n);
}

}  // namespace odp
