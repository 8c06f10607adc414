#include "odp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "odp/error.hpp"
#include "odp/metrics.hpp"
#include "odp/rng.hpp"

namespace odp {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kFrozenMaskLogit = 12.0;  // sigmoid(12) thresholds to 1

struct BatchView {
  Matrix z;                          // (b x D)
  std::vector<int> y;                // 0/1
  std::vector<int> g;                // 0..K(+1)
  std::vector<std::uint8_t> y8;
  std::vector<std::uint16_t> g16;
};

BatchView make_batch(const Dataset& ds, const std::vector<int>& indices) {
  BatchView b;
  const int dim = ds.dim;
  b.z = Matrix(static_cast<int>(indices.size()), dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const float* row = ds.row(static_cast<std::size_t>(indices[i]));
    for (int d = 0; d < dim; ++d) b.z.at(static_cast<int>(i), d) = row[d];
    b.y.push_back(ds.y[static_cast<std::size_t>(indices[i])]);
    b.g.push_back(ds.g[static_cast<std::size_t>(indices[i])]);
    b.y8.push_back(ds.y[static_cast<std::size_t>(indices[i])]);
    b.g16.push_back(ds.g[static_cast<std::size_t>(indices[i])]);
  }
  return b;
}

struct GraphOptions {
  MaskMode mask_mode = MaskMode::Hard;
  PurificationMode puri_mode = PurificationMode::Counterfactual;
  AblationFlags flags;
  LossWeights weights;
  // Frozen-mask / detached-teacher path for finite-difference checks.
  const Matrix* frozen_m_u = nullptr;
  const Matrix* frozen_m_s = nullptr;
  const Matrix* teacher_auth_probs = nullptr;
  const Matrix* teacher_gen_probs = nullptr;
  // Purification inputs. donor_perm drives the counterfactual mode; the
  // noise rng drives gaussian/dropout unless a fixed matrix is supplied.
  const std::vector<int>* donor_perm = nullptr;
  Rng* noise_rng = nullptr;
  const Matrix* fixed_noise = nullptr;
};

struct GraphOut {
  Tensor total;
  LossBreakdown breakdown;
  Tensor auth_logits;
  GateOut gate;
  DecompositionT dec;
  bool has_gate = false;
};

GraphOut build_graph(Tape& tape, const ParamTensors& pt, const BatchView& b,
                     const GraphOptions& o) {
  GraphOut out;
  Tensor z = tape.leaf(b.z);
  const int batch = b.z.rows;
  const int dim = b.z.cols;

  if (o.frozen_m_u != nullptr) {
    out.dec.m_u = tape.leaf(*o.frozen_m_u);
    out.dec.m_s = tape.leaf(*o.frozen_m_s);
    Tensor ones = tape.leaf(Matrix(batch, dim, 1.0));
    Tensor not_mu = tape.sub(ones, out.dec.m_u);
    Tensor not_ms = tape.sub(ones, out.dec.m_s);
    out.dec.z_u = tape.mul(z, out.dec.m_u);
    out.dec.z_s = tape.mul(tape.mul(z, not_mu), out.dec.m_s);
    out.dec.z_n = tape.mul(tape.mul(z, not_mu), not_ms);
    out.gate = gate_forward(tape, pt, z);  // sparsity still sees the gate
    out.has_gate = true;
  } else {
    out.gate = gate_forward(tape, pt, z);
    out.has_gate = true;
    out.dec = decompose_on_tape(tape, z, out.gate.p_u, out.gate.p_s,
                                o.mask_mode == MaskMode::Soft ? MaskMode::Soft
                                                              : MaskMode::Hard);
  }

  out.auth_logits = head_forward(tape, pt.auth_head, out.dec.z_u);
  Tensor gen_logits = head_forward(tape, pt.gen_head, out.dec.z_s);
  Tensor cls = tape.add(tape.cross_entropy(out.auth_logits, b.y),
                        tape.cross_entropy(gen_logits, b.g));
  out.breakdown.cls = tape.value(cls).v[0];
  Tensor total = cls;

  const bool use_suff = o.flags.suff && o.weights.alpha != 0.0;
  if (use_suff) {
    Tensor suff_auth, suff_gen;
    if (o.teacher_auth_probs != nullptr) {
      suff_auth = tape.kl_div(tape.softmax(out.auth_logits),
                              tape.leaf(*o.teacher_auth_probs));
      suff_gen = tape.kl_div(tape.softmax(gen_logits),
                             tape.leaf(*o.teacher_gen_probs));
    } else {
      suff_auth = sufficiency_loss(tape, out.auth_logits,
                                   head_forward(tape, pt.auth_head, z));
      suff_gen = sufficiency_loss(tape, gen_logits,
                                  head_forward(tape, pt.gen_head, z));
    }
    out.breakdown.suff_auth = tape.value(suff_auth).v[0];
    out.breakdown.suff_gen = tape.value(suff_gen).v[0];
    total = tape.add(
        total, tape.scalar_mul(tape.add(suff_auth, suff_gen), o.weights.alpha));
  }

  const bool use_puri = o.flags.puri && o.weights.beta != 0.0 &&
                        o.puri_mode != PurificationMode::None &&
                        !(o.puri_mode == PurificationMode::Counterfactual &&
                          batch < 2);
  if (use_puri) {
    Tensor hybrid;
    if (o.puri_mode == PurificationMode::Counterfactual) {
      Tensor z_donor = tape.gather_rows(z, *o.donor_perm);
      Tensor mu_donor = tape.gather_rows(out.dec.m_u, *o.donor_perm);
      hybrid = make_hybrid(tape, out.dec.z_u, z_donor, mu_donor);
    } else if (o.puri_mode == PurificationMode::Gaussian) {
      Matrix delta(batch, dim);
      if (o.fixed_noise != nullptr) {
        delta = *o.fixed_noise;
      } else {
        // Sigma matched to the mean donor-nuisance norm of this batch.
        const Matrix& mu = tape.value(out.dec.m_u);
        double mean_norm = 0.0;
        for (int i = 0; i < batch; ++i) {
          double s = 0.0;
          for (int d = 0; d < dim; ++d) {
            const double nu = b.z.at(i, d) * (1.0 - mu.at(i, d));
            s += nu * nu;
          }
          mean_norm += std::sqrt(s);
        }
        mean_norm /= static_cast<double>(batch);
        const double sigma = mean_norm / std::sqrt(static_cast<double>(dim));
        for (double& v : delta.v) v = sigma * o.noise_rng->normal();
      }
      hybrid = tape.add(out.dec.z_u, tape.leaf(delta));
    } else {  // Dropout, p = 0.5 inverted
      Matrix keep(batch, dim);
      if (o.fixed_noise != nullptr) {
        keep = *o.fixed_noise;
      } else {
        for (double& v : keep.v) v = o.noise_rng->uniform() < 0.5 ? 0.0 : 2.0;
      }
      hybrid = tape.mul(out.dec.z_u, tape.leaf(keep));
    }
    Tensor puri = purification_loss(
        tape, out.auth_logits, head_forward(tape, pt.auth_head, hybrid));
    out.breakdown.puri = tape.value(puri).v[0];
    total = tape.add(total, tape.scalar_mul(puri, o.weights.beta));
  }

  if (o.flags.align && o.weights.gamma != 0.0) {
    Tensor align = alignment_loss(tape, out.dec.z_u, b.g16, b.y8, true);
    out.breakdown.align = tape.value(align).v[0];
    total = tape.add(total, tape.scalar_mul(align, o.weights.gamma));
  }

  if (o.flags.sparse && o.weights.lambda != 0.0 && out.has_gate) {
    Tensor sparse = sparsity_loss(tape, out.gate.p_u, out.gate.p_s);
    out.breakdown.sparse = tape.value(sparse).v[0];
    total = tape.add(total, tape.scalar_mul(sparse, o.weights.lambda));
  }

  out.total = total;
  out.breakdown.total = tape.value(total).v[0];
  return out;
}

void encode_random_masks(ModelParams& params, std::uint64_t seed) {
  Rng rng = substream(seed, "random-mask");
  const int d = params.cfg.dim;
  std::fill(params.gate_w1.v.begin(), params.gate_w1.v.end(), 0.0);
  std::fill(params.gate_b1.v.begin(), params.gate_b1.v.end(), 0.0);
  std::fill(params.gate_w2.v.begin(), params.gate_w2.v.end(), 0.0);
  for (int ch = 0; ch < d; ++ch) {
    params.gate_b2.v[static_cast<std::size_t>(ch)] =
        rng.uniform() < 0.5 ? kFrozenMaskLogit : -kFrozenMaskLogit;
    params.gate_b2.v[static_cast<std::size_t>(d + ch)] =
        rng.uniform() < 0.5 ? kFrozenMaskLogit : -kFrozenMaskLogit;
  }
}

void validate_config(const TrainConfig& c, const Dataset& ds) {
  if (ds.size() == 0) throw ConfigError("train: dataset is empty");
  if (c.dim != 0 && c.dim != ds.dim)
    throw ConfigError("train: config dim " + std::to_string(c.dim) +
                      " does not match dataset dim " + std::to_string(ds.dim));
  if (c.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (c.batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
  if (static_cast<std::size_t>(c.batch_size) > ds.size())
    throw ConfigError("train: batch_size exceeds dataset size");
  if (!(c.lr > c.lr_min) || c.lr_min < 0.0)
    throw ConfigError("train: need lr > lr_min >= 0");
  if (c.weight_decay < 0.0)
    throw ConfigError("train: weight_decay must be >= 0");
  const LossWeights& w = c.weights;
  for (double v : {w.alpha, w.beta, w.gamma, w.lambda}) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("train: loss weights must be finite and >= 0");
  }
}

double centroid_dispersion(const Matrix& z_u, const BatchView& b) {
  std::map<int, std::pair<std::vector<double>, int>> acc;
  for (int i = 0; i < z_u.rows; ++i) {
    if (b.y[static_cast<std::size_t>(i)] == 0) continue;
    auto& [sum, count] = acc[b.g[static_cast<std::size_t>(i)]];
    if (sum.empty()) sum.assign(static_cast<std::size_t>(z_u.cols), 0.0);
    for (int d = 0; d < z_u.cols; ++d) sum[static_cast<std::size_t>(d)] += z_u.at(i, d);
    ++count;
  }
  if (acc.size() < 2) return -1.0;  // undefined for this batch
  std::vector<std::vector<double>> centroids;
  for (auto& [gen, sc] : acc) {
    for (double& v : sc.first) v /= sc.second;
    centroids.push_back(std::move(sc.first));
  }
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t c = a + 1; c < centroids.size(); ++c) {
      double s = 0.0;
      for (std::size_t d = 0; d < centroids[a].size(); ++d) {
        const double diff = centroids[a][d] - centroids[c][d];
        s += diff * diff;
      }
      total += std::sqrt(s);
      ++pairs;
    }
  }
  return total / pairs;
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double cosine_lr(long step, long total_steps, double lr, double lr_min) {
  if (step < 0 || step > total_steps)
    throw ConfigError("cosine_lr: step out of [0, total_steps]");
  if (total_steps <= 0) throw ConfigError("cosine_lr: total_steps must be > 0");
  constexpr double pi = 3.14159265358979323846;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr - lr_min) * (1.0 + std::cos(pi * t));
}

void adamw_step(const std::vector<Matrix*>& params,
                const std::vector<const Matrix*>& grads, AdamState& state,
                double lr_t, double weight_decay) {
  if (params.size() != grads.size())
    throw ConfigError("adamw_step: params/grads size mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows, p->cols);
      state.v.emplace_back(p->rows, p->cols);
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    for (std::size_t e = 0; e < p.v.size(); ++e) {
      m.v[e] = kAdamBeta1 * m.v[e] + (1.0 - kAdamBeta1) * g.v[e];
      v.v[e] = kAdamBeta2 * v.v[e] + (1.0 - kAdamBeta2) * g.v[e] * g.v[e];
      const double m_hat = m.v[e] / bc1;
      const double v_hat = v.v[e] / bc2;
      p.v[e] -= lr_t * weight_decay * p.v[e];
      p.v[e] -= lr_t * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

TrainResult train(
    const TrainConfig& config, const Dataset& dataset,
    const std::function<void(int epoch, const ModelParams&)>& on_epoch) {
  validate_config(config, dataset);
  const int n = static_cast<int>(dataset.size());
  const int batch_size = config.batch_size;
  const long steps_per_epoch = (n + batch_size - 1) / batch_size;
  const long total_steps = config.epochs * steps_per_epoch;

  ModelConfig mc;
  mc.dim = dataset.dim;
  mc.hidden = config.hidden;
  mc.n_generators = dataset.n_generators;
  mc.head_hidden = config.head_hidden;
  ModelParams params = ModelParams::init(mc, config.seed);
  if (config.mask_mode == MaskMode::Random)
    encode_random_masks(params, config.seed);

  TrainResult result;
  result.initial_params = params;

  // Random-mask ablation: the gate only encodes the frozen masks, keep it out
  // of the optimizer so weight decay cannot erode the encoding.
  std::vector<Matrix*> opt_params;
  std::vector<std::size_t> opt_index;
  {
    auto all = params.parameters();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (config.mask_mode == MaskMode::Random && i < 4) continue;
      opt_params.push_back(all[i]);
      opt_index.push_back(i);
    }
  }

  AdamState state;
  std::string step_log =
      "step,cls,suff_auth,suff_gen,puri,align,sparse,total\n";

  long gstep = 0;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = substream(config.seed, "shuffle",
                                static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle_rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    LossBreakdown sum{};
    std::vector<int> epoch_preds, epoch_truths;
    double disp_sum = 0.0;
    long disp_count = 0;
    double density_sum = 0.0;
    long batches = 0;

    for (int start = 0; start < n; start += batch_size) {
      const int end = std::min(n, start + batch_size);
      std::vector<int> indices(order.begin() + start, order.begin() + end);
      BatchView batch = make_batch(dataset, indices);

      GraphOptions opts;
      opts.mask_mode = config.mask_mode;
      opts.puri_mode = config.purification_mode;
      opts.flags = config.ablation;
      opts.weights = config.weights;
      std::vector<int> donor;
      Rng noise_rng = substream(config.seed, "puri-noise",
                                static_cast<std::uint64_t>(gstep));
      if (config.purification_mode == PurificationMode::Counterfactual &&
          batch.z.rows >= 2) {
        Rng donor_rng = substream(config.seed, "donor",
                                  static_cast<std::uint64_t>(gstep));
        donor = derangement(donor_rng, batch.z.rows);
        opts.donor_perm = &donor;
      }
      opts.noise_rng = &noise_rng;

      Tape tape;
      ParamTensors pt = params_on_tape(tape, params);
      GraphOut out = build_graph(tape, pt, batch, opts);
      tape.backward(out.total);

      std::vector<const Matrix*> grads;
      grads.reserve(opt_params.size());
      for (std::size_t i : opt_index) grads.push_back(&tape.grad(pt.all[i]));
      adamw_step(opt_params, grads, state,
                 cosine_lr(gstep, total_steps, config.lr, config.lr_min),
                 config.weight_decay);

      // Step log + epoch statistics.
      const LossBreakdown& bd = out.breakdown;
      step_log += std::to_string(gstep) + "," + fmt17(bd.cls) + "," +
                  fmt17(bd.suff_auth) + "," + fmt17(bd.suff_gen) + "," +
                  fmt17(bd.puri) + "," + fmt17(bd.align) + "," +
                  fmt17(bd.sparse) + "," + fmt17(bd.total) + "\n";
      sum.cls += bd.cls;
      sum.suff_auth += bd.suff_auth;
      sum.suff_gen += bd.suff_gen;
      sum.puri += bd.puri;
      sum.align += bd.align;
      sum.sparse += bd.sparse;
      sum.total += bd.total;

      const Matrix& logits = tape.value(out.auth_logits);
      for (int i = 0; i < logits.rows; ++i) {
        epoch_preds.push_back(logits.at(i, 1) >= logits.at(i, 0) ? 1 : 0);
        epoch_truths.push_back(batch.y[static_cast<std::size_t>(i)]);
      }
      const double disp = centroid_dispersion(tape.value(out.dec.z_u), batch);
      if (disp >= 0.0) {
        disp_sum += disp;
        ++disp_count;
      }
      const Matrix& mu = tape.value(out.dec.m_u);
      long dense = 0;
      for (double v : mu.v) dense += v > 0.5 ? 1 : 0;
      density_sum += static_cast<double>(dense) / static_cast<double>(mu.v.size());

      ++batches;
      ++gstep;
    }

    EpochStats stats;
    stats.mean_loss = sum;
    const double inv_b = 1.0 / static_cast<double>(batches);
    stats.mean_loss.cls *= inv_b;
    stats.mean_loss.suff_auth *= inv_b;
    stats.mean_loss.suff_gen *= inv_b;
    stats.mean_loss.puri *= inv_b;
    stats.mean_loss.align *= inv_b;
    stats.mean_loss.sparse *= inv_b;
    stats.mean_loss.total *= inv_b;
    stats.train_bacc = balanced_accuracy(epoch_preds, epoch_truths).value;
    stats.centroid_dispersion = disp_count > 0 ? disp_sum / disp_count : 0.0;
    stats.mask_density = density_sum * inv_b;
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, params);
  }

  result.params = std::move(params);
  result.step_log_csv = std::move(step_log);
  return result;
}

EvalResult evaluate(const ModelParams& params, const Dataset& dataset,
                    MaskMode mode) {
  if (dataset.size() == 0) throw ConfigError("evaluate: dataset is empty");
  if (dataset.dim != params.cfg.dim)
    throw ConfigError("evaluate: dataset dim " + std::to_string(dataset.dim) +
                      " does not match model dim " +
                      std::to_string(params.cfg.dim));
  std::vector<int> preds, truths;
  std::vector<double> probs;
  std::vector<double> z(static_cast<std::size_t>(dataset.dim));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const float* row = dataset.row(i);
    for (int d = 0; d < dataset.dim; ++d) z[static_cast<std::size_t>(d)] = row[d];
    const InferResult r = infer(params, z, mode);
    preds.push_back(r.label);
    probs.push_back(r.p_fake);
    truths.push_back(dataset.y[i]);
  }
  const BalancedAccuracy ba = balanced_accuracy(preds, truths);
  EvalResult out;
  out.bacc = ba.value;
  out.degenerate_single_class = ba.degenerate;
  out.nll = nll(probs, truths);
  out.n_samples = dataset.size();
  return out;
}

double model_grad_check(const ModelParams& params, const Dataset& dataset,
                        const TrainConfig& config, int batch, double eps) {
  if (batch < 2 || static_cast<std::size_t>(batch) > dataset.size())
    throw ConfigError("model_grad_check: bad batch size");
  std::vector<int> indices(static_cast<std::size_t>(batch));
  std::iota(indices.begin(), indices.end(), 0);
  BatchView bv = make_batch(dataset, indices);
  const int dim = dataset.dim;

  // Freeze the masks and detach the teacher at the current parameters, so
  // the checked function is smooth and matches the stop-gradient semantics.
  Matrix frozen_mu(batch, dim), frozen_ms(batch, dim);
  Matrix teacher_auth(batch, 2);
  Matrix teacher_gen(batch, params.cfg.n_generators + 1);
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (int i = 0; i < batch; ++i) {
    for (int d = 0; d < dim; ++d) z[static_cast<std::size_t>(d)] = bv.z.at(i, d);
    Decomposition dec = decompose_sample(params, z, config.mask_mode);
    for (int d = 0; d < dim; ++d) {
      frozen_mu.at(i, d) = dec.m_u[static_cast<std::size_t>(d)] > 0.5 ? 1.0 : 0.0;
      frozen_ms.at(i, d) = dec.m_s[static_cast<std::size_t>(d)] > 0.5 ? 1.0 : 0.0;
    }
    auto to_probs = [](std::vector<double> logits) {
      double mx = logits[0];
      for (double v : logits) mx = std::max(mx, v);
      double sum = 0.0;
      for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (double& v : logits) v /= sum;
      return logits;
    };
    const std::vector<double> pa = to_probs(head_eval(params.auth_head, z));
    for (int c = 0; c < 2; ++c) teacher_auth.at(i, c) = pa[static_cast<std::size_t>(c)];
    const std::vector<double> pg = to_probs(head_eval(params.gen_head, z));
    for (int c = 0; c <= params.cfg.n_generators; ++c)
      teacher_gen.at(i, c) = pg[static_cast<std::size_t>(c)];
  }

  std::vector<int> donor;
  Matrix fixed_noise;
  GraphOptions opts;
  opts.mask_mode = config.mask_mode;
  opts.puri_mode = config.purification_mode;
  opts.flags = config.ablation;
  opts.weights = config.weights;
  opts.frozen_m_u = &frozen_mu;
  opts.frozen_m_s = &frozen_ms;
  opts.teacher_auth_probs = &teacher_auth;
  opts.teacher_gen_probs = &teacher_gen;
  if (config.purification_mode == PurificationMode::Counterfactual) {
    Rng donor_rng = substream(config.seed, "donor", 0);
    donor = derangement(donor_rng, batch);
    opts.donor_perm = &donor;
  } else if (config.purification_mode == PurificationMode::Gaussian ||
             config.purification_mode == PurificationMode::Dropout) {
    Rng noise_rng = substream(config.seed, "puri-noise", 0);
    fixed_noise = Matrix(batch, dim);
    if (config.purification_mode == PurificationMode::Gaussian) {
      for (double& v : fixed_noise.v) v = 0.1 * noise_rng.normal();
    } else {
      for (double& v : fixed_noise.v)
        v = noise_rng.uniform() < 0.5 ? 0.0 : 2.0;
    }
    opts.fixed_noise = &fixed_noise;
  }

  const auto n_auth = params.auth_head.size();
  const auto n_gen = params.gen_head.size();
  auto build = [&](Tape& tape, const std::vector<Tensor>& leaves) {
    ParamTensors pt;
    pt.gate_w1 = leaves[0];
    pt.gate_b1 = leaves[1];
    pt.gate_w2 = leaves[2];
    pt.gate_b2 = leaves[3];
    for (std::size_t i = 0; i < n_auth; ++i) pt.auth_head.push_back(leaves[4 + i]);
    for (std::size_t i = 0; i < n_gen; ++i)
      pt.gen_head.push_back(leaves[4 + n_auth + i]);
    pt.all = leaves;
    return build_graph(tape, pt, bv, opts).total;
  };

  std::vector<Matrix> values;
  for (const Matrix* p : params.parameters()) values.push_back(*p);
  return grad_check(build, std::move(values), eps);
}

TrainConfig parse_train_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");

  TrainConfig c;
  auto mask_mode = [](const std::string& s) {
    if (s == "hard") return MaskMode::Hard;
    if (s == "soft") return MaskMode::Soft;
    if (s == "random") return MaskMode::Random;
    throw ConfigError("train config: mask_mode must be hard|soft|random, got \"" + s + "\"");
  };
  auto puri_mode = [](const std::string& s) {
    if (s == "counterfactual") return PurificationMode::Counterfactual;
    if (s == "gaussian") return PurificationMode::Gaussian;
    if (s == "dropout") return PurificationMode::Dropout;
    if (s == "none") return PurificationMode::None;
    throw ConfigError(
        "train config: purification_mode must be counterfactual|gaussian|dropout|none, got \"" +
        s + "\"");
  };

  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dim") c.dim = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "lr_min") c.lr_min = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "head_hidden") c.head_hidden = value.get<int>();
      else if (key == "save_every") c.save_every = value.get<int>();
      else if (key == "mask_mode") c.mask_mode = mask_mode(value.get<std::string>());
      else if (key == "purification_mode")
        c.purification_mode = puri_mode(value.get<std::string>());
      else if (key == "weights") {
        for (const auto& [wk, wv] : value.items()) {
          if (wk == "alpha") c.weights.alpha = wv.get<double>();
          else if (wk == "beta") c.weights.beta = wv.get<double>();
          else if (wk == "gamma") c.weights.gamma = wv.get<double>();
          else if (wk == "lambda") c.weights.lambda = wv.get<double>();
          else throw ConfigError("train config: unknown weights key \"" + wk + "\"");
        }
      } else if (key == "ablation_flags") {
        for (const auto& [fk, fv] : value.items()) {
          if (fk == "suff") c.ablation.suff = fv.get<bool>();
          else if (fk == "puri") c.ablation.puri = fv.get<bool>();
          else if (fk == "align") c.ablation.align = fv.get<bool>();
          else if (fk == "sparse") c.ablation.sparse = fv.get<bool>();
          else throw ConfigError("train config: unknown ablation_flags key \"" + fk + "\"");
        }
      } else {
        throw ConfigError("train config: unknown key \"" + key + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("train config: bad value for \"" + key + "\": " + e.what());
    }
  }
  return c;
}

std::string serialize_train_config(const TrainConfig& c) {
  nlohmann::json j;
  j["dim"] = c.dim;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["lr_min"] = c.lr_min;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["hidden"] = c.hidden;
  j["head_hidden"] = c.head_hidden;
  j["save_every"] = c.save_every;
  j["mask_mode"] = c.mask_mode == MaskMode::Hard   ? "hard"
                   : c.mask_mode == MaskMode::Soft ? "soft"
                                                   : "random";
  j["purification_mode"] =
      c.purification_mode == PurificationMode::Counterfactual ? "counterfactual"
      : c.purification_mode == PurificationMode::Gaussian     ? "gaussian"
      : c.purification_mode == PurificationMode::Dropout      ? "dropout"
                                                              : "none";
  j["weights"] = {{"alpha", c.weights.alpha},
                  {"beta", c.weights.beta},
                  {"gamma", c.weights.gamma},
                  {"lambda", c.weights.lambda}};
  j["ablation_flags"] = {{"suff", c.ablation.suff},
                         {"puri", c.ablation.puri},
                         {"align", c.ablation.align},
                         {"sparse", c.ablation.sparse}};
  return j.dump(2) + "\n";
}

std::string history_csv(const TrainHistory& history) {
  std::string out =
      "epoch,cls,suff_auth,suff_gen,puri,align,sparse,total,train_bacc,"
      "centroid_dispersion,mask_density\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochStats& s = history.epochs[e];
    out += std::to_string(e) + "," + fmt17(s.mean_loss.cls) + "," +
           fmt17(s.mean_loss.suff_auth) + "," + fmt17(s.mean_loss.suff_gen) +
           "," + fmt17(s.mean_loss.puri) + "," + fmt17(s.mean_loss.align) +
           "," + fmt17(s.mean_loss.sparse) + "," + fmt17(s.mean_loss.total) +
           "," + fmt17(s.train_bacc) + "," + fmt17(s.centroid_dispersion) +
           "," + fmt17(s.mask_density) + "\n";
  }
  return out;
}

}  // namespace odp
