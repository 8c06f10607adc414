#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "odp/losses.hpp"
#include "odp/model.hpp"
#include "odp/synth.hpp"

namespace odp {

/// What replaces the counterfactual donor perturbation.
enum class PurificationMode { Counterfactual, Gaussian, Dropout, None };

/// Per-term enable bits; a disabled term (or a zero weight) is removed
/// from the graph entirely, so its gradient contribution is exactly zero
/// and it logs as 0.
struct AblationFlags {
  bool suff = true;
  bool puri = true;
  bool align = true;
  bool sparse = true;
};

struct TrainConfig {
  int dim = 0;  // expected feature dim; 0 takes the dataset's, else must match
  int epochs = 50;
  int batch_size = 64;
  double lr = 1e-3;
  double lr_min = 1e-6;
  double weight_decay = 1e-4;
  LossWeights weights;
  std::uint64_t seed = 42;
  AblationFlags ablation;
  MaskMode mask_mode = MaskMode::Hard;
  PurificationMode purification_mode = PurificationMode::Counterfactual;
  int hidden = 0;       // gating hidden width; 0 -> 2*D
  int head_hidden = 0;  // 0 -> linear classifier heads
  int save_every = 0;   // checkpoint interval in epochs; 0 -> final only
};

/// JSON round-trip for TrainConfig. Keys are the snake_case field names;
/// unknown keys are rejected. serialize emits canonical (sorted-key) JSON.
TrainConfig parse_train_config(const std::string& json_text);
std::string serialize_train_config(const TrainConfig& config);

struct EpochStats {
  LossBreakdown mean_loss;
  double train_bacc = 0.0;
  double centroid_dispersion = 0.0;  // mean pairwise distance of fake z_u centroids
  double mask_density = 0.0;         // mean |m_u|_0 / D
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

std::string history_csv(const TrainHistory& history);

struct TrainResult {
  ModelParams params;
  ModelParams initial_params;  // state before the first optimizer step
  TrainHistory history;
  std::string step_log_csv;  // step,cls,suff_auth,suff_gen,puri,align,sparse,total
};

/// Algorithm phase 1: per batch - gate, straight-through masks, cascaded
/// decomposition, both classifications, sufficiency distillation, donor
/// hybrid purification, centroid alignment, weighted total, AdamW step
/// under cosine annealing. Deterministic: (config, dataset) fixes every
/// parameter bit.
TrainResult train(
    const TrainConfig& config, const Dataset& dataset,
    const std::function<void(int epoch, const ModelParams&)>& on_epoch = {});

/// lr_min + 0.5 (lr - lr_min) (1 + cos(pi step / total_steps)).
double cosine_lr(long step, long total_steps, double lr, double lr_min);

/// Decoupled-weight-decay adaptive moments, beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8, bias correction on.
struct AdamState {
  std::vector<Matrix> m, v;
  long t = 0;
};

void adamw_step(const std::vector<Matrix*>& params,
                const std::vector<const Matrix*>& grads, AdamState& state,
                double lr_t, double weight_decay);

struct EvalResult {
  double bacc = 0.0;
  double nll = 0.0;
  bool degenerate_single_class = false;
  std::size_t n_samples = 0;
};

/// Algorithm phase 2: per-sample inference through the universal mask only,
/// aggregated to bAcc and NLL. Order-independent.
EvalResult evaluate(const ModelParams& params, const Dataset& dataset,
                    MaskMode mode = MaskMode::Hard);

/// Finite-difference check of the composite objective over every parameter
/// group on the first `batch` samples, with masks frozen to their current
/// values and teacher targets detached as constants (the stop-gradient
/// semantics). Returns the max relative gradient error.
double model_grad_check(const ModelParams& params, const Dataset& dataset,
                        const TrainConfig& config, int batch, double eps);

}  // namespace odp
