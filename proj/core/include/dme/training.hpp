#pragma once

#include "dme/features.hpp"
#include "dme/signal_gen.hpp"
#include "dme/vae.hpp"

#include <functional>
#include <optional>

namespace dme {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta_kl = 1e-3;
  std::size_t batch_rows = 128;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  AdamHyper adam;
  double lr_decay = 1.0;  // multiplied into the learning rate after every epoch
  std::size_t workers = 1;  // feature extraction only; results do not depend on it

  void validate() const;
};

/// Optional changes to the default architecture; input and target widths
/// always come from the feature config.
struct ArchOverrides {
  std::optional<std::size_t> hidden_dim;
  std::optional<std::size_t> depth;
  std::optional<double> dropout_rate;
};

Architecture make_architecture(const FeatureConfig& features, const ArchOverrides& overrides);

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const NetworkParams& params);
};

/// Bias-corrected Adam, elementwise over every tensor, in place.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train;
  std::optional<LossBreakdown> holdout;
};

using TrainHistory = std::vector<EpochRecord>;

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
  /// Infer-mode loss over the training rows at the initial parameters.
  LossBreakdown initial_train;
  /// Training-set audit trail: every cell that contributed rows.
  std::vector<CellKey> trained_cells;
  std::size_t train_rows = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Pools per-timestep rows of every frame, then runs mini-batch Adam. Each
/// epoch shuffles rows with Rng(derive_seed(seed, {1, epoch})); batch b of
/// epoch e uses dropout/eps seed derive_seed(seed, {2, e, b}); the trailing
/// partial batch is dropped. When fewer rows than batch_rows exist, a single
/// batch of all rows is used. The holdout loss is evaluated in Infer mode.
TrainResult train(const Dataset& dataset, const FeatureConfig& features,
                  const ArchOverrides& overrides, const TrainConfig& cfg,
                  const Dataset* holdout = nullptr, const EpochCallback& on_epoch = {});

/// Stratified split: in every (modulation, SNR) cell, round(n * fraction)
/// frames go to the holdout part, chosen by a per-cell seeded shuffle. Frame
/// order inside each part follows the input order.
std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double fraction,
                                          std::uint64_t seed);

/// Row-pooled features and targets for a whole dataset (extraction may run on
/// several workers; row order is always frame order).
struct PooledRows {
  Matrix features;
  Matrix targets;
};
PooledRows pool_rows(const Dataset& dataset, const FeatureConfig& cfg, std::size_t workers = 1);

}  // namespace dme
