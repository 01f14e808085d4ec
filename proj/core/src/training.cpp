#include "dme/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace dme {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(beta_kl >= 0.0)) throw std::invalid_argument("TrainConfig: beta_kl must be >= 0");
  if (batch_rows < 1) throw std::invalid_argument("TrainConfig: batch_rows must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("TrainConfig: lr_decay must be > 0");
}

Architecture make_architecture(const FeatureConfig& features, const ArchOverrides& overrides) {
  Architecture arch;
  arch.input_dim = features.feature_dim();
  arch.target_dim = features.target_dim();
  if (overrides.hidden_dim) arch.hidden_dim = *overrides.hidden_dim;
  if (overrides.depth) arch.depth = *overrides.depth;
  if (overrides.dropout_rate) arch.dropout_rate = *overrides.dropout_rate;
  arch.validate();
  return arch;
}

AdamState AdamState::zeros_like(const NetworkParams& params) {
  return {NetworkParams::zeros(params.arch), NetworkParams::zeros(params.arch), 0};
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
    throw std::invalid_argument("adam_step: tensor count mismatch");
  for (std::size_t k = 0; k < p.size(); ++k)
    if (g[k].size() != p[k].size() || m[k].size() != p[k].size() || v[k].size() != p[k].size())
      throw std::invalid_argument("adam_step: shape mismatch in tensor " + std::to_string(k));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t j = 0; j < p[k].size(); ++j) {
      const double gj = g[k][j];
      m[k][j] = hyper.beta1 * m[k][j] + (1.0 - hyper.beta1) * gj;
      v[k][j] = hyper.beta2 * v[k][j] + (1.0 - hyper.beta2) * gj * gj;
      const double m_hat = m[k][j] / c1;
      const double v_hat = v[k][j] / c2;
      p[k][j] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
}

PooledRows pool_rows(const Dataset& dataset, const FeatureConfig& cfg, std::size_t workers) {
  cfg.validate();
  std::vector<FeatureSet> sets(dataset.frames.size());
  parallel_for(sets.size(), workers,
               [&](std::size_t n) { sets[n] = assemble_features(dataset.frames[n], cfg); });
  Eigen::Index rows = 0;
  for (const auto& s : sets) rows += s.features.rows.rows();
  PooledRows out;
  out.features.resize(rows, static_cast<Eigen::Index>(cfg.feature_dim()));
  out.targets.resize(rows, static_cast<Eigen::Index>(cfg.target_dim()));
  Eigen::Index at = 0;
  for (const auto& s : sets) {
    const Eigen::Index n = s.features.rows.rows();
    out.features.middleRows(at, n) = s.features.rows;
    out.targets.middleRows(at, n) = s.targets.rows;
    at += n;
  }
  return out;
}

TrainResult train(const Dataset& dataset, const FeatureConfig& features,
                  const ArchOverrides& overrides, const TrainConfig& cfg, const Dataset* holdout,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  features.validate();
  if (dataset.frames.empty()) throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  for (const auto& [cell, idx] : dataset.cells()) result.trained_cells.push_back(cell);

  const PooledRows train_rows = pool_rows(dataset, features, cfg.workers);
  std::optional<PooledRows> holdout_rows;
  if (holdout != nullptr && !holdout->frames.empty())
    holdout_rows = pool_rows(*holdout, features, cfg.workers);
  result.train_rows = static_cast<std::size_t>(train_rows.features.rows());

  const Architecture arch = make_architecture(features, overrides);
  result.params = init_params(arch, derive_seed(cfg.seed, {0}));
  AdamState adam = AdamState::zeros_like(result.params);
  result.initial_train = loss(result.params, train_rows.features, train_rows.targets, cfg.beta_kl,
                              nullptr, Mode::Infer);

  const std::size_t total_rows = result.train_rows;
  const std::size_t batch = std::min(cfg.batch_rows, total_rows);
  const std::size_t batches = total_rows / batch;
  const auto in_dim = static_cast<Eigen::Index>(arch.input_dim);
  const auto out_dim = static_cast<Eigen::Index>(arch.target_dim);

  std::vector<std::size_t> order(total_rows);
  Matrix xb(static_cast<Eigen::Index>(batch), in_dim);
  Matrix yb(static_cast<Eigen::Index>(batch), out_dim);
  double lr = cfg.learning_rate;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, {1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train.per_lag.assign(features.target_lag_count, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t r = 0; r < batch; ++r) {
        const auto src = static_cast<Eigen::Index>(order[b * batch + r]);
        xb.row(static_cast<Eigen::Index>(r)) = train_rows.features.row(src);
        yb.row(static_cast<Eigen::Index>(r)) = train_rows.targets.row(src);
      }
      const LossAndGradients lg = grad(result.params, xb, yb, cfg.beta_kl,
                                       derive_seed(cfg.seed, {2, epoch, b}));
      adam_step(result.params, lg.gradients, adam, lr, cfg.adam);
      rec.train.total += lg.loss.total;
      rec.train.reconstruction += lg.loss.reconstruction;
      rec.train.kl += lg.loss.kl;
      for (std::size_t l = 0; l < rec.train.per_lag.size(); ++l)
        rec.train.per_lag[l] += lg.loss.per_lag[l];
    }
    const double nb = static_cast<double>(batches);
    rec.train.total /= nb;
    rec.train.reconstruction /= nb;
    rec.train.kl /= nb;
    for (double& v : rec.train.per_lag) v /= nb;
    if (holdout_rows)
      rec.holdout = loss(result.params, holdout_rows->features, holdout_rows->targets,
                         cfg.beta_kl, nullptr, Mode::Infer);
    lr *= cfg.lr_decay;
    if (on_epoch) on_epoch(rec);
    result.history.push_back(std::move(rec));
  }
  return result;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_holdout: fraction must lie in (0, 1)");
  std::vector<bool> held(dataset.frames.size(), false);
  for (const auto& [cell, idx] : dataset.cells()) {
    const auto n_hold =
        static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * fraction));
    if (n_hold < 1 || n_hold >= idx.size())
      throw std::invalid_argument("split_holdout: cell " + cell_label(cell) + " with " +
                                  std::to_string(idx.size()) +
                                  " frames is too small to split at fraction " +
                                  std::to_string(fraction));
    std::vector<std::size_t> shuffled = idx;
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(modulation_code(cell.kind)),
                               std::bit_cast<std::uint64_t>(cell.snr_db + 0.0)}));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t k = 0; k < n_hold; ++k) held[shuffled[k]] = true;
  }
  std::vector<std::size_t> keep_idx, hold_idx;
  for (std::size_t n = 0; n < held.size(); ++n) (held[n] ? hold_idx : keep_idx).push_back(n);
  return {dataset.subset(keep_idx), dataset.subset(hold_idx)};
}

}  // namespace dme
