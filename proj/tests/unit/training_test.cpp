#include "dme/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "support/oracles.hpp"

namespace dme {
namespace {

Dataset toy(std::vector<ModulationKind> mods, std::vector<double> snrs, std::size_t frames,
            std::uint64_t seed = 1) {
  DatasetSpec spec;
  spec.modulations = std::move(mods);
  spec.snrs_db = std::move(snrs);
  spec.frames_per_cell = frames;
  spec.seed = seed;
  return generate_dataset(spec);
}

ArchOverrides tiny() {
  ArchOverrides o;
  o.hidden_dim = 16;
  o.depth = 2;
  return o;
}

NetworkParams small_params(std::uint64_t seed) {
  Architecture a;
  a.input_dim = 3;
  a.hidden_dim = 4;
  a.depth = 1;
  a.target_dim = 2;
  return init_params(a, seed);
}

TEST(AdamStep, ZeroGradientLeavesParams) {
  NetworkParams p = small_params(1);
  const NetworkParams before = p;
  AdamState s = AdamState::zeros_like(p);
  adam_step(p, NetworkParams::zeros(p.arch), s, 1e-3);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, 1u);
}

TEST(AdamStep, FirstStepIsSignedLearningRate) {
  NetworkParams p = small_params(2);
  const NetworkParams before = p;
  NetworkParams g = NetworkParams::zeros(p.arch);
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  for (auto t : g.tensors())
    for (double& v : t) v = (rng() & 1 ? 1.0 : -1.0) * u(rng);
  AdamState s = AdamState::zeros_like(p);
  const double lr = 1e-3;
  adam_step(p, g, s, lr);
  auto pa = p.tensors();
  auto pb = before.tensors();
  auto gt = g.tensors();
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t j = 0; j < pa[k].size(); ++j)
      EXPECT_NEAR(pa[k][j] - pb[k][j], -lr * (gt[k][j] > 0 ? 1.0 : -1.0), lr * 1e-6);
}

TEST(AdamStep, MatchesScalarOracleOverThreeSteps) {
  Architecture a;
  a.input_dim = 1;
  a.hidden_dim = 1;
  a.depth = 1;
  a.target_dim = 2;
  NetworkParams p = NetworkParams::zeros(a);
  p.encoder[0].weight(0, 0) = 0.3;
  p.encoder[0].bias(0) = -1.2;
  AdamState s = AdamState::zeros_like(p);
  oracle::ScalarAdam o1, o2;
  double x1 = 0.3, x2 = -1.2;
  const double grads[3][2] = {{0.5, -2.0}, {-0.1, 3.0}, {0.7, 0.0}};
  for (const auto& step : grads) {
    NetworkParams g = NetworkParams::zeros(a);
    g.encoder[0].weight(0, 0) = step[0];
    g.encoder[0].bias(0) = step[1];
    adam_step(p, g, s, 0.01);
    x1 = o1.step(x1, step[0], 0.01);
    x2 = o2.step(x2, step[1], 0.01);
  }
  EXPECT_NEAR(p.encoder[0].weight(0, 0), x1, 1e-12);
  EXPECT_NEAR(p.encoder[0].bias(0), x2, 1e-12);
  EXPECT_EQ(s.step, 3u);
}

TEST(AdamStep, RejectsShapeMismatch) {
  NetworkParams p = small_params(1);
  Architecture other = p.arch;
  other.hidden_dim = 5;
  AdamState s = AdamState::zeros_like(p);
  EXPECT_THROW(adam_step(p, NetworkParams::zeros(other), s, 1e-3), std::invalid_argument);
}

TEST(Train, RejectsZeroEpochsAndEmptyDataset) {
  TrainConfig cfg;
  cfg.epochs = 0;
  const Dataset ds = toy({ModulationKind::BPSK}, {10.0}, 2);
  EXPECT_THROW(train(ds, FeatureConfig{}, tiny(), cfg), std::invalid_argument);
  cfg.epochs = 1;
  EXPECT_THROW(train(Dataset{}, FeatureConfig{}, tiny(), cfg), std::invalid_argument);
}

TEST(Train, OneEpochHistory) {
  TrainConfig cfg;
  cfg.epochs = 1;
  const Dataset ds = toy({ModulationKind::BPSK, ModulationKind::WBFM}, {10.0}, 5);
  const TrainResult r = train(ds, FeatureConfig{}, tiny(), cfg);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].epoch, 1u);
  EXPECT_FALSE(r.history[0].holdout.has_value());
  EXPECT_EQ(r.train_rows, 10u * 94u);
  EXPECT_EQ(r.trained_cells.size(), 2u);
}

TEST(Train, BitIdenticalForSameSeedAtAnyWorkerCount) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  const Dataset ds = toy({ModulationKind::QPSK, ModulationKind::AM_DSB}, {10.0}, 4);
  const TrainResult a = train(ds, FeatureConfig{}, tiny(), cfg);
  cfg.workers = 3;
  const TrainResult b = train(ds, FeatureConfig{}, tiny(), cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.history.back().train.total, b.history.back().train.total);
  cfg.seed = 6;
  EXPECT_FALSE(train(ds, FeatureConfig{}, tiny(), cfg).params == a.params);
}

TEST(Train, SingleBatchWhenFewerRowsThanBatch) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_rows = 100000;
  const Dataset ds = toy({ModulationKind::GFSK}, {10.0}, 2);
  const TrainResult r = train(ds, FeatureConfig{}, tiny(), cfg);
  EXPECT_TRUE(std::isfinite(r.history.back().train.total));
}

TEST(Train, HoldoutRecordedEveryEpochAndCallbackFires) {
  TrainConfig cfg;
  cfg.epochs = 3;
  const Dataset ds = toy({ModulationKind::BPSK, ModulationKind::QAM16}, {10.0}, 10);
  const auto [tr, ho] = split_holdout(ds, 0.2, 3);
  std::vector<std::size_t> seen;
  const TrainResult r = train(tr, FeatureConfig{}, tiny(), cfg, &ho,
                              [&](const EpochRecord& e) { seen.push_back(e.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
  for (const auto& e : r.history) {
    ASSERT_TRUE(e.holdout.has_value());
    EXPECT_TRUE(std::isfinite(e.holdout->total));
  }
}

TEST(Properties, TrainLossDecreasesOnToyData) {
  TrainConfig cfg;
  cfg.epochs = 8;
  const Dataset ds = toy({ModulationKind::BPSK, ModulationKind::WBFM}, {10.0}, 10);
  for (std::uint64_t seed : {1u, 2u}) {
    cfg.seed = seed;
    const TrainResult r = train(ds, FeatureConfig{}, ArchOverrides{.hidden_dim = 32}, cfg);
    EXPECT_LT(r.history.back().train.total, r.history.front().train.total) << "seed " << seed;
    EXPECT_LT(r.history.back().train.total, r.initial_train.total);
  }
}

TEST(Properties, LearningRateDecayChangesTrajectory) {
  TrainConfig cfg;
  cfg.epochs = 2;
  const Dataset ds = toy({ModulationKind::BPSK}, {10.0}, 3);
  const TrainResult flat = train(ds, FeatureConfig{}, tiny(), cfg);
  cfg.lr_decay = 0.5;
  const TrainResult decayed = train(ds, FeatureConfig{}, tiny(), cfg);
  EXPECT_EQ(flat.history[0].train.total, decayed.history[0].train.total);
  EXPECT_NE(flat.history[1].train.total, decayed.history[1].train.total);
}

TEST(SplitHoldout, HalfSplitOfTenFrameCells) {
  const Dataset ds = toy({ModulationKind::BPSK, ModulationKind::PSK8}, {0.0, 10.0}, 10);
  const auto [tr, ho] = split_holdout(ds, 0.5, 1);
  for (const auto& [cell, idx] : tr.cells()) EXPECT_EQ(idx.size(), 5u);
  for (const auto& [cell, idx] : ho.cells()) EXPECT_EQ(idx.size(), 5u);
  EXPECT_EQ(tr.cells().size(), 4u);
  EXPECT_EQ(ho.cells().size(), 4u);
}

TEST(SplitHoldout, PartitionsTheFrames) {
  const Dataset ds = toy({ModulationKind::QAM64, ModulationKind::CPFSK}, {4.0}, 7);
  const auto [tr, ho] = split_holdout(ds, 0.3, 8);
  std::vector<std::vector<double>> all, parts;
  for (const auto& f : ds.frames) all.push_back(f.i);
  for (const auto& f : tr.frames) parts.push_back(f.i);
  for (const auto& f : ho.frames) parts.push_back(f.i);
  std::sort(all.begin(), all.end());
  std::sort(parts.begin(), parts.end());
  EXPECT_EQ(all, parts);
}

TEST(SplitHoldout, SeedsGiveDistinctPartitions) {
  const Dataset ds = toy({ModulationKind::BPSK}, {10.0}, 100);
  auto firsts = [&](std::uint64_t seed) {
    std::vector<double> v;
    for (const auto& f : split_holdout(ds, 0.2, seed).second.frames) v.push_back(f.i[0]);
    return v;
  };
  EXPECT_NE(firsts(1), firsts(2));
  EXPECT_EQ(firsts(1), firsts(1));
}

TEST(SplitHoldout, RejectsUnsplittableCellsAndBadFractions) {
  const Dataset ds = toy({ModulationKind::BPSK}, {10.0}, 1);
  EXPECT_THROW(split_holdout(ds, 0.5, 1), std::invalid_argument);
  const Dataset ok = toy({ModulationKind::BPSK}, {10.0}, 4);
  EXPECT_THROW(split_holdout(ok, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_holdout(ok, 1.0, 1), std::invalid_argument);
}

TEST(Properties, StratificationKeepsEveryCell) {
  const Dataset ds = toy({ModulationKind::BPSK, ModulationKind::WBFM, ModulationKind::AM_SSB},
                         {-2.0, 6.0, 14.0}, 5);
  for (double f : {0.2, 0.4, 0.6, 0.8}) {
    const auto [tr, ho] = split_holdout(ds, f, 2);
    EXPECT_EQ(tr.cells().size(), 9u);
    EXPECT_EQ(ho.cells().size(), 9u);
  }
}

TEST(Architecture, DefaultsMatchPublishedSetup) {
  const Architecture a = make_architecture(FeatureConfig{}, ArchOverrides{});
  EXPECT_EQ(a.hidden_dim, 256u);
  EXPECT_EQ(a.depth, 3u);
  EXPECT_EQ(a.latent_dim, 1u);
  EXPECT_EQ(a.dropout_rate, 0.2);
  EXPECT_EQ(a.input_dim, 34u);
  EXPECT_EQ(TrainConfig{}.learning_rate, 1e-3);
}

}  // namespace
}  // namespace dme
