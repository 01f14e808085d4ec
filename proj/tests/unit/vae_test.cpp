#include "dme/vae.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support/fd_oracle.hpp"

namespace dme {
namespace {

Architecture small_arch() {
  Architecture a;
  a.input_dim = 6;
  a.hidden_dim = 8;
  a.depth = 2;
  a.target_dim = 4;
  a.dropout_rate = 0.2;
  return a;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

TEST(InitParams, DeterministicPerSeed) {
  Architecture a = small_arch();
  EXPECT_EQ(init_params(a, 5), init_params(a, 5));
  EXPECT_FALSE(init_params(a, 5) == init_params(a, 6));
}

TEST(InitParams, DefaultShapes) {
  Architecture a;  // N = 34 default
  NetworkParams p = init_params(a, 1);
  ASSERT_EQ(p.encoder.size(), 3u);
  EXPECT_EQ(p.encoder[0].weight.rows(), 34);
  EXPECT_EQ(p.encoder[0].weight.cols(), 256);
  EXPECT_EQ(p.mu_head.weight.rows(), 256);
  EXPECT_EQ(p.mu_head.weight.cols(), 1);
  EXPECT_EQ(p.decoder[0].weight.rows(), 1);
  EXPECT_EQ(p.output_head.weight.cols(), 16);
  for (const auto& l : p.encoder) EXPECT_TRUE((l.bias.array() == 0.0).all());
}

TEST(InitParams, WeightMeanWithinStandardErrorBound) {
  NetworkParams p = init_params(Architecture{}, 11);
  for (const DenseLayer* l : {&p.encoder[0], &p.encoder[1], &p.decoder[2], &p.output_head}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l->weight.rows() + l->weight.cols()));
    const double count = static_cast<double>(l->weight.size());
    const double bound = 3.0 * (2.0 * limit / std::sqrt(12.0 * count));
    EXPECT_LE(std::abs(l->weight.mean()), bound);
    EXPECT_LE(l->weight.cwiseAbs().maxCoeff(), limit);
  }
}

TEST(Encode, ZeroNetworkGivesZeroStatistics) {
  NetworkParams p = NetworkParams::zeros(small_arch());
  const std::vector<double> x = {1, -2, 3, 0.5, 7, -1};
  Rng rng(3);
  for (Mode m : {Mode::Infer, Mode::Train}) {
    const Encoded e = encode(p, x, m, &rng);
    EXPECT_EQ(e.mu, 0.0);
    EXPECT_EQ(e.logvar, 0.0);
  }
}

TEST(Encode, InferModeIsDeterministic) {
  NetworkParams p = init_params(small_arch(), 9);
  const std::vector<double> x = {0.1, 0.2, -0.3, 0.4, -0.5, 0.6};
  const Encoded a = encode(p, x, Mode::Infer, nullptr);
  const Encoded b = encode(p, x, Mode::Infer, nullptr);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.logvar, b.logvar);
}

TEST(Encode, RejectsDimensionMismatch) {
  NetworkParams p = init_params(small_arch(), 9);
  const std::vector<double> x = {1, 2, 3};
  EXPECT_THROW(encode(p, x, Mode::Infer, nullptr), std::invalid_argument);
}

TEST(Encode, MatchesHandComputedTanhChain) {
  Architecture a;
  a.input_dim = 2;
  a.hidden_dim = 1;
  a.depth = 1;
  a.target_dim = 2;
  a.dropout_rate = 0.0;
  NetworkParams p = NetworkParams::zeros(a);
  p.encoder[0].weight << 0.5, -1.25;
  p.encoder[0].bias << 0.1;
  p.mu_head.weight << 2.0;
  p.mu_head.bias << -0.3;
  p.logvar_head.weight << -0.7;
  p.logvar_head.bias << 0.05;
  const std::vector<double> x = {0.8, 0.4};
  const double h = std::tanh(0.5 * 0.8 - 1.25 * 0.4 + 0.1);
  const Encoded e = encode(p, x, Mode::Infer, nullptr);
  EXPECT_NEAR(e.mu, 2.0 * h - 0.3, 1e-12);
  EXPECT_NEAR(e.logvar, -0.7 * h + 0.05, 1e-12);
}

TEST(Decode, ZeroNetworkAndHandComputedNetwork) {
  Architecture a;
  a.input_dim = 2;
  a.hidden_dim = 1;
  a.depth = 1;
  a.target_dim = 2;
  a.dropout_rate = 0.0;
  NetworkParams p = NetworkParams::zeros(a);
  EXPECT_TRUE((decode(p, 1.7, Mode::Infer, nullptr).array() == 0.0).all());

  p.decoder[0].weight << 1.5;
  p.decoder[0].bias << -0.2;
  p.output_head.weight << 0.9, -0.4;
  p.output_head.bias << 0.01, 0.02;
  const double g = std::tanh(1.5 * 0.3 - 0.2);
  const RowVector y = decode(p, 0.3, Mode::Infer, nullptr);
  EXPECT_NEAR(y(0), 0.9 * g + 0.01, 1e-12);
  EXPECT_NEAR(y(1), -0.4 * g + 0.02, 1e-12);
  EXPECT_EQ(y, decode(p, 0.3, Mode::Infer, nullptr));
}

TEST(Reparameterize, Cases) {
  EXPECT_EQ(reparameterize_with(0.0, 0.0, 1.0), 1.0);
  Rng rng(1);
  EXPECT_NEAR(reparameterize(0.75, -50.0, rng), 0.75, 1e-9);
  Rng mc(2024);
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) sum += reparameterize(2.0, 0.0, mc);
  EXPECT_NEAR(sum / n, 2.0, 0.02);
}

TEST(Loss, PerfectPredictorHasZeroReconstruction) {
  const Matrix t = random_matrix(5, 4, 1);
  const ColVector mu = ColVector::Zero(5), lv = ColVector::Zero(5);
  const LossBreakdown l = loss_from_outputs(t, t, mu, lv, 0.5);
  EXPECT_EQ(l.reconstruction, 0.0);
  EXPECT_EQ(l.kl, 0.0);
  EXPECT_EQ(l.total, 0.0);
}

TEST(Loss, AnalyticKlValues) {
  const Matrix t = Matrix::Zero(3, 2);
  const ColVector ones = ColVector::Ones(3), zeros = ColVector::Zero(3);
  EXPECT_EQ(loss_from_outputs(t, t, zeros, zeros, 1.0).kl, 0.0);
  EXPECT_EQ(loss_from_outputs(t, t, ones, zeros, 1.0).kl, 0.5);
}

TEST(Loss, ReconstructionAndPerLagLayout) {
  // Two lags: columns [i1, i2, q1, q2].
  Matrix pred(1, 4), tgt = Matrix::Zero(1, 4);
  pred << 1.0, 2.0, 3.0, 4.0;
  const ColVector z = ColVector::Zero(1);
  const LossBreakdown l = loss_from_outputs(pred, tgt, z, z, 0.0);
  EXPECT_DOUBLE_EQ(l.per_lag[0], (1.0 + 9.0) / 2.0);
  EXPECT_DOUBLE_EQ(l.per_lag[1], (4.0 + 16.0) / 2.0);
  EXPECT_DOUBLE_EQ(l.reconstruction, (5.0 + 10.0) / 2.0);
}

TEST(Loss, DecompositionAndKlNonNegativityProperty) {
  Rng rng(77);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    ColVector mu(4), lv(4);
    for (int k = 0; k < 4; ++k) {
      mu(k) = n(rng);
      lv(k) = n(rng);
    }
    const Matrix p = random_matrix(4, 6, static_cast<std::uint64_t>(trial));
    const Matrix t = random_matrix(4, 6, static_cast<std::uint64_t>(trial) + 1000);
    const double beta = std::abs(n(rng));
    const LossBreakdown l = loss_from_outputs(p, t, mu, lv, beta);
    EXPECT_GE(l.kl, 0.0);
    EXPECT_NEAR(l.total, l.reconstruction + beta * l.kl, 1e-10);
  }
}

TEST(Loss, RejectsMisalignedSeries) {
  NetworkParams p = init_params(small_arch(), 1);
  EXPECT_THROW(loss(p, random_matrix(5, 6, 1), random_matrix(4, 4, 2), 0.1, nullptr, Mode::Infer),
               std::invalid_argument);
}

TEST(Grad, ZeroAtSymmetricStationaryPoint) {
  NetworkParams p = NetworkParams::zeros(small_arch());
  const LossAndGradients lg = grad(p, Matrix::Zero(7, 6), Matrix::Zero(7, 4), 0.0, 3);
  for (auto t : lg.gradients.tensors())
    for (double v : t) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(lg.loss.total, 0.0);
}

TEST(Grad, DeterministicForSeed) {
  NetworkParams p = init_params(small_arch(), 4);
  const Matrix x = random_matrix(10, 6, 5), y = random_matrix(10, 4, 6);
  EXPECT_EQ(grad(p, x, y, 0.1, 42).gradients, grad(p, x, y, 0.1, 42).gradients);
}

TEST(Grad, LossMatchesSeededTrainModeLoss) {
  NetworkParams p = init_params(small_arch(), 4);
  const Matrix x = random_matrix(10, 6, 5), y = random_matrix(10, 4, 6);
  Rng rng(42);
  EXPECT_EQ(grad(p, x, y, 0.1, 42).loss.total, loss(p, x, y, 0.1, &rng, Mode::Train).total);
}

TEST(Grad, MatchesCentralFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const FdReport r = finite_difference_check(seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst tensor " << r.worst_tensor;
  }
}

TEST(Dropout, ExpectedPreActivationMatchesInference) {
  Architecture a;
  a.input_dim = 3;
  a.hidden_dim = 16;
  a.depth = 1;
  a.target_dim = 2;
  a.dropout_rate = 0.2;
  NetworkParams p = init_params(a, 8);
  p.mu_head.bias << 0.1;
  const std::vector<double> x = {0.4, -0.9, 1.3};
  const double reference = encode(p, x, Mode::Infer, nullptr).mu;
  Rng rng(99);
  double sum = 0.0;
  const int passes = 20000;
  for (int k = 0; k < passes; ++k) sum += encode(p, x, Mode::Train, &rng).mu;
  EXPECT_NEAR(sum / passes, reference, 0.02 * std::abs(reference));
}

}  // namespace
}  // namespace dme
