#pragma once

#include "dme/common.hpp"
#include "dme/features.hpp"

#include <span>
#include <string_view>

namespace dme {

enum class Mode { Train, Infer };

/// Encoder: input_dim -> hidden_dim (x depth, tanh, dropout) -> {mu, logvar}.
/// Decoder: latent -> hidden_dim (x depth, tanh, dropout) -> target_dim (linear).
struct Architecture {
  std::size_t input_dim = 34;
  std::size_t hidden_dim = 256;
  std::size_t depth = 3;
  std::size_t latent_dim = 1;
  std::size_t target_dim = 16;
  double dropout_rate = 0.2;

  static constexpr std::string_view activation = "tanh";

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// y = x W + b with W stored fan_in x fan_out.
struct DenseLayer {
  Matrix weight;
  RowVector bias;
};

/// Every trainable tensor of the network. Gradients and Adam moments reuse this type.
///
/// Serialization order (also the order of tensors()):
///   encoder[0].weight, encoder[0].bias, ..., mu_head.weight, mu_head.bias,
///   logvar_head.weight, logvar_head.bias, decoder[0].weight, decoder[0].bias, ...,
///   output_head.weight, output_head.bias. Weights are row-major.
struct NetworkParams {
  Architecture arch;
  std::vector<DenseLayer> encoder;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  std::vector<DenseLayer> decoder;
  DenseLayer output_head;

  static NetworkParams zeros(const Architecture& arch);

  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;
  /// Throws unless every tensor matches the architecture and all entries are finite.
  void validate() const;
  bool operator==(const NetworkParams& other) const;
};

using Gradients = NetworkParams;

struct LossBreakdown {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  std::vector<double> per_lag;
};

struct Encoded {
  double mu = 0.0;
  double logvar = 0.0;
};

/// Glorot-uniform weights, zero biases. Tensors are filled in serialization order.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

/// Single-row encoder pass. Train mode draws dropout masks from rng (rng may be
/// null in Infer mode).
Encoded encode(const NetworkParams& params, std::span<const double> feature_row, Mode mode,
               Rng* rng);

/// z = mu + exp(logvar / 2) * eps, eps ~ N(0, 1) drawn from rng.
double reparameterize(double mu, double logvar, Rng& rng);
/// Same with a caller-supplied eps.
double reparameterize_with(double mu, double logvar, double eps);

/// Single-latent decoder pass; layout [i_{t+1}..i_{t+L}, q_{t+1}..q_{t+L}].
RowVector decode(const NetworkParams& params, double z, Mode mode, Rng* rng);

/// Loss assembled from already computed outputs. reconstruction is the mean
/// over rows and lags of ((i_hat - i)^2 + (q_hat - q)^2) / 2; kl is the mean
/// over rows of 0.5 (mu^2 + exp(logvar) - logvar - 1).
LossBreakdown loss_from_outputs(const Matrix& predictions, const Matrix& targets,
                                const ColVector& mu, const ColVector& logvar, double beta_kl);

/// Full VAE loss over aligned rows. Train mode draws, in order: one dropout
/// mask per encoder layer, one eps per row, one mask per decoder layer. Infer
/// mode uses no randomness and decodes z = mu.
LossBreakdown loss(const NetworkParams& params, const Matrix& features, const Matrix& targets,
                   double beta_kl, Rng* rng, Mode mode);
LossBreakdown loss(const NetworkParams& params, const FeatureSeries& features,
                   const TargetSeries& targets, double beta_kl, Rng* rng, Mode mode);

struct LossAndGradients {
  LossBreakdown loss;
  Gradients gradients;
};

/// Exact gradient of the train-mode loss realized by Rng(rng_seed); that is,
/// loss(params, ..., Rng(rng_seed), Mode::Train) returns the same breakdown.
LossAndGradients grad(const NetworkParams& params, const Matrix& features, const Matrix& targets,
                      double beta_kl, std::uint64_t rng_seed);
LossAndGradients grad(const NetworkParams& params, const FeatureSeries& features,
                      const TargetSeries& targets, double beta_kl, std::uint64_t rng_seed);

}  // namespace dme
