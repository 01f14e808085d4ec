#include "dme/vae.hpp"

#include <cmath>

namespace dme {
namespace {

using Index = Eigen::Index;

DenseLayer zero_layer(std::size_t fan_in, std::size_t fan_out) {
  DenseLayer l;
  l.weight = Matrix::Zero(static_cast<Index>(fan_in), static_cast<Index>(fan_out));
  l.bias = RowVector::Zero(static_cast<Index>(fan_out));
  return l;
}

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(RowVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> view(const RowVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

template <typename Params, typename Out>
void collect(Params& p, Out& out) {
  for (auto& l : p.encoder) {
    out.push_back(view(l.weight));
    out.push_back(view(l.bias));
  }
  out.push_back(view(p.mu_head.weight));
  out.push_back(view(p.mu_head.bias));
  out.push_back(view(p.logvar_head.weight));
  out.push_back(view(p.logvar_head.bias));
  for (auto& l : p.decoder) {
    out.push_back(view(l.weight));
    out.push_back(view(l.bias));
  }
  out.push_back(view(p.output_head.weight));
  out.push_back(view(p.output_head.bias));
}

Matrix affine(const Matrix& input, const DenseLayer& layer) {
  Matrix z = input * layer.weight;
  z.rowwise() += layer.bias;
  return z;
}

Matrix draw_mask(Index rows, Index cols, double rate, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) mask(r, c) = uniform(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

// Activations of one stack of tanh layers. inputs[k] feeds layer k; act[k] is
// tanh output before dropout; masks[k] is empty when no dropout was applied.
struct StackCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> act;
  std::vector<Matrix> masks;
  Matrix output;
};

StackCache run_stack(const std::vector<DenseLayer>& layers, Matrix input, double rate, Mode mode,
                     Rng* rng) {
  StackCache c;
  const bool dropout = mode == Mode::Train && rate > 0.0;
  if (dropout && rng == nullptr) throw std::invalid_argument("train-mode dropout requires an rng");
  for (const DenseLayer& layer : layers) {
    Matrix h = affine(input, layer).array().tanh().matrix();
    c.inputs.push_back(std::move(input));
    if (dropout) {
      Matrix mask = draw_mask(h.rows(), h.cols(), rate, *rng);
      input = h.cwiseProduct(mask);
      c.masks.push_back(std::move(mask));
    } else {
      input = h;
    }
    c.act.push_back(std::move(h));
  }
  c.output = std::move(input);
  return c;
}

// Backpropagates d(loss)/d(stack output) through the stack; returns d/d(stack input).
Matrix backprop_stack(const std::vector<DenseLayer>& layers, const StackCache& c, Matrix upstream,
                      std::vector<DenseLayer>& grads) {
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (!c.masks.empty()) upstream = upstream.cwiseProduct(c.masks[k]);
    const Matrix dz =
        upstream.cwiseProduct((1.0 - c.act[k].array().square()).matrix());
    grads[k].weight.noalias() = c.inputs[k].transpose() * dz;
    grads[k].bias = dz.colwise().sum();
    upstream.noalias() = dz * layers[k].weight.transpose();
  }
  return upstream;
}

struct ForwardCache {
  StackCache encoder;
  ColVector mu;
  ColVector logvar;
  ColVector eps;  // empty in Infer mode
  StackCache decoder;
  Matrix predictions;
};

ForwardCache forward(const NetworkParams& p, const Matrix& x, Mode mode, Rng* rng) {
  if (static_cast<std::size_t>(x.cols()) != p.arch.input_dim)
    throw std::invalid_argument("feature width " + std::to_string(x.cols()) +
                                " does not match network input_dim " +
                                std::to_string(p.arch.input_dim));
  ForwardCache f;
  f.encoder = run_stack(p.encoder, x, p.arch.dropout_rate, mode, rng);
  f.mu = affine(f.encoder.output, p.mu_head).col(0);
  f.logvar = affine(f.encoder.output, p.logvar_head).col(0);
  Matrix z(x.rows(), 1);
  if (mode == Mode::Train) {
    if (rng == nullptr) throw std::invalid_argument("train mode requires an rng");
    std::normal_distribution<double> normal(0.0, 1.0);
    f.eps.resize(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
      f.eps(r) = normal(*rng);
      z(r, 0) = reparameterize_with(f.mu(r), f.logvar(r), f.eps(r));
    }
  } else {
    z.col(0) = f.mu;
  }
  f.decoder = run_stack(p.decoder, std::move(z), p.arch.dropout_rate, mode, rng);
  f.predictions = affine(f.decoder.output, p.output_head);
  return f;
}

void check_aligned(const NetworkParams& p, const Matrix& features, const Matrix& targets) {
  if (features.rows() != targets.rows())
    throw std::invalid_argument("misaligned series: " + std::to_string(features.rows()) +
                                " feature rows vs " + std::to_string(targets.rows()) +
                                " target rows");
  if (features.rows() == 0) throw std::invalid_argument("loss over zero rows");
  if (static_cast<std::size_t>(targets.cols()) != p.arch.target_dim)
    throw std::invalid_argument("target width " + std::to_string(targets.cols()) +
                                " does not match network target_dim " +
                                std::to_string(p.arch.target_dim));
}

}  // namespace

void Architecture::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || depth < 1 || target_dim < 1)
    throw std::invalid_argument("Architecture: all dimensions must be >= 1");
  if (latent_dim != 1) throw std::invalid_argument("Architecture: latent_dim must be 1");
  if (target_dim % 2 != 0)
    throw std::invalid_argument("Architecture: target_dim must be even (I and Q per lag)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("Architecture: dropout_rate must lie in [0, 1)");
}

NetworkParams NetworkParams::zeros(const Architecture& arch) {
  arch.validate();
  NetworkParams p;
  p.arch = arch;
  std::size_t fan_in = arch.input_dim;
  for (std::size_t k = 0; k < arch.depth; ++k) {
    p.encoder.push_back(zero_layer(fan_in, arch.hidden_dim));
    fan_in = arch.hidden_dim;
  }
  p.mu_head = zero_layer(arch.hidden_dim, arch.latent_dim);
  p.logvar_head = zero_layer(arch.hidden_dim, arch.latent_dim);
  fan_in = arch.latent_dim;
  for (std::size_t k = 0; k < arch.depth; ++k) {
    p.decoder.push_back(zero_layer(fan_in, arch.hidden_dim));
    fan_in = arch.hidden_dim;
  }
  p.output_head = zero_layer(arch.hidden_dim, arch.target_dim);
  return p;
}

std::vector<std::span<double>> NetworkParams::tensors() {
  std::vector<std::span<double>> out;
  collect(*this, out);
  return out;
}

std::vector<std::span<const double>> NetworkParams::tensors() const {
  std::vector<std::span<const double>> out;
  collect(*this, out);
  return out;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

void NetworkParams::validate() const {
  arch.validate();
  const NetworkParams shape = zeros(arch);
  if (encoder.size() != shape.encoder.size() || decoder.size() != shape.decoder.size())
    throw std::invalid_argument("NetworkParams: layer count does not match architecture");
  auto mine = tensors();
  auto ref = shape.tensors();
  for (std::size_t k = 0; k < ref.size(); ++k) {
    if (mine[k].size() != ref[k].size())
      throw std::invalid_argument("NetworkParams: tensor " + std::to_string(k) +
                                  " has wrong size");
    for (double v : mine[k])
      if (!std::isfinite(v))
        throw std::invalid_argument("NetworkParams: non-finite entry in tensor " +
                                    std::to_string(k));
  }
  // Shapes, not only sizes.
  auto same = [](const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size();
  };
  bool ok = same(mu_head, shape.mu_head) && same(logvar_head, shape.logvar_head) &&
            same(output_head, shape.output_head);
  for (std::size_t k = 0; k < encoder.size(); ++k) ok = ok && same(encoder[k], shape.encoder[k]);
  for (std::size_t k = 0; k < decoder.size(); ++k) ok = ok && same(decoder[k], shape.decoder[k]);
  if (!ok) throw std::invalid_argument("NetworkParams: tensor shape does not match architecture");
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (!(arch == other.arch)) return false;
  auto a = tensors();
  auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) return false;
    for (std::size_t j = 0; j < a[k].size(); ++j)
      if (a[k][j] != b[k][j]) return false;
  }
  return true;
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
  NetworkParams p = NetworkParams::zeros(arch);
  Rng rng(seed);
  auto fill = [&rng](DenseLayer& l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Index k = 0; k < l.weight.size(); ++k) l.weight.data()[k] = uniform(rng);
  };
  for (auto& l : p.encoder) fill(l);
  fill(p.mu_head);
  fill(p.logvar_head);
  for (auto& l : p.decoder) fill(l);
  fill(p.output_head);
  return p;
}

Encoded encode(const NetworkParams& params, std::span<const double> feature_row, Mode mode,
               Rng* rng) {
  if (feature_row.size() != params.arch.input_dim)
    throw std::invalid_argument("encode: feature row has " + std::to_string(feature_row.size()) +
                                " entries, network expects " +
                                std::to_string(params.arch.input_dim));
  Matrix x(1, static_cast<Index>(feature_row.size()));
  for (std::size_t k = 0; k < feature_row.size(); ++k) x(0, static_cast<Index>(k)) = feature_row[k];
  const StackCache enc = run_stack(params.encoder, std::move(x), params.arch.dropout_rate, mode, rng);
  return {affine(enc.output, params.mu_head)(0, 0), affine(enc.output, params.logvar_head)(0, 0)};
}

double reparameterize_with(double mu, double logvar, double eps) {
  return mu + std::exp(0.5 * logvar) * eps;
}

double reparameterize(double mu, double logvar, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return reparameterize_with(mu, logvar, normal(rng));
}

RowVector decode(const NetworkParams& params, double z, Mode mode, Rng* rng) {
  if (!std::isfinite(z)) throw std::invalid_argument("decode: latent must be finite");
  Matrix in(1, 1);
  in(0, 0) = z;
  const StackCache dec = run_stack(params.decoder, std::move(in), params.arch.dropout_rate, mode, rng);
  return affine(dec.output, params.output_head).row(0);
}

LossBreakdown loss_from_outputs(const Matrix& predictions, const Matrix& targets,
                                const ColVector& mu, const ColVector& logvar, double beta_kl) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw std::invalid_argument("loss: prediction and target shapes differ");
  if (mu.size() != predictions.rows() || logvar.size() != predictions.rows())
    throw std::invalid_argument("loss: latent statistics misaligned with rows");
  if (!(beta_kl >= 0.0)) throw std::invalid_argument("loss: beta_kl must be >= 0");
  const Index rows = predictions.rows();
  const Index lags = predictions.cols() / 2;
  if (rows == 0 || lags == 0) throw std::invalid_argument("loss: empty series");

  LossBreakdown out;
  const Matrix sq = (predictions - targets).array().square().matrix();
  out.per_lag.resize(static_cast<std::size_t>(lags));
  for (Index l = 0; l < lags; ++l)
    out.per_lag[static_cast<std::size_t>(l)] =
        (sq.col(l).sum() + sq.col(lags + l).sum()) / (2.0 * static_cast<double>(rows));
  out.reconstruction = sq.sum() / static_cast<double>(sq.size());

  double kl = 0.0;
  for (Index r = 0; r < rows; ++r) kl += 0.5 * (mu(r) * mu(r) + std::exp(logvar(r)) - logvar(r) - 1.0);
  out.kl = std::max(0.0, kl / static_cast<double>(rows));
  out.total = out.reconstruction + beta_kl * out.kl;
  return out;
}

LossBreakdown loss(const NetworkParams& params, const Matrix& features, const Matrix& targets,
                   double beta_kl, Rng* rng, Mode mode) {
  check_aligned(params, features, targets);
  const ForwardCache f = forward(params, features, mode, rng);
  return loss_from_outputs(f.predictions, targets, f.mu, f.logvar, beta_kl);
}

LossBreakdown loss(const NetworkParams& params, const FeatureSeries& features,
                   const TargetSeries& targets, double beta_kl, Rng* rng, Mode mode) {
  if (features.t_offset != targets.t_offset)
    throw std::invalid_argument("misaligned series: feature and target offsets differ");
  return loss(params, features.rows, targets.rows, beta_kl, rng, mode);
}

LossAndGradients grad(const NetworkParams& params, const Matrix& features, const Matrix& targets,
                      double beta_kl, std::uint64_t rng_seed) {
  check_aligned(params, features, targets);
  Rng rng(rng_seed);
  const ForwardCache f = forward(params, features, Mode::Train, &rng);

  LossAndGradients out;
  out.loss = loss_from_outputs(f.predictions, targets, f.mu, f.logvar, beta_kl);
  Gradients& g = out.gradients;
  g = NetworkParams::zeros(params.arch);

  const double rows = static_cast<double>(features.rows());
  const Matrix d_pred =
      (f.predictions - targets) * (2.0 / (rows * static_cast<double>(targets.cols())));
  g.output_head.weight.noalias() = f.decoder.output.transpose() * d_pred;
  g.output_head.bias = d_pred.colwise().sum();
  Matrix upstream = d_pred * params.output_head.weight.transpose();
  const Matrix d_z = backprop_stack(params.decoder, f.decoder, std::move(upstream), g.decoder);

  Matrix d_mu(features.rows(), 1), d_logvar(features.rows(), 1);
  for (Index r = 0; r < features.rows(); ++r) {
    const double sigma = std::exp(0.5 * f.logvar(r));
    d_mu(r, 0) = d_z(r, 0) + beta_kl * f.mu(r) / rows;
    d_logvar(r, 0) = d_z(r, 0) * f.eps(r) * 0.5 * sigma +
                     beta_kl * 0.5 * (std::exp(f.logvar(r)) - 1.0) / rows;
  }
  g.mu_head.weight.noalias() = f.encoder.output.transpose() * d_mu;
  g.mu_head.bias = d_mu.colwise().sum();
  g.logvar_head.weight.noalias() = f.encoder.output.transpose() * d_logvar;
  g.logvar_head.bias = d_logvar.colwise().sum();
  Matrix d_enc = d_mu * params.mu_head.weight.transpose();
  d_enc.noalias() += d_logvar * params.logvar_head.weight.transpose();
  backprop_stack(params.encoder, f.encoder, std::move(d_enc), g.encoder);
  return out;
}

LossAndGradients grad(const NetworkParams& params, const FeatureSeries& features,
                      const TargetSeries& targets, double beta_kl, std::uint64_t rng_seed) {
  if (features.t_offset != targets.t_offset)
    throw std::invalid_argument("misaligned series: feature and target offsets differ");
  return grad(params, features.rows, targets.rows, beta_kl, rng_seed);
}

}  // namespace dme
