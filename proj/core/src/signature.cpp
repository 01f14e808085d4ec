#include "dme/signature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dme {
namespace {

void check_compatible(const Signature& a, const Signature& b) {
  if (a.bins_per_axis != b.bins_per_axis || a.range != b.range ||
      a.bins.rows() != b.bins.rows() || a.bins.cols() != b.bins.cols())
    throw std::invalid_argument("signatures differ in bin count or range");
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_pnm(const std::filesystem::path& path, const Image& img, std::size_t channels,
               const char* magic) {
  if (img.channels != channels)
    throw std::invalid_argument(std::string(magic) + " writer given an image with " +
                                std::to_string(img.channels) + " channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << magic << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

EmbeddingSeries embed_frame(const NetworkParams& params, const IqFrame& frame,
                            const FeatureConfig& cfg) {
  if (params.arch.input_dim != cfg.feature_dim())
    throw std::invalid_argument("embed_frame: network expects " +
                                std::to_string(params.arch.input_dim) +
                                " features but the feature config yields " +
                                std::to_string(cfg.feature_dim()));
  const FeatureSet fs = assemble_features(frame, cfg);
  EmbeddingSeries out;
  out.t_offset = fs.features.t_offset;
  out.z.resize(static_cast<std::size_t>(fs.features.rows.rows()));
  const auto cols = static_cast<std::size_t>(fs.features.rows.cols());
  for (Eigen::Index r = 0; r < fs.features.rows.rows(); ++r) {
    const std::span<const double> row(fs.features.rows.data() + r * fs.features.rows.cols(), cols);
    out.z[static_cast<std::size_t>(r)] = encode(params, row, Mode::Infer, nullptr).mu;
  }
  return out;
}

std::size_t axis_bin(double v, std::size_t bins, double range) {
  if (!std::isfinite(v)) throw std::invalid_argument("axis_bin: non-finite value");
  const double u = v * (static_cast<double>(bins) / (2.0 * range));
  double k;
  if (bins % 2 == 0)
    k = std::floor(u) + static_cast<double>(bins / 2);
  else
    k = std::floor(u + 0.5) + static_cast<double>(bins / 2);
  if (k < 0.0) return 0;
  if (k >= static_cast<double>(bins)) return bins - 1;
  return static_cast<std::size_t>(k);
}

Signature histogram2d(const EmbeddingSeries& emb, std::size_t bins, double range) {
  if (emb.z.size() < 2)
    throw std::invalid_argument("histogram2d: embedding needs at least 2 samples, got " +
                                std::to_string(emb.z.size()));
  if (bins < 2) throw std::invalid_argument("histogram2d: bins must be >= 2");
  if (!(range > 0.0) || !std::isfinite(range))
    throw std::invalid_argument("histogram2d: range must be positive and finite");
  Signature sig;
  sig.bins_per_axis = bins;
  sig.range = range;
  sig.bins = Matrix::Zero(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(bins));
  const std::size_t pairs = emb.z.size() - 1;
  for (std::size_t t = 0; t < pairs; ++t) {
    const std::size_t a = axis_bin(emb.z[t], bins, range);
    const std::size_t b = axis_bin(emb.z[t + 1] - emb.z[t], bins, range);
    sig.bins(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
  }
  sig.bins /= static_cast<double>(pairs);
  sig.normalized = true;
  return sig;
}

Signature flip(const Signature& sig) {
  Signature out = sig;
  out.bins = sig.bins.reverse();
  return out;
}

double total_variation(const Signature& a, const Signature& b) {
  check_compatible(a, b);
  return 0.5 * (a.bins - b.bins).cwiseAbs().sum();
}

double signature_distance(const Signature& a, const Signature& b) {
  // Both flip directions so that summation order cannot break d(a, b) == d(b, a).
  const double flipped = std::min(total_variation(a, flip(b)), total_variation(flip(a), b));
  const double d = std::min(total_variation(a, b), flipped);
  return std::clamp(d, 0.0, 1.0);
}

Signature mean_signature(const std::vector<Signature>& members) {
  if (members.empty()) throw std::invalid_argument("mean_signature: empty group");
  Signature out = members.front();
  for (std::size_t k = 1; k < members.size(); ++k) {
    check_compatible(out, members[k]);
    out.bins += members[k].bins;
  }
  out.bins /= static_cast<double>(members.size());
  return out;
}

Matrix distance_matrix(const std::vector<SignatureGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("distance_matrix: no groups");
  std::vector<Signature> means;
  means.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.members.empty())
      throw std::invalid_argument("distance_matrix: group '" + g.label + "' is empty");
    means.push_back(mean_signature(g.members));
  }
  const auto n = static_cast<Eigen::Index>(groups.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = r + 1; c < n; ++c)
      d(r, c) = d(c, r) = signature_distance(means[static_cast<std::size_t>(r)],
                                             means[static_cast<std::size_t>(c)]);
  return d;
}

std::array<std::uint8_t, 3> Image::rgb(std::size_t x, std::size_t y) const {
  const std::size_t at = (y * width + x) * channels;
  if (channels == 1) return {pixels[at], pixels[at], pixels[at]};
  return {pixels[at], pixels[at + 1], pixels[at + 2]};
}

std::array<std::uint8_t, 3> colormap(std::size_t index) {
  const double x = static_cast<double>(std::min<std::size_t>(index, 255)) / 255.0;
  return {to_byte(1.5 - std::abs(4.0 * x - 3.0)), to_byte(1.5 - std::abs(4.0 * x - 2.0)),
          to_byte(1.5 - std::abs(4.0 * x - 1.0))};
}

std::size_t colormap_index(double z, double range) {
  const double c = std::clamp(z, -range, range);
  return static_cast<std::size_t>(std::lround((c + range) / (2.0 * range) * 255.0));
}

std::size_t trajectory_pixel(double value, double extent, std::size_t size, bool flip_axis) {
  const double u = (std::clamp(value, -extent, extent) + extent) / (2.0 * extent);
  const auto p = static_cast<std::size_t>(std::lround(u * static_cast<double>(size - 1)));
  return flip_axis ? size - 1 - p : p;
}

Image colorize_trajectory(const IqFrame& frame, const EmbeddingSeries& emb, double range,
                          std::size_t width, std::size_t height) {
  frame.validate();
  if (emb.t_offset + emb.z.size() > frame.size())
    throw std::invalid_argument("colorize_trajectory: embedding extends past the frame");
  if (width < 2 || height < 2) throw std::invalid_argument("colorize_trajectory: canvas too small");
  if (!(range > 0.0)) throw std::invalid_argument("colorize_trajectory: range must be > 0");

  Image img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.assign(width * height * 3, 255);

  double extent = 0.0;
  for (std::size_t k = 0; k < emb.z.size(); ++k) {
    const std::size_t t = emb.t_offset + k;
    extent = std::max({extent, std::abs(frame.i[t]), std::abs(frame.q[t])});
  }
  if (extent == 0.0) extent = 1.0;

  std::vector<std::size_t> order(emb.z.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(emb.z[a]) < std::abs(emb.z[b]);
  });
  for (std::size_t k : order) {
    const std::size_t t = emb.t_offset + k;
    const std::size_t x = trajectory_pixel(frame.i[t], extent, width, false);
    const std::size_t y = trajectory_pixel(frame.q[t], extent, height, true);
    const auto color = colormap(colormap_index(emb.z[k], range));
    std::copy(color.begin(), color.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>((y * width + x) * 3));
  }
  return img;
}

Image signature_image(const Signature& sig) {
  const std::size_t B = sig.bins_per_axis;
  Image img;
  img.width = B;
  img.height = B;
  img.channels = 1;
  img.pixels.assign(B * B, 0);
  const double peak = sig.bins.maxCoeff();
  if (!(peak > 0.0)) return img;
  for (std::size_t a = 0; a < B; ++a)
    for (std::size_t b = 0; b < B; ++b) {
      const double v = sig.bins(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      img.pixels[(B - 1 - b) * B + a] =
          static_cast<std::uint8_t>(std::floor(255.0 * v / peak));
    }
  return img;
}

Image heatmap_image(const Matrix& values, std::size_t cell) {
  if (cell < 1) throw std::invalid_argument("heatmap_image: cell size must be >= 1");
  Image img;
  img.width = static_cast<std::size_t>(values.cols()) * cell;
  img.height = static_cast<std::size_t>(values.rows()) * cell;
  img.channels = 1;
  img.pixels.assign(img.width * img.height, 0);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      img.pixels[y * img.width + x] =
          to_byte(values(static_cast<Eigen::Index>(y / cell), static_cast<Eigen::Index>(x / cell)));
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) { write_pnm(path, img, 3, "P6"); }
void write_pgm(const std::filesystem::path& path, const Image& img) { write_pnm(path, img, 1, "P5"); }

void write_signature_csv(const std::filesystem::path& path, const Signature& sig) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", sig.range);
  out << "# B=" << sig.bins_per_axis << " R=" << buf << '\n';
  for (Eigen::Index a = 0; a < sig.bins.rows(); ++a) {
    for (Eigen::Index b = 0; b < sig.bins.cols(); ++b) {
      std::snprintf(buf, sizeof buf, "%.17g", sig.bins(a, b));
      if (b) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Signature read_signature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::size_t B = 0;
  double R = 0.0;
  if (std::sscanf(line.c_str(), "# B=%zu R=%lf", &B, &R) != 2 || B < 2 || !(R > 0.0))
    throw IoError(path.string() + ": malformed signature header '" + line + "'");
  Signature sig;
  sig.bins_per_axis = B;
  sig.range = R;
  sig.bins.resize(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(B));
  for (std::size_t a = 0; a < B; ++a) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": truncated at row " + std::to_string(a));
    std::istringstream row(line);
    std::string cell;
    std::size_t b = 0;
    while (std::getline(row, cell, ',')) {
      if (b >= B) throw IoError(path.string() + ": too many columns in row " + std::to_string(a));
      sig.bins(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b++)) = std::stod(cell);
    }
    if (b != B) throw IoError(path.string() + ": row " + std::to_string(a) + " has " + std::to_string(b) + " columns");
  }
  sig.normalized = std::abs(sig.bins.sum() - 1.0) < 1e-9;
  return sig;
}

}  // namespace dme
