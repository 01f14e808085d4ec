#pragma once

#include "dme/features.hpp"
#include "dme/signal_gen.hpp"
#include "dme/vae.hpp"

#include <array>
#include <filesystem>
#include <string>

namespace dme {

/// The scalar latent trajectory of one frame.
struct EmbeddingSeries {
  std::vector<double> z;
  std::size_t t_offset = 0;
};

/// Normalized 2D histogram over (z_t, z_{t+1} - z_t).
/// bins(a, b): a indexes z_t, b indexes the first difference; both axes span
/// [-range, range] with bins_per_axis uniform bins.
struct Signature {
  Matrix bins;
  std::size_t bins_per_axis = 64;
  double range = 3.0;
  bool normalized = false;

  double mass() const { return bins.sum(); }
};

inline constexpr std::size_t kDefaultBins = 64;
inline constexpr double kDefaultRange = 3.0;

/// Latent trajectory: mu of the encoder in Infer mode for every valid timestep,
/// computed row by row.
EmbeddingSeries embed_frame(const NetworkParams& params, const IqFrame& frame,
                            const FeatureConfig& cfg);

/// Bin of value v on an axis of `bins` bins over [-range, range]. Computed as
/// bins/2 + floor(v * bins / (2 range)) and clipped to the edge bins, so for
/// even `bins` a value that is not on a bin edge satisfies
/// bin(-v) == bins - 1 - bin(v). Values on an interior edge go to the upper bin.
std::size_t axis_bin(double v, std::size_t bins, double range);

Signature histogram2d(const EmbeddingSeries& emb, std::size_t bins = kDefaultBins,
                      double range = kDefaultRange);

/// Reverses both axes: bin (a, b) -> (B-1-a, B-1-b). The signature of -z.
Signature flip(const Signature& sig);

/// Half the L1 distance between normalized histograms.
double total_variation(const Signature& a, const Signature& b);

/// min(TV(a, b), TV(a, flip(b))), clamped to [0, 1].
double signature_distance(const Signature& a, const Signature& b);

/// Element-wise mean of member signatures.
Signature mean_signature(const std::vector<Signature>& members);

struct SignatureGroup {
  std::string label;
  std::vector<Signature> members;
};

/// Distances between group mean signatures; symmetric with a zero diagonal.
Matrix distance_matrix(const std::vector<SignatureGroup>& groups);

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;  // 3 = RGB, 1 = gray
  std::vector<std::uint8_t> pixels;

  std::array<std::uint8_t, 3> rgb(std::size_t x, std::size_t y) const;
};

/// 256-entry colormap: index k maps x = k / 255 to
///   r = clamp(1.5 - |4x - 3|), g = clamp(1.5 - |4x - 2|), b = clamp(1.5 - |4x - 1|)
/// scaled to bytes with rounding (blue at k = 0, dark red at k = 255).
std::array<std::uint8_t, 3> colormap(std::size_t index);
/// round((clip(z, -range, range) + range) / (2 range) * 255).
std::size_t colormap_index(double z, double range);

/// Scatter of (i_t, q_t) over the embedded timesteps on a white canvas. Both
/// axes span [-A, A] where A is the largest |i| or |q| plotted (1 if all zero);
/// i grows rightward and q upward. Points are drawn in ascending |z| so the
/// most extreme latent values end up on top.
Image colorize_trajectory(const IqFrame& frame, const EmbeddingSeries& emb,
                          double range = kDefaultRange, std::size_t width = 256,
                          std::size_t height = 256);

/// Pixel column of i / row of q under the colorize_trajectory mapping.
std::size_t trajectory_pixel(double value, double extent, std::size_t size, bool flip_axis);

/// Gray image of a signature: pixel = floor(255 * bin / max_bin). Rows run over
/// the difference axis from +range (top) to -range, columns over z from -range.
Image signature_image(const Signature& sig);

/// Gray heat map of values in [0, 1], one pixel per matrix entry, scaled by `cell` pixels.
Image heatmap_image(const Matrix& values, std::size_t cell = 8);

void write_ppm(const std::filesystem::path& path, const Image& img);  // P6
void write_pgm(const std::filesystem::path& path, const Image& img);  // P5

/// "# B=<B> R=<R>" then B lines of B comma-separated values (%.17g), row a = z bin.
void write_signature_csv(const std::filesystem::path& path, const Signature& sig);
Signature read_signature_csv(const std::filesystem::path& path);

}  // namespace dme
