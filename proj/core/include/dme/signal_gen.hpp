#pragma once

#include "dme/common.hpp"

#include <array>
#include <complex>
#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dme {

/// The eleven modulation families. Integer codes are stable and used on disk.
enum class ModulationKind : std::uint8_t {
  BPSK = 0,
  QPSK = 1,
  PSK8 = 2,
  QAM16 = 3,
  QAM64 = 4,
  PAM4 = 5,
  GFSK = 6,
  CPFSK = 7,
  WBFM = 8,
  AM_SSB = 9,
  AM_DSB = 10,
};

inline constexpr std::size_t kModulationCount = 11;

const std::array<ModulationKind, kModulationCount>& all_modulations();
std::string_view modulation_name(ModulationKind kind);
/// Accepts the canonical names ("QAM16", "AM_SSB") and hyphenated forms ("AM-SSB").
std::optional<ModulationKind> parse_modulation(std::string_view name);
std::optional<ModulationKind> modulation_from_code(int code);
inline int modulation_code(ModulationKind kind) { return static_cast<int>(kind); }
bool is_linear(ModulationKind kind);

/// One measurement of complex baseband: paired I and Q sequences.
struct IqFrame {
  std::vector<double> i;
  std::vector<double> q;
  std::optional<ModulationKind> label;
  std::optional<double> snr_db;

  std::size_t size() const { return i.size(); }
  /// Mean of i^2 + q^2.
  double mean_power() const;
  /// Throws std::invalid_argument unless lengths match, size >= 1 and all samples are finite.
  void validate() const;
};

struct CellKey {
  ModulationKind kind;
  double snr_db;
  auto operator<=>(const CellKey&) const = default;
};

std::string cell_label(const CellKey& cell);

struct DatasetSpec {
  std::vector<ModulationKind> modulations;
  std::vector<double> snrs_db;
  std::size_t frames_per_cell = 10;
  std::size_t frame_len = 125;
  std::uint64_t seed = 0;
};

/// Frames stored cell by cell, in DatasetSpec order: modulations outer, SNRs inner.
struct Dataset {
  std::vector<IqFrame> frames;

  /// Frame indices per cell, in storage order.
  std::map<CellKey, std::vector<std::size_t>> cells() const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Samples per symbol and pulse parameters shared by every digital modulation.
struct ShapingParams {
  static constexpr std::size_t samples_per_symbol = 8;
  static constexpr std::size_t span_symbols = 4;
  static constexpr double rolloff = 0.35;
  static constexpr double fsk_mod_index = 0.5;
  static constexpr double gfsk_bt = 0.35;
  static constexpr double message_cutoff = 0.15;  // fraction of the sample rate
};

inline constexpr std::size_t kMinFrameLen = 32;

/// Nominal unit-energy constellation of a linear modulation.
std::vector<std::complex<double>> constellation(ModulationKind kind);

/// Noiseless linear-modulation frame with the bookkeeping needed to check
/// symbol instants against the constellation.
struct ShapedFrame {
  IqFrame frame;
  double gain = 1.0;              // frame sample = gain * constellation point at a symbol instant
  std::size_t first_instant = 0;  // index of the first symbol instant inside the frame
};

/// Raised-cosine shaped symbols, normalized to unit mean power.
ShapedFrame shape_linear(ModulationKind kind, std::size_t len, Rng& rng);

/// Noiseless frame at unit mean power.
IqFrame generate_clean_frame(ModulationKind kind, std::size_t len, Rng& rng);

/// Clean frame followed by AWGN at snr_db. An infinite snr_db yields the noiseless frame.
/// The clean part consumes the stream first, so generate_clean_frame on an
/// identically seeded Rng reproduces the pre-noise signal.
IqFrame generate_frame(ModulationKind kind, double snr_db, std::size_t len, Rng& rng);

/// Adds white Gaussian noise so that 10 log10(P_frame / P_noise) = snr_db,
/// P_frame being the empirical mean power of the input.
IqFrame apply_awgn(const IqFrame& frame, double snr_db, Rng& rng);

/// Seed of frame `index` in cell (kind, snr_db). Independent of which other
/// cells a DatasetSpec lists.
std::uint64_t frame_seed(std::uint64_t dataset_seed, ModulationKind kind, double snr_db,
                         std::size_t index);

Dataset generate_dataset(const DatasetSpec& spec);

/// 10 log10(P_clean / P_noise) with noise = noisy - clean; +infinity when identical.
double measure_snr(const IqFrame& clean, const IqFrame& noisy);

}  // namespace dme
