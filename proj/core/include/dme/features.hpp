#pragma once

#include "dme/common.hpp"
#include "dme/signal_gen.hpp"

namespace dme {

/// Feature extraction parameters. Changing any field changes the column
/// layout, so checkpoints record the full config.
struct FeatureConfig {
  std::size_t lag_count = 8;          // K
  bool include_correlations = true;
  std::size_t corr_window = 16;       // W
  std::size_t target_lag_count = 8;   // L_tgt

  /// N = 2 + 2K (+ 2K with correlations).
  std::size_t feature_dim() const {
    return 2 + 2 * lag_count + (include_correlations ? 2 * lag_count : 0);
  }
  std::size_t target_dim() const { return 2 * target_lag_count; }
  /// First timestep with a full lag/correlation history: W - 1 + K.
  std::size_t first_valid() const { return corr_window - 1 + lag_count; }
  std::size_t min_frame_len() const { return first_valid() + target_lag_count + 1; }
  /// T_valid = T - (W - 1 + K) - L_tgt, or 0 when the frame is too short.
  std::size_t valid_rows(std::size_t frame_len) const {
    return frame_len >= min_frame_len() ? frame_len - first_valid() - target_lag_count : 0;
  }
  void validate() const;

  bool operator==(const FeatureConfig&) const = default;
};

/// Per-timestep values with the index of the first row's timestep in the source frame.
struct TimeMatrix {
  Matrix values;
  std::size_t t_offset = 0;
};

/// Encoder inputs. Row layout (version 1):
///   [i_t, q_t | i_t - i_{t-1} .. i_t - i_{t-K} | q_t - q_{t-1} .. q_t - q_{t-K}
///    | r_i(1..K) | r_q(1..K)]
/// The correlation block is present only when include_correlations is set.
struct FeatureSeries {
  Matrix rows;
  std::size_t t_offset = 0;
  FeatureConfig config;
};

/// Decoder targets aligned row-for-row with a FeatureSeries:
///   [i_{t+1} .. i_{t+L}, q_{t+1} .. q_{t+L}]
struct TargetSeries {
  Matrix rows;
  std::size_t t_offset = 0;
};

struct FeatureSet {
  FeatureSeries features;
  TargetSeries targets;
};

inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr double kCorrelationEnergyFloor = 1e-12;

/// Rows for t = K .. T-1, columns [i diffs 1..K | q diffs 1..K].
TimeMatrix lag_differences(const IqFrame& frame, std::size_t lag_count);

/// Trailing-window normalized lagged products, one column per (channel, lag).
/// Rows for t = W-1+K .. T-1, columns [r_i(1..K) | r_q(1..K)].
TimeMatrix windowed_autocorrelation(const IqFrame& frame, std::size_t lag_count,
                                    std::size_t window);

FeatureSet assemble_features(const IqFrame& frame, const FeatureConfig& cfg);

}  // namespace dme
