#include "dme/features.hpp"

#include <algorithm>
#include <cmath>

namespace dme {

void FeatureConfig::validate() const {
  if (lag_count < 1) throw std::invalid_argument("FeatureConfig: lag_count must be >= 1");
  if (corr_window < 2) throw std::invalid_argument("FeatureConfig: corr_window must be >= 2");
  if (target_lag_count < 1)
    throw std::invalid_argument("FeatureConfig: target_lag_count must be >= 1");
}

TimeMatrix lag_differences(const IqFrame& frame, std::size_t lag_count) {
  frame.validate();
  const std::size_t T = frame.size();
  if (lag_count < 1) throw std::invalid_argument("lag_differences: lag count must be >= 1");
  if (lag_count >= T)
    throw std::invalid_argument("lag_differences: lag count " + std::to_string(lag_count) +
                                " must be below frame length " + std::to_string(T));
  TimeMatrix out;
  out.t_offset = lag_count;
  out.values.resize(static_cast<Eigen::Index>(T - lag_count),
                    static_cast<Eigen::Index>(2 * lag_count));
  for (std::size_t t = lag_count; t < T; ++t) {
    const auto r = static_cast<Eigen::Index>(t - lag_count);
    for (std::size_t l = 1; l <= lag_count; ++l) {
      out.values(r, static_cast<Eigen::Index>(l - 1)) = frame.i[t] - frame.i[t - l];
      out.values(r, static_cast<Eigen::Index>(lag_count + l - 1)) = frame.q[t] - frame.q[t - l];
    }
  }
  return out;
}

TimeMatrix windowed_autocorrelation(const IqFrame& frame, std::size_t lag_count,
                                    std::size_t window) {
  frame.validate();
  const std::size_t T = frame.size();
  if (lag_count < 1) throw std::invalid_argument("windowed_autocorrelation: lag count must be >= 1");
  if (window < 2) throw std::invalid_argument("windowed_autocorrelation: window must be >= 2");
  if (T < window + lag_count)
    throw std::invalid_argument("windowed_autocorrelation: frame length " + std::to_string(T) +
                                " below window + lag count = " +
                                std::to_string(window + lag_count));
  const std::size_t first = window - 1 + lag_count;
  TimeMatrix out;
  out.t_offset = first;
  out.values.resize(static_cast<Eigen::Index>(T - first), static_cast<Eigen::Index>(2 * lag_count));

  const std::vector<double>* channels[2] = {&frame.i, &frame.q};
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const std::vector<double>& c = *channels[ch];
    for (std::size_t t = first; t < T; ++t) {
      for (std::size_t l = 1; l <= lag_count; ++l) {
        double cross = 0.0, e_now = 0.0, e_lag = 0.0;
        for (std::size_t s = t + 1 - window; s <= t; ++s) {
          cross += c[s] * c[s - l];
          e_now += c[s] * c[s];
          e_lag += c[s - l] * c[s - l];
        }
        double r = 0.0;
        if (e_now >= kCorrelationEnergyFloor && e_lag >= kCorrelationEnergyFloor)
          r = std::clamp(cross / std::sqrt(e_now * e_lag), -1.0, 1.0);
        out.values(static_cast<Eigen::Index>(t - first),
                   static_cast<Eigen::Index>(ch * lag_count + l - 1)) = r;
      }
    }
  }
  return out;
}

FeatureSet assemble_features(const IqFrame& frame, const FeatureConfig& cfg) {
  cfg.validate();
  frame.validate();
  const std::size_t T = frame.size();
  if (T < cfg.min_frame_len())
    throw std::invalid_argument("assemble_features: frame length " + std::to_string(T) +
                                " below minimum " + std::to_string(cfg.min_frame_len()) +
                                " for this feature config");
  const std::size_t K = cfg.lag_count;
  const std::size_t first = cfg.first_valid();
  const std::size_t rows = cfg.valid_rows(T);
  const auto n_rows = static_cast<Eigen::Index>(rows);

  const TimeMatrix diffs = lag_differences(frame, K);
  FeatureSet out;
  out.features.config = cfg;
  out.features.t_offset = first;
  out.features.rows.resize(n_rows, static_cast<Eigen::Index>(cfg.feature_dim()));
  out.targets.t_offset = first;
  out.targets.rows.resize(n_rows, static_cast<Eigen::Index>(cfg.target_dim()));

  const auto lag_cols = static_cast<Eigen::Index>(2 * K);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = first + r;
    const auto row = static_cast<Eigen::Index>(r);
    out.features.rows(row, 0) = frame.i[t];
    out.features.rows(row, 1) = frame.q[t];
    out.features.rows.block(row, 2, 1, lag_cols) =
        diffs.values.row(static_cast<Eigen::Index>(t - diffs.t_offset));
  }
  if (cfg.include_correlations) {
    const TimeMatrix corr = windowed_autocorrelation(frame, K, cfg.corr_window);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t t = first + r;
      out.features.rows.block(static_cast<Eigen::Index>(r), 2 + lag_cols, 1, lag_cols) =
          corr.values.row(static_cast<Eigen::Index>(t - corr.t_offset));
    }
  }
  const std::size_t L = cfg.target_lag_count;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = first + r;
    for (std::size_t l = 1; l <= L; ++l) {
      out.targets.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l - 1)) =
          frame.i[t + l];
      out.targets.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(L + l - 1)) =
          frame.q[t + l];
    }
  }
  return out;
}

}  // namespace dme
