#pragma once

#include "dme/features.hpp"
#include "dme/signal_gen.hpp"
#include "dme/signature.hpp"
#include "dme/training.hpp"

#include <optional>
#include <string>
#include <variant>

namespace dme {

/// Lag count a vs b, other feature settings from the base config.
/// LagChange{8, 8} is the null experiment.
struct LagChange {
  std::size_t lags_a = 8;
  std::size_t lags_b = 16;
};
/// Lag differences plus correlations at K=8 vs lag differences alone at K=16.
struct FeatureSetChange {};
/// Condition B trains without the held modulation; evaluation still covers it.
struct LeaveOneModulationOut {
  ModulationKind held = ModulationKind::WBFM;
};
/// Condition B trains without the held SNR; evaluation still covers it.
struct LeaveOneSnrOut {
  double held_snr_db = 6.0;
};

using MismatchKind = std::variant<LagChange, FeatureSetChange, LeaveOneModulationOut, LeaveOneSnrOut>;

std::string mismatch_name(const MismatchKind& kind);

struct PipelineConfig {
  FeatureConfig features;
  ArchOverrides arch;
  TrainConfig train;
  double eval_fraction = 0.2;  // stratified evaluation split
  std::size_t bins = kDefaultBins;
  double range = kDefaultRange;
  /// Train both conditions on separate threads. Results are identical either way.
  bool concurrent_conditions = false;
};

struct ConditionAudit {
  std::string name;
  FeatureConfig features;
  std::vector<CellKey> trained_cells;
  std::size_t train_frames = 0;
  double final_train_loss = 0.0;
};

struct CellDistance {
  CellKey cell;
  double distance = 0.0;
};

struct MismatchReport {
  std::string experiment;
  std::vector<CellDistance> cells;  // one per evaluated cell, in cell order
  ConditionAudit condition_a;
  ConditionAudit condition_b;
  std::size_t eval_frames = 0;
  double wall_seconds = 0.0;

  /// Heat-map matrix: rows = SNRs ascending, columns = modulations in code order
  /// (only those present). Missing cells are 0.
  Matrix grid(std::vector<double>* snrs = nullptr, std::vector<ModulationKind>* mods = nullptr) const;
};

/// Trains condition A and B from the same seed, embeds the shared evaluation
/// split under both and reports per-cell distances between group signatures.
MismatchReport run_mismatch(const MismatchKind& kind, const Dataset& dataset,
                            const PipelineConfig& cfg);

/// "modulation,snr_db,distance" lines.
void write_report_csv(const std::filesystem::path& path, const MismatchReport& report);

struct LabeledSignature {
  ModulationKind label;
  Signature signature;
};

struct DiscriminationScore {
  double inter = 0.0;
  double intra = 0.0;
  /// inter / max(intra, 1e-9); nullopt ("undefined") when intra < 1e-9.
  std::optional<double> ratio;
};

inline constexpr double kIntraFloor = 1e-9;

/// intra: per label, distance between the mean signatures of the first and
/// second halves of its members, averaged over labels. inter: distance between
/// label mean signatures, averaged over label pairs.
DiscriminationScore discrimination_score(const std::vector<LabeledSignature>& signatures);

/// Ratios after `shuffles` random label permutations (group sizes preserved).
std::vector<double> permutation_control(const std::vector<LabeledSignature>& signatures,
                                        std::size_t shuffles, std::uint64_t seed);

/// Embeds each frame and builds its signature; workers only affect speed.
std::vector<Signature> frame_signatures(const NetworkParams& params, const Dataset& dataset,
                                        const FeatureConfig& cfg, std::size_t bins, double range,
                                        std::size_t workers = 1);

}  // namespace dme
