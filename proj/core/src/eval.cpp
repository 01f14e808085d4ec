#include "dme/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dme {
namespace {

struct Condition {
  std::string name;
  FeatureConfig features;
  Dataset train_set;
};

Dataset without(const Dataset& ds, const std::function<bool(const IqFrame&)>& drop) {
  Dataset out;
  for (const IqFrame& f : ds.frames)
    if (!drop(f)) out.frames.push_back(f);
  return out;
}

ConditionAudit audit(const Condition& c, const TrainResult& r) {
  ConditionAudit a;
  a.name = c.name;
  a.features = c.features;
  a.trained_cells = r.trained_cells;
  a.train_frames = c.train_set.frames.size();
  a.final_train_loss = r.history.empty() ? 0.0 : r.history.back().train.total;
  return a;
}

}  // namespace

std::string mismatch_name(const MismatchKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, LagChange>) {
          os << "lag-change K=" << k.lags_a << " vs K=" << k.lags_b;
        } else if constexpr (std::is_same_v<T, FeatureSetChange>) {
          os << "feature-set diff8+corr8 vs diff16";
        } else if constexpr (std::is_same_v<T, LeaveOneModulationOut>) {
          os << "leave-modulation-out " << modulation_name(k.held);
        } else {
          os << "leave-snr-out " << k.held_snr_db << " dB";
        }
        return os.str();
      },
      kind);
}

Matrix MismatchReport::grid(std::vector<double>* snrs_out,
                            std::vector<ModulationKind>* mods_out) const {
  std::set<double> snrs;
  std::set<ModulationKind> mods;
  for (const auto& c : cells) {
    snrs.insert(c.cell.snr_db);
    mods.insert(c.cell.kind);
  }
  std::vector<double> snr_list(snrs.begin(), snrs.end());
  std::vector<ModulationKind> mod_list(mods.begin(), mods.end());
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(snr_list.size()),
                          static_cast<Eigen::Index>(mod_list.size()));
  for (const auto& c : cells) {
    const auto r = std::lower_bound(snr_list.begin(), snr_list.end(), c.cell.snr_db) - snr_list.begin();
    const auto k = std::lower_bound(mod_list.begin(), mod_list.end(), c.cell.kind) - mod_list.begin();
    m(r, k) = c.distance;
  }
  if (snrs_out) *snrs_out = snr_list;
  if (mods_out) *mods_out = mod_list;
  return m;
}

std::vector<Signature> frame_signatures(const NetworkParams& params, const Dataset& dataset,
                                        const FeatureConfig& cfg, std::size_t bins, double range,
                                        std::size_t workers) {
  std::vector<Signature> out(dataset.frames.size());
  parallel_for(out.size(), workers, [&](std::size_t n) {
    out[n] = histogram2d(embed_frame(params, dataset.frames[n], cfg), bins, range);
  });
  return out;
}

MismatchReport run_mismatch(const MismatchKind& kind, const Dataset& dataset,
                            const PipelineConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  if (dataset.frames.empty()) throw std::invalid_argument("run_mismatch: empty dataset");
  auto [train_pool, eval_set] =
      split_holdout(dataset, cfg.eval_fraction, derive_seed(cfg.train.seed, {7}));

  Condition a{"A", cfg.features, train_pool};
  Condition b{"B", cfg.features, train_pool};
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LagChange>) {
          a.features.lag_count = k.lags_a;
          b.features.lag_count = k.lags_b;
          a.name = "K=" + std::to_string(k.lags_a);
          b.name = "K=" + std::to_string(k.lags_b);
        } else if constexpr (std::is_same_v<T, FeatureSetChange>) {
          a.features.lag_count = 8;
          a.features.include_correlations = true;
          b.features.lag_count = 16;
          b.features.include_correlations = false;
          a.name = "diff8+corr8";
          b.name = "diff16";
        } else if constexpr (std::is_same_v<T, LeaveOneModulationOut>) {
          const auto is_held = [&](const IqFrame& f) { return f.label == k.held; };
          if (std::none_of(dataset.frames.begin(), dataset.frames.end(), is_held))
            throw std::invalid_argument("run_mismatch: held modulation " +
                                        std::string(modulation_name(k.held)) +
                                        " is absent from the dataset");
          b.train_set = without(train_pool, is_held);
          a.name = "with " + std::string(modulation_name(k.held));
          b.name = "without " + std::string(modulation_name(k.held));
        } else {
          const auto is_held = [&](const IqFrame& f) { return f.snr_db == k.held_snr_db; };
          if (std::none_of(dataset.frames.begin(), dataset.frames.end(), is_held)) {
            std::ostringstream os;
            os << "run_mismatch: held SNR " << k.held_snr_db << " dB is absent from the dataset";
            throw std::invalid_argument(os.str());
          }
          b.train_set = without(train_pool, is_held);
          std::ostringstream os;
          os << k.held_snr_db << " dB";
          a.name = "with " + os.str();
          b.name = "without " + os.str();
        }
      },
      kind);
  if (b.train_set.frames.empty())
    throw std::invalid_argument("run_mismatch: condition B has no training frames");

  auto run = [&](const Condition& c) { return train(c.train_set, c.features, cfg.arch, cfg.train); };
  TrainResult ra, rb;
  if (cfg.concurrent_conditions) {
    auto fut = std::async(std::launch::async, run, std::cref(b));
    ra = run(a);
    rb = fut.get();
  } else {
    ra = run(a);
    rb = run(b);
  }

  MismatchReport report;
  report.experiment = mismatch_name(kind);
  report.condition_a = audit(a, ra);
  report.condition_b = audit(b, rb);
  report.eval_frames = eval_set.frames.size();

  // Audit: the held cell must never reach condition B's training set.
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        for (const CellKey& cell : report.condition_b.trained_cells) {
          if constexpr (std::is_same_v<T, LeaveOneModulationOut>) {
            if (cell.kind == k.held) throw std::logic_error("held modulation leaked into training");
          } else if constexpr (std::is_same_v<T, LeaveOneSnrOut>) {
            if (cell.snr_db == k.held_snr_db) throw std::logic_error("held SNR leaked into training");
          }
        }
      },
      kind);

  const std::size_t workers = cfg.train.workers;
  const std::vector<Signature> sig_a =
      frame_signatures(ra.params, eval_set, a.features, cfg.bins, cfg.range, workers);
  const std::vector<Signature> sig_b =
      frame_signatures(rb.params, eval_set, b.features, cfg.bins, cfg.range, workers);
  for (const auto& [cell, idx] : eval_set.cells()) {
    std::vector<Signature> ga, gb;
    for (std::size_t n : idx) {
      ga.push_back(sig_a[n]);
      gb.push_back(sig_b[n]);
    }
    report.cells.push_back({cell, signature_distance(mean_signature(ga), mean_signature(gb))});
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void write_report_csv(const std::filesystem::path& path, const MismatchReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "modulation,snr_db,distance\n";
  char buf[64];
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%.17g", c.distance);
    out << modulation_name(c.cell.kind) << ',' << c.cell.snr_db << ',' << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DiscriminationScore discrimination_score(const std::vector<LabeledSignature>& signatures) {
  std::map<ModulationKind, std::vector<Signature>> groups;
  for (const auto& s : signatures) groups[s.label].push_back(s.signature);
  if (groups.size() < 2)
    throw std::invalid_argument("discrimination_score: need at least 2 modulations");
  for (const auto& [label, members] : groups)
    if (members.size() < 2)
      throw std::invalid_argument("discrimination_score: modulation " +
                                  std::string(modulation_name(label)) +
                                  " has fewer than 2 signatures");

  DiscriminationScore out;
  std::vector<Signature> means;
  for (const auto& [label, members] : groups) {
    const std::size_t half = members.size() / 2;
    const std::vector<Signature> first(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<Signature> second(members.begin() + static_cast<std::ptrdiff_t>(half), members.end());
    out.intra += signature_distance(mean_signature(first), mean_signature(second));
    means.push_back(mean_signature(members));
  }
  out.intra /= static_cast<double>(groups.size());
  std::size_t pairs = 0;
  for (std::size_t x = 0; x < means.size(); ++x)
    for (std::size_t y = x + 1; y < means.size(); ++y) {
      out.inter += signature_distance(means[x], means[y]);
      ++pairs;
    }
  out.inter /= static_cast<double>(pairs);
  if (out.intra >= kIntraFloor) out.ratio = out.inter / std::max(out.intra, kIntraFloor);
  return out;
}

std::vector<double> permutation_control(const std::vector<LabeledSignature>& signatures,
                                        std::size_t shuffles, std::uint64_t seed) {
  std::vector<double> ratios;
  std::vector<ModulationKind> labels;
  for (const auto& s : signatures) labels.push_back(s.label);
  for (std::size_t k = 0; k < shuffles; ++k) {
    Rng rng(derive_seed(seed, {k}));
    std::vector<ModulationKind> perm = labels;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LabeledSignature> shuffled = signatures;
    for (std::size_t n = 0; n < shuffled.size(); ++n) shuffled[n].label = perm[n];
    const DiscriminationScore s = discrimination_score(shuffled);
    ratios.push_back(s.ratio.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return ratios;
}

}  // namespace dme
