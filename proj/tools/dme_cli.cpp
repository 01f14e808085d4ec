// dme: command-line front end. Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include "dme/eval.hpp"
#include "dme/io.hpp"
#include "dme/signature.hpp"
#include "dme/stream.hpp"
#include "dme/training.hpp"

#include <csignal>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dme;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  bool quiet = false;
};

struct FeatureFlags {
  std::size_t lags = 8;
  std::string corr = "on";
  std::size_t target_lags = 8;
  std::size_t corr_window = 16;

  FeatureConfig config() const {
    FeatureConfig c;
    c.lag_count = lags;
    c.include_correlations = corr == "on";
    c.target_lag_count = target_lags;
    c.corr_window = corr_window;
    return c;
  }
};

struct TrainFlags {
  std::size_t hidden = 256;
  std::size_t depth = 3;
  double dropout = 0.2;
  double lr = 1e-3;
  double beta_kl = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch = 128;
  double lr_decay = 1.0;
  std::size_t workers = 1;

  ArchOverrides arch() const { return {hidden, depth, dropout}; }
  TrainConfig train(std::uint64_t seed) const {
    TrainConfig t;
    t.learning_rate = lr;
    t.beta_kl = beta_kl;
    t.epochs = epochs;
    t.batch_rows = batch;
    t.lr_decay = lr_decay;
    t.workers = workers;
    t.seed = seed;
    return t;
  }
};

// Optional feature flags on commands that read a checkpoint: when given, they
// state the config the caller expects and must match the checkpoint.
struct ExpectFlags {
  std::optional<std::size_t> lags;
  std::optional<std::string> corr;

  void check(const Checkpoint& ckpt) const {
    if (!lags && !corr) return;
    FeatureConfig want = ckpt.features;
    if (lags) want.lag_count = *lags;
    if (corr) want.include_correlations = *corr == "on";
    require_feature_match(ckpt, want);
  }
};

struct SigFlags {
  std::size_t bins = kDefaultBins;
  double range = kDefaultRange;
  std::size_t workers = 1;
};

const auto kOnOff = CLI::IsMember({"on", "off"});

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell_stem(const CellKey& cell) {
  std::string name = cell_file_name(cell);
  return name.substr(0, name.size() - 5);  // drop ".cf32"
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<ModulationKind> parse_mods(const std::string& text) {
  if (text == "all") return {all_modulations().begin(), all_modulations().end()};
  std::vector<ModulationKind> mods;
  for (const auto& name : split_csv(text)) {
    const auto k = parse_modulation(name);
    if (!k) throw UsageError("unknown modulation '" + name + "'");
    mods.push_back(*k);
  }
  if (mods.empty()) throw UsageError("--mods is empty");
  return mods;
}

std::vector<double> parse_snrs(const std::string& text) {
  std::vector<double> snrs;
  for (const auto& item : split_csv(text)) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) throw UsageError("bad SNR value '" + item + "'");
    snrs.push_back(v);
  }
  if (snrs.empty()) throw UsageError("--snrs is empty");
  return snrs;
}

void add_feature_flags(CLI::App* cmd, FeatureFlags& f) {
  cmd->add_option("--lags", f.lags, "Lag count K")->capture_default_str()->check(CLI::Range(1, 4096));
  cmd->add_option("--corr", f.corr, "Windowed correlation features")->capture_default_str()->check(kOnOff);
  cmd->add_option("--target-lags", f.target_lags, "Decoder target lags")
      ->capture_default_str()
      ->check(CLI::Range(1, 4096));
  cmd->add_option("--corr-window", f.corr_window, "Correlation window W")
      ->capture_default_str()
      ->check(CLI::Range(2, 4096));
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--hidden", t.hidden, "Hidden width")->capture_default_str()->check(CLI::Range(1, 1 << 16));
  cmd->add_option("--depth", t.depth, "Hidden layers per side")->capture_default_str()->check(CLI::Range(1, 64));
  cmd->add_option("--dropout", t.dropout, "Dropout rate")->capture_default_str()->check(CLI::Range(0.0, 0.999));
  cmd->add_option("--lr", t.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--beta-kl", t.beta_kl, "KL weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", t.epochs, "Epochs")->capture_default_str()->check(CLI::Range(1, 1000000));
  cmd->add_option("--batch", t.batch, "Rows per minibatch")->capture_default_str()->check(CLI::Range(1, 1 << 24));
  cmd->add_option("--lr-decay", t.lr_decay, "Per-epoch learning-rate factor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--workers", t.workers, "Feature-extraction threads")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
}

void add_expect_flags(CLI::App* cmd, ExpectFlags& e) {
  cmd->add_option("--lags", e.lags, "Expected lag count (must match the checkpoint)")
      ->check(CLI::Range(1, 4096));
  cmd->add_option("--corr", e.corr, "Expected correlation setting (must match the checkpoint)")
      ->check(kOnOff);
}

void add_sig_flags(CLI::App* cmd, SigFlags& s) {
  cmd->add_option("--bins", s.bins, "Histogram bins per axis")->capture_default_str()->check(CLI::Range(2, 4096));
  cmd->add_option("--range", s.range, "Histogram range R")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--workers", s.workers, "Embedding threads")->capture_default_str()->check(CLI::Range(1, 256));
}

// ---------------------------------------------------------------------------

void cmd_gen(const Globals& g, const std::string& mods, const std::string& snrs,
             std::size_t frames, std::size_t len) {
  DatasetSpec spec;
  spec.modulations = parse_mods(mods);
  spec.snrs_db = parse_snrs(snrs);
  spec.frames_per_cell = frames;
  spec.frame_len = len;
  spec.seed = g.seed;
  const Dataset ds = generate_dataset(spec);
  const DatasetManifest m = save_dataset(g.out, ds);
  if (!g.quiet)
    for (const auto& e : m.entries)
      std::cout << e.path << ": " << e.frame_count << " frames x " << e.frame_len << '\n';
  std::cout << "frames=" << ds.frames.size() << " cells=" << m.entries.size() << " dir=" << g.out
            << '\n';
}

void cmd_train(const Globals& g, const std::string& data, const FeatureFlags& ff,
               const TrainFlags& tf, double holdout_fraction, const std::string& model) {
  const Dataset ds = load_dataset(data);
  const FeatureConfig cfg = ff.config();
  std::cout << "N=" << cfg.feature_dim() << " K=" << cfg.lag_count
            << " corr=" << (cfg.include_correlations ? "on" : "off")
            << " targets=" << cfg.target_dim() << '\n';

  Dataset train_set = ds, holdout;
  if (holdout_fraction > 0.0) {
    auto parts = split_holdout(ds, holdout_fraction, derive_seed(g.seed, {5}));
    train_set = std::move(parts.first);
    holdout = std::move(parts.second);
  }
  const TrainConfig tc = tf.train(g.seed);
  const TrainResult r = train(train_set, cfg, tf.arch(), tc, holdout_fraction > 0.0 ? &holdout : nullptr,
                              [&](const EpochRecord& e) {
                                if (g.quiet) return;
                                std::cout << "epoch=" << e.epoch << " train=" << short_num(e.train.total)
                                          << " holdout="
                                          << (e.holdout ? short_num(e.holdout->total) : "nan") << '\n'
                                          << std::flush;
                              });
  const fs::path path = model.empty() ? fs::path(g.out) / "model.ckpt" : fs::path(model);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_checkpoint(path, Checkpoint{r.params, cfg, tc});
  std::cout << "rows=" << r.train_rows << " final_train=" << short_num(r.history.back().train.total)
            << " checkpoint=" << path.string() << '\n';
}

void cmd_embed(const Globals& g, const std::string& data, const std::string& ckpt_path,
               const ExpectFlags& expect, std::size_t workers) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  expect.check(ckpt);
  const Dataset ds = load_dataset(data);
  std::vector<EmbeddingSeries> emb(ds.frames.size());
  parallel_for(emb.size(), workers,
               [&](std::size_t n) { emb[n] = embed_frame(ckpt.params, ds.frames[n], ckpt.features); });
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / "embeddings.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "frame,modulation,snr_db,t,z\n";
  for (std::size_t n = 0; n < emb.size(); ++n)
    for (std::size_t k = 0; k < emb[n].z.size(); ++k)
      out << n << ',' << modulation_name(*ds.frames[n].label) << ',' << *ds.frames[n].snr_db << ','
          << emb[n].t_offset + k << ',' << num(emb[n].z[k]) << '\n';
  std::cout << "frames=" << emb.size() << " embeddings=" << path.string() << '\n';
}

// Group signature per cell, plus the embeddings of each cell's first frame.
struct CellSignatures {
  std::vector<CellKey> cells;
  std::vector<std::vector<Signature>> members;
};

CellSignatures signatures_by_cell(const Checkpoint& ckpt, const Dataset& ds, const SigFlags& sf) {
  const std::vector<Signature> sigs =
      frame_signatures(ckpt.params, ds, ckpt.features, sf.bins, sf.range, sf.workers);
  CellSignatures out;
  for (const auto& [cell, idx] : ds.cells()) {
    out.cells.push_back(cell);
    out.members.emplace_back();
    for (std::size_t n : idx) out.members.back().push_back(sigs[n]);
  }
  return out;
}

void cmd_sign(const Globals& g, const std::string& data, const std::string& ckpt_path,
              const ExpectFlags& expect, const SigFlags& sf) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  expect.check(ckpt);
  const Dataset ds = load_dataset(data);
  const CellSignatures cs = signatures_by_cell(ckpt, ds, sf);
  const fs::path dir = fs::path(g.out) / "signatures";
  fs::create_directories(dir);
  const auto cells = ds.cells();
  for (std::size_t c = 0; c < cs.cells.size(); ++c) {
    const std::string stem = cell_stem(cs.cells[c]);
    const Signature mean = mean_signature(cs.members[c]);
    write_signature_csv(dir / (stem + ".csv"), mean);
    write_pgm(dir / (stem + ".pgm"), signature_image(mean));
    const IqFrame& first = ds.frames[cells.at(cs.cells[c]).front()];
    write_ppm(dir / (stem + "_trajectory.ppm"),
              colorize_trajectory(first, embed_frame(ckpt.params, first, ckpt.features), sf.range));
    if (!g.quiet) std::cout << stem << ": " << cs.members[c].size() << " frames\n";
  }
  std::cout << "cells=" << cs.cells.size() << " dir=" << dir.string() << '\n';
}

void cmd_dist(const Globals& g, const std::string& data, const std::string& ckpt_path,
              const ExpectFlags& expect, const SigFlags& sf) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  expect.check(ckpt);
  const Dataset ds = load_dataset(data);
  const CellSignatures cs = signatures_by_cell(ckpt, ds, sf);
  std::vector<SignatureGroup> groups;
  for (std::size_t c = 0; c < cs.cells.size(); ++c)
    groups.push_back({cell_stem(cs.cells[c]), cs.members[c]});
  const Matrix d = distance_matrix(groups);

  fs::create_directories(g.out);
  const fs::path csv = fs::path(g.out) / "distance.csv";
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << "cell";
  for (const auto& grp : groups) out << ',' << grp.label;
  out << '\n';
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    out << groups[static_cast<std::size_t>(r)].label;
    for (Eigen::Index c = 0; c < d.cols(); ++c) out << ',' << num(d(r, c));
    out << '\n';
  }
  out.close();
  write_pgm(fs::path(g.out) / "distance.pgm", heatmap_image(d));
  std::cout << "groups=" << groups.size() << " matrix=" << csv.string() << '\n';
}

MismatchKind parse_kind(const std::string& kind, const std::string& held, std::size_t lags_a,
                        std::size_t lags_b) {
  if (kind == "lag") return LagChange{lags_a, lags_b};
  if (kind == "features") return FeatureSetChange{};
  if (kind == "leave-mod") {
    if (held.empty()) return LeaveOneModulationOut{};
    const auto k = parse_modulation(held);
    if (!k) throw UsageError("--held: unknown modulation '" + held + "'");
    return LeaveOneModulationOut{*k};
  }
  if (held.empty()) return LeaveOneSnrOut{};
  return LeaveOneSnrOut{parse_snrs(held).at(0)};
}

void write_audit(const fs::path& path, const MismatchReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "experiment: " << r.experiment << '\n' << "eval_frames: " << r.eval_frames << '\n';
  for (const ConditionAudit* a : {&r.condition_a, &r.condition_b}) {
    out << "condition " << a->name << ": N=" << a->features.feature_dim()
        << " K=" << a->features.lag_count
        << " corr=" << (a->features.include_correlations ? "on" : "off")
        << " train_frames=" << a->train_frames << " final_train=" << num(a->final_train_loss)
        << "\n  trained_cells:";
    for (const CellKey& c : a->trained_cells) out << ' ' << cell_label(c);
    out << '\n';
  }
}

void cmd_eval(const Globals& g, const std::string& data, const MismatchKind& kind,
              const FeatureFlags& ff, const TrainFlags& tf, const SigFlags& sf, double eval_fraction,
              bool concurrent) {
  const Dataset ds = load_dataset(data);
  PipelineConfig cfg;
  cfg.features = ff.config();
  cfg.arch = tf.arch();
  cfg.train = tf.train(g.seed);
  cfg.train.workers = std::max(tf.workers, sf.workers);
  cfg.eval_fraction = eval_fraction;
  cfg.bins = sf.bins;
  cfg.range = sf.range;
  cfg.concurrent_conditions = concurrent;
  const MismatchReport r = run_mismatch(kind, ds, cfg);

  fs::create_directories(g.out);
  write_report_csv(fs::path(g.out) / "report.csv", r);
  write_pgm(fs::path(g.out) / "report.pgm", heatmap_image(r.grid()));
  write_audit(fs::path(g.out) / "audit.txt", r);
  if (!g.quiet)
    for (const auto& c : r.cells) std::cout << cell_label(c.cell) << " distance=" << short_num(c.distance) << '\n';
  std::cout << "experiment=\"" << r.experiment << "\" cells=" << r.cells.size()
            << " wall_seconds=" << short_num(r.wall_seconds) << '\n';
}

volatile std::sig_atomic_t g_interrupted = 0;
extern "C" void on_sigint(int) { g_interrupted = 1; }

void cmd_stream(const Globals& g, const std::string& endpoint, const std::string& ckpt_path,
                const ExpectFlags& expect, std::size_t len, std::size_t every, std::size_t window,
                std::size_t max_frames, std::size_t capacity, double idle_seconds, const SigFlags& sf) {
  Endpoint ep;
  try {
    ep = Endpoint::parse(endpoint);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  expect.check(ckpt);
  if (len < ckpt.features.min_frame_len())
    throw UsageError("--len " + std::to_string(len) + " is below the checkpoint's minimum frame length " +
                     std::to_string(ckpt.features.min_frame_len()));
  if (window == 0) window = every;

  StreamOptions opt;
  opt.frame_len = len;
  opt.queue_capacity = capacity;
  FrameStream stream(ep, opt);
  std::signal(SIGINT, on_sigint);
  fs::create_directories(g.out);

  std::deque<Signature> recent;
  std::size_t frames = 0, snapshots = 0;
  auto last_frame = std::chrono::steady_clock::now();
  while (!g_interrupted && (max_frames == 0 || frames < max_frames)) {
    auto f = stream.next(std::chrono::milliseconds(100));
    if (!f) {
      const double idle = std::chrono::duration<double>(std::chrono::steady_clock::now() - last_frame).count();
      if (idle_seconds > 0.0 && idle >= idle_seconds) break;
      continue;
    }
    last_frame = std::chrono::steady_clock::now();
    ++frames;
    recent.push_back(histogram2d(embed_frame(ckpt.params, *f, ckpt.features), sf.bins, sf.range));
    if (recent.size() > window) recent.pop_front();
    if (frames % every == 0) {
      ++snapshots;
      char stem[32];
      std::snprintf(stem, sizeof stem, "stream_%06zu", snapshots);
      const Signature mean = mean_signature({recent.begin(), recent.end()});
      write_signature_csv(fs::path(g.out) / (std::string(stem) + ".csv"), mean);
      write_pgm(fs::path(g.out) / (std::string(stem) + ".pgm"), signature_image(mean));
      if (!g.quiet)
        std::cout << "snapshot=" << snapshots << " frames=" << frames << " dropped=" << stream.dropped()
                  << '\n'
                  << std::flush;
    }
  }
  stream.stop();
  std::cout << "frames=" << frames << " snapshots=" << snapshots << " dropped=" << stream.dropped()
            << " connections=" << stream.connections() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised modulation embedding: synthetic data, VAE training, signatures, "
               "mismatch experiments and live stream monitoring."};
  app.name("dme");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Only print summary lines");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (manifest + cf32)");
  std::string mods = "all", snrs = "0,6,10";
  std::size_t frames = 20, len = 125;
  gen->add_option("--mods", mods, "Comma-separated modulations or 'all'")->capture_default_str();
  gen->add_option("--snrs", snrs, "Comma-separated SNRs in dB")->capture_default_str();
  gen->add_option("--frames", frames, "Frames per cell")->capture_default_str()->check(CLI::Range(1, 100000000));
  gen->add_option("--len", len, "Samples per frame (>= 32)")
      ->capture_default_str()
      ->check(CLI::Range(kMinFrameLen, std::size_t{1} << 24));

  // train
  auto* tr = app.add_subcommand("train", "Train the VAE and write a checkpoint");
  std::string data, model;
  FeatureFlags ff;
  TrainFlags tf;
  double holdout = 0.2;
  tr->add_option("--data", data, "Dataset directory")->required();
  add_feature_flags(tr, ff);
  add_train_flags(tr, tf);
  tr->add_option("--holdout", holdout, "Stratified holdout fraction (0 disables)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.95));
  tr->add_option("--model", model, "Checkpoint path (default <out>/model.ckpt)");

  // embed / sign / dist
  std::string ckpt;
  ExpectFlags expect;
  SigFlags sf;
  auto* emb = app.add_subcommand("embed", "Write per-timestep latent values of every frame");
  emb->add_option("--data", data, "Dataset directory")->required();
  emb->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  add_expect_flags(emb, expect);
  emb->add_option("--workers", sf.workers, "Embedding threads")->capture_default_str()->check(CLI::Range(1, 256));

  auto* sign = app.add_subcommand("sign", "Write per-cell signatures (CSV, PGM) and trajectory images (PPM)");
  sign->add_option("--data", data, "Dataset directory")->required();
  sign->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  add_expect_flags(sign, expect);
  add_sig_flags(sign, sf);

  auto* dist = app.add_subcommand("dist", "Write the cell-by-cell signature distance matrix and heat map");
  dist->add_option("--data", data, "Dataset directory")->required();
  dist->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  add_expect_flags(dist, expect);
  add_sig_flags(dist, sf);

  // eval
  auto* ev = app.add_subcommand("eval", "Run a mismatch experiment end to end");
  std::string kind = "lag", held;
  std::size_t lags_a = 8, lags_b = 16;
  double eval_fraction = 0.2;
  bool concurrent = false;
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--kind", kind, "Experiment")
      ->capture_default_str()
      ->check(CLI::IsMember({"lag", "features", "leave-mod", "leave-snr"}));
  ev->add_option("--held", held, "Held modulation (leave-mod, default WBFM) or SNR in dB (leave-snr, default 6)");
  ev->add_option("--lags-a", lags_a, "Condition A lag count (lag)")->capture_default_str()->check(CLI::Range(1, 4096));
  ev->add_option("--lags-b", lags_b, "Condition B lag count (lag)")->capture_default_str()->check(CLI::Range(1, 4096));
  ev->add_option("--eval-fraction", eval_fraction, "Evaluation split per cell")
      ->capture_default_str()
      ->check(CLI::Range(0.01, 0.95));
  ev->add_flag("--concurrent", concurrent, "Train both conditions on separate threads");
  add_feature_flags(ev, ff);
  add_train_flags(ev, tf);
  ev->add_option("--bins", sf.bins, "Histogram bins per axis")->capture_default_str()->check(CLI::Range(2, 4096));
  ev->add_option("--range", sf.range, "Histogram range R")->capture_default_str()->check(CLI::PositiveNumber);

  // stream
  auto* st = app.add_subcommand("stream", "Embed a live cf32 TCP stream and write rolling signatures");
  std::string endpoint;
  std::size_t every = 10, window = 0, max_frames = 0, capacity = 16;
  std::size_t stream_len = 125;
  double idle = 0.0;
  st->add_option("--endpoint", endpoint, "host:port of the sample server")->required();
  st->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  add_expect_flags(st, expect);
  st->add_option("--len", stream_len, "Samples per frame")->capture_default_str()->check(CLI::Range(1, 1 << 24));
  st->add_option("--every", every, "Write a snapshot every n frames")->capture_default_str()->check(CLI::Range(1, 1 << 24));
  st->add_option("--window", window, "Frames per snapshot (default: --every)")->check(CLI::Range(1, 1 << 24));
  st->add_option("--max-frames", max_frames, "Stop after n frames (0: run until interrupted)")->capture_default_str();
  st->add_option("--capacity", capacity, "Frame queue capacity")->capture_default_str()->check(CLI::Range(1, 1 << 20));
  st->add_option("--idle-timeout", idle, "Stop after this many seconds without a frame (0: never)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  st->add_option("--bins", sf.bins, "Histogram bins per axis")->capture_default_str()->check(CLI::Range(2, 4096));
  st->add_option("--range", sf.range, "Histogram range R")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) cmd_gen(g, mods, snrs, frames, len);
    if (*tr) cmd_train(g, data, ff, tf, holdout, model);
    if (*emb) cmd_embed(g, data, ckpt, expect, sf.workers);
    if (*sign) cmd_sign(g, data, ckpt, expect, sf);
    if (*dist) cmd_dist(g, data, ckpt, expect, sf);
    if (*ev) cmd_eval(g, data, parse_kind(kind, held, lags_a, lags_b), ff, tf, sf, eval_fraction, concurrent);
    if (*st) cmd_stream(g, endpoint, ckpt, expect, stream_len, every, window, max_frames, capacity, idle, sf);
  } catch (const UsageError& e) {
    std::cerr << "dme: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dme: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
