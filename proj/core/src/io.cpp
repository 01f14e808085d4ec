#include "dme/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "cf32 and checkpoint codecs assume a little-endian host");

namespace dme {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'M', 'E', '1'};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_all(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

json arch_to_json(const Architecture& a) {
  return {{"input_dim", a.input_dim},   {"hidden_dim", a.hidden_dim},
          {"depth", a.depth},           {"latent_dim", a.latent_dim},
          {"target_dim", a.target_dim}, {"dropout_rate", a.dropout_rate},
          {"activation", std::string(Architecture::activation)}};
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.input_dim = j.at("input_dim").get<std::size_t>();
  a.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  a.depth = j.at("depth").get<std::size_t>();
  a.latent_dim = j.at("latent_dim").get<std::size_t>();
  a.target_dim = j.at("target_dim").get<std::size_t>();
  a.dropout_rate = j.at("dropout_rate").get<double>();
  if (j.at("activation").get<std::string>() != Architecture::activation)
    throw IoError("checkpoint: unsupported activation " + j.at("activation").dump());
  a.validate();
  return a;
}

json features_to_json(const FeatureConfig& f) {
  return {{"layout_version", kFeatureLayoutVersion},
          {"lag_count", f.lag_count},
          {"include_correlations", f.include_correlations},
          {"corr_window", f.corr_window},
          {"target_lag_count", f.target_lag_count}};
}

FeatureConfig features_from_json(const json& j) {
  if (j.at("layout_version").get<int>() != kFeatureLayoutVersion)
    throw IoError("checkpoint: feature layout version " + j.at("layout_version").dump() +
                  " not supported");
  FeatureConfig f;
  f.lag_count = j.at("lag_count").get<std::size_t>();
  f.include_correlations = j.at("include_correlations").get<bool>();
  f.corr_window = j.at("corr_window").get<std::size_t>();
  f.target_lag_count = j.at("target_lag_count").get<std::size_t>();
  f.validate();
  return f;
}

json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"beta_kl", t.beta_kl},
          {"batch_rows", t.batch_rows},       {"epochs", t.epochs},
          {"seed", t.seed},                   {"adam_beta1", t.adam.beta1},
          {"adam_beta2", t.adam.beta2},       {"adam_epsilon", t.adam.epsilon},
          {"lr_decay", t.lr_decay}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.learning_rate = j.at("learning_rate").get<double>();
  t.beta_kl = j.at("beta_kl").get<double>();
  t.batch_rows = j.at("batch_rows").get<std::size_t>();
  t.epochs = j.at("epochs").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.adam.beta1 = j.at("adam_beta1").get<double>();
  t.adam.beta2 = j.at("adam_beta2").get<double>();
  t.adam.epsilon = j.at("adam_epsilon").get<double>();
  t.lr_decay = j.at("lr_decay").get<double>();
  return t;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

void encode_cf32(const IqFrame& frame, std::vector<std::uint8_t>& out) {
  const std::size_t at = out.size();
  out.resize(at + frame.size() * 8);
  for (std::size_t n = 0; n < frame.size(); ++n) {
    const float iq[2] = {static_cast<float>(frame.i[n]), static_cast<float>(frame.q[n])};
    std::memcpy(out.data() + at + n * 8, iq, 8);
  }
}

void write_cf32(const std::filesystem::path& path, std::span<const IqFrame> frames) {
  std::vector<std::uint8_t> bytes;
  for (const IqFrame& f : frames) {
    if (f.i.size() != f.q.size()) throw std::invalid_argument("write_cf32: i/q length mismatch");
    encode_cf32(f, bytes);
  }
  write_all(path, bytes);
}

std::vector<IqFrame> read_cf32(const std::filesystem::path& path, std::size_t frame_len) {
  if (frame_len < 1) throw std::invalid_argument("read_cf32: frame_len must be >= 1");
  const std::vector<std::uint8_t> bytes = read_all(path);
  const std::size_t frame_bytes = 8 * frame_len;
  if (bytes.size() % frame_bytes != 0) {
    const std::size_t whole = bytes.size() / frame_bytes * frame_bytes;
    throw IoError(path.string() + ": " + std::to_string(bytes.size()) +
                  " bytes is not a multiple of " + std::to_string(frame_bytes) +
                  " (frame_len " + std::to_string(frame_len) + "); trailing " +
                  std::to_string(bytes.size() - whole) + " bytes start at offset " +
                  std::to_string(whole));
  }
  std::vector<IqFrame> frames(bytes.size() / frame_bytes);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    IqFrame& f = frames[k];
    f.i.resize(frame_len);
    f.q.resize(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n) {
      float iq[2];
      std::memcpy(iq, bytes.data() + k * frame_bytes + n * 8, 8);
      f.i[n] = iq[0];
      f.q[n] = iq[1];
    }
  }
  return frames;
}

std::string cell_file_name(const CellKey& cell) {
  std::ostringstream os;
  os << modulation_name(cell.kind) << '_' << cell.snr_db << "dB.cf32";
  return os.str();
}

DatasetManifest save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  json entries = json::array();
  for (const auto& [cell, idx] : dataset.cells()) {
    std::vector<IqFrame> frames;
    frames.reserve(idx.size());
    for (std::size_t n : idx) frames.push_back(dataset.frames[n]);
    const std::size_t len = frames.front().size();
    for (const auto& f : frames)
      if (f.size() != len)
        throw std::invalid_argument("save_dataset: mixed frame lengths in cell " + cell_label(cell));
    ManifestEntry e{cell_file_name(cell), cell.kind, cell.snr_db, len, frames.size()};
    write_cf32(dir / e.path, frames);
    entries.push_back({{"path", e.path},
                       {"modulation", modulation_code(e.modulation)},
                       {"snr_db", e.snr_db},
                       {"frame_len", e.frame_len},
                       {"frame_count", e.frame_count}});
    manifest.entries.push_back(std::move(e));
  }
  const json doc = {{"format", "dme-dataset"}, {"version", kManifestVersion}, {"entries", entries}};
  std::ofstream out(dir / kManifestName);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << doc.dump(2) << '\n';
  return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw IoError("no " + std::string(kManifestName) + " in " + dir.string());
  DatasetManifest m;
  try {
    const json doc = json::parse(in);
    if (doc.at("format").get<std::string>() != "dme-dataset")
      throw IoError("manifest: unexpected format " + doc.at("format").dump());
    m.version = doc.at("version").get<int>();
    if (m.version != kManifestVersion)
      throw IoError("manifest: version " + std::to_string(m.version) + " not supported");
    for (const json& e : doc.at("entries")) {
      const auto kind = modulation_from_code(e.at("modulation").get<int>());
      if (!kind) throw IoError("manifest: unknown modulation code " + e.at("modulation").dump());
      m.entries.push_back({e.at("path").get<std::string>(), *kind, e.at("snr_db").get<double>(),
                           e.at("frame_len").get<std::size_t>(),
                           e.at("frame_count").get<std::size_t>()});
    }
  } catch (const json::exception& ex) {
    throw IoError("manifest in " + dir.string() + ": " + ex.what());
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const DatasetManifest m = read_manifest(dir);
  Dataset ds;
  for (const ManifestEntry& e : m.entries) {
    std::vector<IqFrame> frames = read_cf32(dir / e.path, e.frame_len);
    if (frames.size() != e.frame_count)
      throw IoError(e.path + ": manifest lists " + std::to_string(e.frame_count) +
                    " frames, file holds " + std::to_string(frames.size()));
    for (IqFrame& f : frames) {
      f.label = e.modulation;
      f.snr_db = e.snr_db;
      ds.frames.push_back(std::move(f));
    }
  }
  return ds;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.params.validate();
  if (ckpt.params.arch.input_dim != ckpt.features.feature_dim() ||
      ckpt.params.arch.target_dim != ckpt.features.target_dim())
    throw std::invalid_argument("save_checkpoint: architecture does not match feature config");

  std::vector<std::uint8_t> payload;
  payload.reserve(ckpt.params.parameter_count() * 8);
  for (auto t : ckpt.params.tensors()) {
    const std::size_t at = payload.size();
    payload.resize(at + t.size() * 8);
    std::memcpy(payload.data() + at, t.data(), t.size() * 8);
  }
  const json header = {{"format_version", kCheckpointVersion},
                       {"architecture", arch_to_json(ckpt.params.arch)},
                       {"feature_config", features_to_json(ckpt.features)},
                       {"train_config", train_to_json(ckpt.train)},
                       {"payload_count", ckpt.params.parameter_count()},
                       {"payload_fnv1a64", hex64(fnv1a64(payload))}};
  const std::string head = header.dump() + "\n";

  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  bytes.push_back('\n');
  bytes.insert(bytes.end(), head.begin(), head.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  write_all(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_all(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0 || bytes[4] != '\n')
    throw IoError(where + "bad magic (expected DME1)");
  const auto nl = std::find(bytes.begin() + 5, bytes.end(), static_cast<std::uint8_t>('\n'));
  if (nl == bytes.end()) throw IoError(where + "corrupt header: no terminating newline");

  Checkpoint ckpt;
  std::size_t count = 0;
  std::string checksum;
  try {
    const json header = json::parse(bytes.begin() + 5, nl);
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      throw IoError(where + "format version " + std::to_string(version) + " not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
    ckpt.params = NetworkParams::zeros(arch_from_json(header.at("architecture")));
    ckpt.features = features_from_json(header.at("feature_config"));
    ckpt.train = train_from_json(header.at("train_config"));
    count = header.at("payload_count").get<std::size_t>();
    checksum = header.at("payload_fnv1a64").get<std::string>();
  } catch (const json::exception& ex) {
    throw IoError(where + "corrupt header: " + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw IoError(where + "invalid header: " + ex.what());
  }

  if (count != ckpt.params.parameter_count())
    throw IoError(where + "payload_count " + std::to_string(count) +
                  " does not match the architecture (" +
                  std::to_string(ckpt.params.parameter_count()) + ")");
  const std::size_t payload_at = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t payload_len = bytes.size() - payload_at;
  if (payload_len != count * 8)
    throw IoError(where + "payload holds " + std::to_string(payload_len) + " bytes, expected " +
                  std::to_string(count * 8));
  const std::span<const std::uint8_t> payload(bytes.data() + payload_at, payload_len);
  if (hex64(fnv1a64(payload)) != checksum)
    throw IoError(where + "payload checksum mismatch (corrupted file)");

  std::size_t at = 0;
  for (auto t : ckpt.params.tensors()) {
    std::memcpy(t.data(), payload.data() + at, t.size() * 8);
    at += t.size() * 8;
  }
  try {
    ckpt.params.validate();
  } catch (const std::invalid_argument& ex) {
    throw IoError(where + ex.what());
  }
  if (ckpt.params.arch.input_dim != ckpt.features.feature_dim())
    throw IoError(where + "architecture input_dim disagrees with the stored feature config");
  return ckpt;
}

void require_feature_match(const Checkpoint& ckpt, const FeatureConfig& requested) {
  if (!(ckpt.features == requested)) {
    std::ostringstream os;
    os << "feature config mismatch: checkpoint has K=" << ckpt.features.lag_count
       << " corr=" << (ckpt.features.include_correlations ? "on" : "off")
       << " W=" << ckpt.features.corr_window << " L=" << ckpt.features.target_lag_count
       << ", requested K=" << requested.lag_count
       << " corr=" << (requested.include_correlations ? "on" : "off")
       << " W=" << requested.corr_window << " L=" << requested.target_lag_count;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace dme
