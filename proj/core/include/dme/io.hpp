#pragma once

#include "dme/features.hpp"
#include "dme/signal_gen.hpp"
#include "dme/training.hpp"
#include "dme/vae.hpp"

#include <filesystem>
#include <span>
#include <string>

namespace dme {

// ---------------------------------------------------------------------------
// cf32: interleaved little-endian IEEE float32, i0 q0 i1 q1 ... No header.
// ---------------------------------------------------------------------------

void write_cf32(const std::filesystem::path& path, std::span<const IqFrame> frames);
/// Slices the file into frames of frame_len complex samples. An empty file
/// yields no frames; a length that is not a multiple of 8 * frame_len is an IoError.
std::vector<IqFrame> read_cf32(const std::filesystem::path& path, std::size_t frame_len);

/// Appends little-endian float32 pairs for the given samples.
void encode_cf32(const IqFrame& frame, std::vector<std::uint8_t>& out);

// ---------------------------------------------------------------------------
// Dataset directory: manifest.json plus one cf32 file per (modulation, SNR) cell.
//
//   {"format": "dme-dataset", "version": 1,
//    "entries": [{"path": "BPSK_10dB.cf32", "modulation": 0, "snr_db": 10.0,
//                 "frame_len": 125, "frame_count": 50}, ...]}
// ---------------------------------------------------------------------------

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

struct ManifestEntry {
  std::string path;
  ModulationKind modulation;
  double snr_db;
  std::size_t frame_len;
  std::size_t frame_count;
};

struct DatasetManifest {
  int version = kManifestVersion;
  std::vector<ManifestEntry> entries;
};

std::string cell_file_name(const CellKey& cell);

/// Writes manifest and cf32 files; returns the manifest. Every cell must use a single frame length.
DatasetManifest save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
DatasetManifest read_manifest(const std::filesystem::path& dir);
/// Loads every entry and checks each file holds exactly frame_count * frame_len samples.
Dataset load_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Checkpoint:
//   bytes 0..4   "DME1\n"
//   one line     JSON header: format_version, architecture, feature_config,
//                train_config, payload_count, payload_fnv1a64 (16 hex digits)
//   payload      payload_count float64 little-endian values, tensors in
//                NetworkParams serialization order
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  FeatureConfig features;
  TrainConfig train;
};

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws unless the checkpoint was trained with exactly `requested`.
void require_feature_match(const Checkpoint& ckpt, const FeatureConfig& requested);

}  // namespace dme
