#include "dme/signal_gen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

namespace dme {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(ModulationKind, ElevenStableCodes) {
  std::set<int> codes;
  for (ModulationKind k : all_modulations()) {
    codes.insert(modulation_code(k));
    EXPECT_EQ(modulation_from_code(modulation_code(k)), k);
    EXPECT_EQ(parse_modulation(modulation_name(k)), k);
  }
  EXPECT_EQ(codes.size(), 11u);
  EXPECT_EQ(*codes.begin(), 0);
  EXPECT_EQ(*codes.rbegin(), 10);
  EXPECT_EQ(parse_modulation("am-ssb"), ModulationKind::AM_SSB);
  EXPECT_FALSE(parse_modulation("OOK").has_value());
  EXPECT_FALSE(modulation_from_code(11).has_value());
}

TEST(GenerateFrame, NoiselessBpskLiesOnShapedLoci) {
  Rng rng(3);
  const ShapedFrame s = shape_linear(ModulationKind::BPSK, 128, rng);
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  for (std::size_t n = s.first_instant; n < 128; n += sps) {
    EXPECT_NEAR(std::abs(std::abs(s.frame.i[n]) - s.gain), 0.0, 1e-6);
    EXPECT_NEAR(s.frame.q[n], 0.0, 1e-6);
  }
  Rng again(3);
  const IqFrame f = generate_frame(ModulationKind::BPSK, kInf, 128, again);
  EXPECT_NEAR(f.mean_power(), 1.0, 0.05);
  EXPECT_EQ(f.i, s.frame.i);
}

TEST(GenerateFrame, BitIdenticalForSameSeed) {
  for (ModulationKind k : all_modulations()) {
    Rng a(7), b(7);
    const IqFrame fa = generate_frame(k, 10.0, 125, a);
    const IqFrame fb = generate_frame(k, 10.0, 125, b);
    EXPECT_EQ(fa.i, fb.i);
    EXPECT_EQ(fa.q, fb.q);
    EXPECT_EQ(fa.label, k);
    EXPECT_EQ(fa.snr_db, 10.0);
  }
}

TEST(GenerateFrame, QpskAtZeroDbMeasuresOnTarget) {
  Rng a(11), b(11);
  const IqFrame clean = generate_clean_frame(ModulationKind::QPSK, 4096, a);
  const IqFrame noisy = generate_frame(ModulationKind::QPSK, 0.0, 4096, b);
  const double snr = measure_snr(clean, noisy);
  EXPECT_GE(snr, -0.5);
  EXPECT_LE(snr, 0.5);
}

TEST(GenerateFrame, RejectsShortFrames) {
  Rng rng(1);
  EXPECT_THROW(generate_frame(ModulationKind::WBFM, 10.0, 31, rng), std::invalid_argument);
  EXPECT_NO_THROW(generate_frame(ModulationKind::WBFM, 10.0, 32, rng));
}

TEST(ApplyAwgn, VanishingNoiseAtHighSnr) {
  Rng g(5), n(6);
  const IqFrame clean = generate_clean_frame(ModulationKind::QAM16, 256, g);
  const IqFrame noisy = apply_awgn(clean, 200.0, n);
  for (std::size_t k = 0; k < clean.size(); ++k) {
    EXPECT_NEAR(noisy.i[k], clean.i[k], 1e-8);
    EXPECT_NEAR(noisy.q[k], clean.q[k], 1e-8);
  }
}

TEST(ApplyAwgn, DeterministicForSeed) {
  Rng g(5);
  const IqFrame clean = generate_clean_frame(ModulationKind::PAM4, 256, g);
  Rng a(9), b(9);
  EXPECT_EQ(apply_awgn(clean, 3.0, a).i, apply_awgn(clean, 3.0, b).i);
}

TEST(ApplyAwgn, NoisePowerAtZeroDb) {
  IqFrame f;
  f.i.assign(10000, std::sqrt(0.5));
  f.q.assign(10000, -std::sqrt(0.5));
  Rng rng(21);
  const IqFrame noisy = apply_awgn(f, 0.0, rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double di = noisy.i[k] - f.i[k], dq = noisy.q[k] - f.q[k];
    acc += di * di + dq * dq;
  }
  const double p = acc / static_cast<double>(f.size());
  EXPECT_GE(p, 0.97);
  EXPECT_LE(p, 1.03);
}

TEST(ApplyAwgn, RejectsAllZeroFrame) {
  IqFrame f;
  f.i.assign(64, 0.0);
  f.q.assign(64, 0.0);
  Rng rng(1);
  EXPECT_THROW(apply_awgn(f, 10.0, rng), std::invalid_argument);
}

TEST(GenerateDataset, CountsAndLabels) {
  DatasetSpec spec;
  spec.modulations.assign(all_modulations().begin(), all_modulations().end());
  spec.snrs_db = {0.0, 10.0};
  spec.frames_per_cell = 10;
  spec.seed = 4;
  const Dataset ds = generate_dataset(spec);
  ASSERT_EQ(ds.frames.size(), 220u);
  for (const IqFrame& f : ds.frames) {
    EXPECT_TRUE(f.label.has_value());
    EXPECT_TRUE(f.snr_db.has_value());
    EXPECT_EQ(f.size(), 125u);
  }
  const auto cells = ds.cells();
  EXPECT_EQ(cells.size(), 22u);
  for (const auto& [key, idx] : cells) EXPECT_EQ(idx.size(), 10u);
}

TEST(GenerateDataset, ThousandFrameCellAccepted) {
  // One cell of the full 1000 x 125 shape keeps the test fast; runtime is linear in cells.
  DatasetSpec spec;
  spec.modulations = {ModulationKind::WBFM};
  spec.snrs_db = {6.0};
  spec.frames_per_cell = 1000;
  spec.frame_len = 125;
  const Dataset ds = generate_dataset(spec);
  EXPECT_EQ(ds.frames.size(), 1000u);
}

TEST(GenerateDataset, SeedSensitivityWithSameStructure) {
  DatasetSpec spec;
  spec.modulations = {ModulationKind::QPSK, ModulationKind::AM_DSB};
  spec.snrs_db = {5.0};
  spec.frames_per_cell = 3;
  spec.seed = 1;
  const Dataset a = generate_dataset(spec);
  spec.seed = 2;
  const Dataset b = generate_dataset(spec);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t n = 0; n < a.frames.size(); ++n) {
    EXPECT_EQ(a.frames[n].label, b.frames[n].label);
    EXPECT_EQ(a.frames[n].size(), b.frames[n].size());
    EXPECT_NE(a.frames[n].i, b.frames[n].i);
  }
}

TEST(GenerateDataset, CellsIndependentOfOtherCells) {
  DatasetSpec one;
  one.modulations = {ModulationKind::GFSK};
  one.snrs_db = {10.0};
  one.frames_per_cell = 2;
  DatasetSpec many = one;
  many.modulations = {ModulationKind::BPSK, ModulationKind::GFSK};
  many.snrs_db = {0.0, 10.0};
  const Dataset a = generate_dataset(one);
  const Dataset b = generate_dataset(many);
  const auto idx = b.cells().at(CellKey{ModulationKind::GFSK, 10.0});
  EXPECT_EQ(a.frames[0].i, b.frames[idx[0]].i);
  EXPECT_EQ(a.frames[1].q, b.frames[idx[1]].q);
}

TEST(GenerateDataset, RejectsInvalidSpecs) {
  DatasetSpec spec;
  spec.snrs_db = {0.0};
  EXPECT_THROW(generate_dataset(spec), std::invalid_argument);
  spec.modulations = {ModulationKind::BPSK};
  spec.snrs_db.clear();
  EXPECT_THROW(generate_dataset(spec), std::invalid_argument);
  spec.snrs_db = {0.0};
  spec.frames_per_cell = 0;
  EXPECT_THROW(generate_dataset(spec), std::invalid_argument);
}

TEST(GenerateDataset, Deterministic) {
  DatasetSpec spec;
  spec.modulations = {ModulationKind::WBFM, ModulationKind::QAM64};
  spec.snrs_db = {-4.0, 12.0};
  spec.frames_per_cell = 4;
  spec.seed = 99;
  const Dataset a = generate_dataset(spec), b = generate_dataset(spec);
  for (std::size_t n = 0; n < a.frames.size(); ++n) {
    EXPECT_EQ(a.frames[n].i, b.frames[n].i);
    EXPECT_EQ(a.frames[n].q, b.frames[n].q);
  }
}

TEST(MeasureSnr, AnalyticCases) {
  IqFrame clean;
  clean.i = {1.0, -1.0, 1.0, -1.0};
  clean.q = {0.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(measure_snr(clean, clean), kInf);

  IqFrame equal = clean;
  for (double& v : equal.q) v = 1.0;  // noise power 1 = signal power
  EXPECT_EQ(measure_snr(clean, equal), 0.0);

  IqFrame tenth = clean;
  for (double& v : tenth.q) v = std::sqrt(0.1);
  EXPECT_NEAR(measure_snr(clean, tenth), 10.0, 1e-12);

  IqFrame short_frame;
  short_frame.i = {1.0};
  short_frame.q = {0.0};
  EXPECT_THROW(measure_snr(clean, short_frame), std::invalid_argument);
  IqFrame zero = clean;
  for (double& v : zero.i) v = 0.0;
  EXPECT_THROW(measure_snr(zero, clean), std::invalid_argument);
}

TEST(Properties, CalibrationAcrossModulationsAndSnrs) {
  for (ModulationKind k : all_modulations()) {
    for (double s : {-10.0, 0.0, 10.0, 18.0}) {
      Rng g(frame_seed(17, k, s, 0)), n(frame_seed(18, k, s, 0));
      const IqFrame clean = generate_clean_frame(k, 4096, g);
      const double measured = measure_snr(clean, apply_awgn(clean, s, n));
      EXPECT_NEAR(measured, s, 0.5) << modulation_name(k) << " at " << s;
    }
  }
}

TEST(Properties, CleanPowerNormalized) {
  for (ModulationKind k : all_modulations()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const double p = generate_clean_frame(k, 125, rng).mean_power();
      EXPECT_GE(p, 0.9) << modulation_name(k);
      EXPECT_LE(p, 1.1) << modulation_name(k);
    }
  }
}

TEST(Properties, LinearConstellationsAtSymbolInstants) {
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  for (ModulationKind k : all_modulations()) {
    if (!is_linear(k)) continue;
    const auto points = constellation(k);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const ShapedFrame s = shape_linear(k, 256, rng);
      for (std::size_t n = s.first_instant; n < 256; n += sps) {
        const std::complex<double> x(s.frame.i[n] / s.gain, s.frame.q[n] / s.gain);
        double best = 1e9;
        for (const auto& p : points) best = std::min(best, std::abs(x - p));
        EXPECT_LT(best, 1e-6) << modulation_name(k) << " seed " << seed << " n " << n;
      }
    }
  }
}

TEST(Properties, ConstellationsHaveUnitEnergy) {
  for (ModulationKind k : all_modulations()) {
    if (!is_linear(k)) {
      EXPECT_THROW(constellation(k), std::invalid_argument);
      continue;
    }
    double e = 0.0;
    const auto pts = constellation(k);
    for (const auto& p : pts) e += std::norm(p);
    EXPECT_NEAR(e / static_cast<double>(pts.size()), 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace dme
