#include "dme/signal_gen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace dme {
namespace {

using std::numbers::pi;
using cplx = std::complex<double>;

constexpr std::array<std::string_view, kModulationCount> kNames = {
    "BPSK", "QPSK", "PSK8", "QAM16", "QAM64", "PAM4", "GFSK", "CPFSK", "WBFM", "AM_SSB", "AM_DSB"};

constexpr std::size_t kMessageWarmup = 256;
constexpr std::size_t kHilbertTaps = 31;
constexpr double kFmDeviation = 0.08;  // cycles/sample per unit-RMS message
constexpr double kAmDepth = 0.5;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(pi * x) / (pi * x);
}

// Raised-cosine taps. Integer symbol offsets other than zero are forced to
// exactly 0 so symbol instants carry no inter-symbol interference.
std::vector<double> raised_cosine_taps() {
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  constexpr std::size_t len = ShapingParams::span_symbols * sps + 1;
  constexpr double alpha = ShapingParams::rolloff;
  const double center = static_cast<double>(len - 1) / 2.0;
  std::vector<double> h(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double t = (static_cast<double>(n) - center) / static_cast<double>(sps);
    if (t == 0.0) {
      h[n] = 1.0;
    } else if ((n - (len - 1) / 2) % sps == 0) {
      h[n] = 0.0;
    } else {
      const double denom = 1.0 - (2.0 * alpha * t) * (2.0 * alpha * t);
      if (std::abs(denom) < 1e-12)
        h[n] = pi / 4.0 * sinc(1.0 / (2.0 * alpha));
      else
        h[n] = sinc(t) * std::cos(pi * alpha * t) / denom;
    }
  }
  return h;
}

std::vector<double> gaussian_taps() {
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  constexpr std::size_t len = ShapingParams::span_symbols * sps + 1;
  const double sigma = std::sqrt(std::log(2.0)) / (2.0 * pi * ShapingParams::gfsk_bt);
  const double center = static_cast<double>(len - 1) / 2.0;
  std::vector<double> g(len);
  double sum = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    const double t = (static_cast<double>(n) - center) / static_cast<double>(sps);
    g[n] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += g[n];
  }
  for (double& v : g) v /= sum;
  return g;
}

void normalize_power(IqFrame& frame) {
  const double p = frame.mean_power();
  if (!(p > 0.0)) throw std::runtime_error("generated frame has zero power");
  const double s = 1.0 / std::sqrt(p);
  for (double& v : frame.i) v *= s;
  for (double& v : frame.q) v *= s;
}

// Band-limited Gaussian message: white noise through a 2-pole Butterworth
// low-pass, warm-up discarded, scaled to unit RMS.
std::vector<double> analog_message(std::size_t len, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double k = std::tan(pi * ShapingParams::message_cutoff);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  const double b0 = k * k * norm, b1 = 2.0 * b0, b2 = b0;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;

  std::vector<double> out(len);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < len + kMessageWarmup; ++n) {
    const double x = normal(rng);
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    if (n >= kMessageWarmup) out[n - kMessageWarmup] = y;
  }
  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(len));
  if (rms > 0.0)
    for (double& v : out) v /= rms;
  return out;
}

IqFrame make_frame(std::size_t len) {
  IqFrame f;
  f.i.assign(len, 0.0);
  f.q.assign(len, 0.0);
  return f;
}

IqFrame fsk_frame(bool gaussian, std::size_t len, Rng& rng) {
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  const std::vector<double> g = gaussian ? gaussian_taps() : std::vector<double>{1.0};
  const std::size_t taps = g.size();
  const std::size_t nsamples = len + taps - 1;
  const std::size_t nsym = nsamples / sps + 2;

  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<std::size_t> offset_dist(0, sps - 1);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * pi);
  std::vector<double> nrz(nsym * sps);
  for (std::size_t k = 0; k < nsym; ++k) {
    const double s = bit(rng) ? 1.0 : -1.0;
    for (std::size_t j = 0; j < sps; ++j) nrz[k * sps + j] = s;
  }
  const std::size_t offset = offset_dist(rng);
  double phase = phase_dist(rng);

  IqFrame f = make_frame(len);
  const double step = pi * ShapingParams::fsk_mod_index / static_cast<double>(sps);
  for (std::size_t n = 0; n < len; ++n) {
    double freq = 0.0;
    for (std::size_t t = 0; t < taps; ++t) freq += g[t] * nrz[offset + n + taps - 1 - t];
    phase += step * freq;
    f.i[n] = std::cos(phase);
    f.q[n] = std::sin(phase);
  }
  return f;
}

IqFrame wbfm_frame(std::size_t len, Rng& rng) {
  const std::vector<double> m = analog_message(len, rng);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * pi);
  double phase = phase_dist(rng);
  IqFrame f = make_frame(len);
  for (std::size_t n = 0; n < len; ++n) {
    phase += 2.0 * pi * kFmDeviation * m[n];
    f.i[n] = std::cos(phase);
    f.q[n] = std::sin(phase);
  }
  return f;
}

IqFrame am_dsb_frame(std::size_t len, Rng& rng) {
  const std::vector<double> m = analog_message(len, rng);
  IqFrame f = make_frame(len);
  for (std::size_t n = 0; n < len; ++n) f.i[n] = 1.0 + kAmDepth * m[n];
  return f;
}

// Upper-sideband SSB: I carries the message, Q its Hilbert transform
// (Hamming-windowed FIR, delay-compensated).
IqFrame am_ssb_frame(std::size_t len, Rng& rng) {
  const std::size_t half = kHilbertTaps / 2;
  const std::vector<double> m = analog_message(len + kHilbertTaps - 1, rng);
  std::vector<double> h(kHilbertTaps, 0.0);
  for (std::size_t k = 0; k < kHilbertTaps; ++k) {
    const long n = static_cast<long>(k) - static_cast<long>(half);
    if (n % 2 != 0) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(k) /
                                               static_cast<double>(kHilbertTaps - 1));
      h[k] = 2.0 / (pi * static_cast<double>(n)) * w;
    }
  }
  IqFrame f = make_frame(len);
  for (std::size_t j = 0; j < len; ++j) {
    f.i[j] = m[j + half];
    double acc = 0.0;
    for (std::size_t k = 0; k < kHilbertTaps; ++k) acc += h[k] * m[j + kHilbertTaps - 1 - k];
    f.q[j] = acc;
  }
  return f;
}

}  // namespace

const std::array<ModulationKind, kModulationCount>& all_modulations() {
  static const std::array<ModulationKind, kModulationCount> kinds = {
      ModulationKind::BPSK,  ModulationKind::QPSK,  ModulationKind::PSK8,   ModulationKind::QAM16,
      ModulationKind::QAM64, ModulationKind::PAM4,  ModulationKind::GFSK,   ModulationKind::CPFSK,
      ModulationKind::WBFM,  ModulationKind::AM_SSB, ModulationKind::AM_DSB};
  return kinds;
}

std::string_view modulation_name(ModulationKind kind) {
  return kNames[static_cast<std::size_t>(kind)];
}

std::optional<ModulationKind> parse_modulation(std::string_view name) {
  std::string norm(name);
  for (char& c : norm) {
    if (c == '-') c = '_';
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  for (std::size_t k = 0; k < kModulationCount; ++k)
    if (kNames[k] == norm) return static_cast<ModulationKind>(k);
  return std::nullopt;
}

std::optional<ModulationKind> modulation_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kModulationCount)) return std::nullopt;
  return static_cast<ModulationKind>(code);
}

bool is_linear(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::BPSK:
    case ModulationKind::QPSK:
    case ModulationKind::PSK8:
    case ModulationKind::QAM16:
    case ModulationKind::QAM64:
    case ModulationKind::PAM4:
      return true;
    default:
      return false;
  }
}

double IqFrame::mean_power() const {
  if (i.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 0; n < i.size(); ++n) acc += i[n] * i[n] + q[n] * q[n];
  return acc / static_cast<double>(i.size());
}

void IqFrame::validate() const {
  if (i.size() != q.size())
    throw std::invalid_argument("IqFrame: i and q lengths differ (" + std::to_string(i.size()) +
                                " vs " + std::to_string(q.size()) + ")");
  if (i.empty()) throw std::invalid_argument("IqFrame: empty frame");
  for (std::size_t n = 0; n < i.size(); ++n)
    if (!std::isfinite(i[n]) || !std::isfinite(q[n]))
      throw std::invalid_argument("IqFrame: non-finite sample at index " + std::to_string(n));
}

std::string cell_label(const CellKey& cell) {
  std::ostringstream os;
  os << modulation_name(cell.kind) << '@' << cell.snr_db;
  return os.str();
}

std::map<CellKey, std::vector<std::size_t>> Dataset::cells() const {
  std::map<CellKey, std::vector<std::size_t>> out;
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const IqFrame& f = frames[n];
    if (!f.label || !f.snr_db)
      throw std::invalid_argument("Dataset frame " + std::to_string(n) + " lacks label or SNR");
    out[CellKey{*f.label, *f.snr_db}].push_back(n);
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.frames.reserve(indices.size());
  for (std::size_t idx : indices) out.frames.push_back(frames.at(idx));
  return out;
}

std::vector<std::complex<double>> constellation(ModulationKind kind) {
  std::vector<cplx> pts;
  switch (kind) {
    case ModulationKind::BPSK:
      pts = {{-1.0, 0.0}, {1.0, 0.0}};
      break;
    case ModulationKind::QPSK:
      for (int k = 0; k < 4; ++k) pts.push_back(std::polar(1.0, pi / 4.0 + k * pi / 2.0));
      break;
    case ModulationKind::PSK8:
      for (int k = 0; k < 8; ++k) pts.push_back(std::polar(1.0, k * pi / 4.0));
      break;
    case ModulationKind::QAM16:
    case ModulationKind::QAM64: {
      const int side = kind == ModulationKind::QAM16 ? 4 : 8;
      const double scale = 1.0 / std::sqrt(kind == ModulationKind::QAM16 ? 10.0 : 42.0);
      for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
          pts.emplace_back((2 * a - side + 1) * scale, (2 * b - side + 1) * scale);
      break;
    }
    case ModulationKind::PAM4: {
      const double scale = 1.0 / std::sqrt(5.0);
      for (int a : {-3, -1, 1, 3}) pts.emplace_back(a * scale, 0.0);
      break;
    }
    default:
      throw std::invalid_argument("constellation: " + std::string(modulation_name(kind)) +
                                  " is not a linear modulation");
  }
  return pts;
}

ShapedFrame shape_linear(ModulationKind kind, std::size_t len, Rng& rng) {
  if (len < kMinFrameLen)
    throw std::invalid_argument("frame length " + std::to_string(len) + " below minimum " +
                                std::to_string(kMinFrameLen));
  constexpr std::size_t sps = ShapingParams::samples_per_symbol;
  const std::vector<cplx> points = constellation(kind);
  const std::vector<double> h = raised_cosine_taps();
  const std::size_t taps = h.size();
  const std::size_t center = (taps - 1) / 2;

  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::uniform_int_distribution<std::size_t> offset_dist(0, sps - 1);
  const std::size_t nsym = (len + taps + sps) / sps + 1;
  std::vector<cplx> symbols(nsym);
  for (auto& s : symbols) s = points[pick(rng)];
  const std::size_t offset = offset_dist(rng);
  const std::size_t start = taps - 1 + offset;

  IqFrame f = make_frame(len);
  for (std::size_t j = 0; j < len; ++j) {
    const std::size_t n = start + j;
    cplx acc{0.0, 0.0};
    // y[n] = sum_k a_k h[n - k sps], restricted to taps inside the filter.
    const std::size_t k_lo = n + 1 > taps ? (n + 1 - taps + sps - 1) / sps : 0;
    const std::size_t k_hi = std::min(n / sps, nsym - 1);
    for (std::size_t k = k_lo; k <= k_hi; ++k) acc += symbols[k] * h[n - k * sps];
    f.i[j] = acc.real();
    f.q[j] = acc.imag();
  }
  const double p = f.mean_power();
  if (!(p > 0.0)) throw std::runtime_error("shape_linear: zero-power frame");
  const double gain = 1.0 / std::sqrt(p);
  for (double& v : f.i) v *= gain;
  for (double& v : f.q) v *= gain;

  ShapedFrame out;
  out.frame = std::move(f);
  out.gain = gain;
  out.first_instant = (sps - (start - center) % sps) % sps;
  return out;
}

IqFrame generate_clean_frame(ModulationKind kind, std::size_t len, Rng& rng) {
  if (len < kMinFrameLen)
    throw std::invalid_argument("frame length " + std::to_string(len) + " below minimum " +
                                std::to_string(kMinFrameLen));
  IqFrame f;
  if (is_linear(kind)) {
    f = shape_linear(kind, len, rng).frame;
  } else {
    switch (kind) {
      case ModulationKind::GFSK:
        f = fsk_frame(true, len, rng);
        break;
      case ModulationKind::CPFSK:
        f = fsk_frame(false, len, rng);
        break;
      case ModulationKind::WBFM:
        f = wbfm_frame(len, rng);
        break;
      case ModulationKind::AM_SSB:
        f = am_ssb_frame(len, rng);
        break;
      case ModulationKind::AM_DSB:
        f = am_dsb_frame(len, rng);
        break;
      default:
        throw std::logic_error("unhandled modulation");
    }
    normalize_power(f);
  }
  f.label = kind;
  f.snr_db = std::numeric_limits<double>::infinity();
  return f;
}

IqFrame generate_frame(ModulationKind kind, double snr_db, std::size_t len, Rng& rng) {
  IqFrame clean = generate_clean_frame(kind, len, rng);
  IqFrame out = std::isinf(snr_db) && snr_db > 0 ? clean : apply_awgn(clean, snr_db, rng);
  out.label = kind;
  out.snr_db = snr_db;
  return out;
}

IqFrame apply_awgn(const IqFrame& frame, double snr_db, Rng& rng) {
  frame.validate();
  if (std::isnan(snr_db)) throw std::invalid_argument("apply_awgn: SNR is NaN");
  const double power = frame.mean_power();
  if (!(power > 0.0)) throw std::invalid_argument("apply_awgn: all-zero frame, SNR undefined");
  IqFrame out = frame;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  const double noise_power = power / std::pow(10.0, snr_db / 10.0);
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_power / 2.0));
  for (std::size_t n = 0; n < out.i.size(); ++n) {
    out.i[n] += normal(rng);
    out.q[n] += normal(rng);
  }
  out.snr_db = snr_db;
  return out;
}

std::uint64_t frame_seed(std::uint64_t dataset_seed, ModulationKind kind, double snr_db,
                         std::size_t index) {
  const double snr = snr_db + 0.0;  // fold -0.0 onto +0.0
  return derive_seed(dataset_seed, {static_cast<std::uint64_t>(modulation_code(kind)),
                                    std::bit_cast<std::uint64_t>(snr),
                                    static_cast<std::uint64_t>(index)});
}

Dataset generate_dataset(const DatasetSpec& spec) {
  if (spec.modulations.empty()) throw std::invalid_argument("DatasetSpec: empty modulation list");
  if (spec.snrs_db.empty()) throw std::invalid_argument("DatasetSpec: empty SNR list");
  if (spec.frames_per_cell < 1) throw std::invalid_argument("DatasetSpec: frames_per_cell < 1");
  if (spec.frame_len < kMinFrameLen)
    throw std::invalid_argument("DatasetSpec: frame_len " + std::to_string(spec.frame_len) +
                                " below minimum " + std::to_string(kMinFrameLen));
  std::set<ModulationKind> seen_mods(spec.modulations.begin(), spec.modulations.end());
  std::set<double> seen_snrs(spec.snrs_db.begin(), spec.snrs_db.end());
  if (seen_mods.size() != spec.modulations.size())
    throw std::invalid_argument("DatasetSpec: duplicate modulation");
  if (seen_snrs.size() != spec.snrs_db.size())
    throw std::invalid_argument("DatasetSpec: duplicate SNR");
  for (double s : spec.snrs_db)
    if (!std::isfinite(s)) throw std::invalid_argument("DatasetSpec: SNR must be finite");

  Dataset ds;
  ds.frames.reserve(spec.modulations.size() * spec.snrs_db.size() * spec.frames_per_cell);
  for (ModulationKind kind : spec.modulations) {
    for (double snr : spec.snrs_db) {
      for (std::size_t n = 0; n < spec.frames_per_cell; ++n) {
        Rng rng(frame_seed(spec.seed, kind, snr, n));
        ds.frames.push_back(generate_frame(kind, snr, spec.frame_len, rng));
      }
    }
  }
  return ds;
}

double measure_snr(const IqFrame& clean, const IqFrame& noisy) {
  if (clean.i.size() != noisy.i.size() || clean.q.size() != noisy.q.size() ||
      clean.i.size() != clean.q.size())
    throw std::invalid_argument("measure_snr: length mismatch");
  const double p_clean = clean.mean_power();
  if (!(p_clean > 0.0)) throw std::invalid_argument("measure_snr: clean frame has zero power");
  double acc = 0.0;
  for (std::size_t n = 0; n < clean.i.size(); ++n) {
    const double di = noisy.i[n] - clean.i[n];
    const double dq = noisy.q[n] - clean.q[n];
    acc += di * di + dq * dq;
  }
  const double p_noise = acc / static_cast<double>(clean.i.size());
  if (p_noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p_clean / p_noise);
}

}  // namespace dme
