#include "lungmix/audio_pipeline.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "lungmix/error.hpp"

namespace lungmix {
namespace {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// Resampling

constexpr double kRolloff = 0.94;      // passband edge as a fraction of the lower Nyquist
constexpr double kZeroCrossings = 32;  // per side of the kernel
constexpr double kKaiserBeta = 8.6;
constexpr std::int64_t kMaxTablePhases = 4096;

class SincKernel {
 public:
  SincKernel(double cutoff) : cutoff_(cutoff), half_width_(kZeroCrossings / (2.0 * cutoff)) {
    norm_ = std::cyl_bessel_i(0.0, kKaiserBeta);
  }

  double half_width() const { return half_width_; }

  /// Kaiser-windowed 2 fc sinc(2 fc d), d in input samples.
  double operator()(double d) const {
    const double r = d / half_width_;
    if (std::abs(r) >= 1.0) return 0.0;
    const double x = 2.0 * cutoff_ * d;
    const double sinc = x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x);
    const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm_;
    return 2.0 * cutoff_ * sinc * window;
  }

 private:
  double cutoff_;
  double half_width_;
  double norm_;
};

void fill_phase(const SincKernel& kernel, double frac, std::int64_t taps, double* out) {
  // out[j] weighs input sample k0 - j + taps / 2 - 1 ... see resample().
  const std::int64_t half = taps / 2;
  double sum = 0.0;
  for (std::int64_t j = 0; j < taps; ++j) {
    out[j] = kernel(frac + static_cast<double>(j - half + 1));
    sum += out[j];
  }
  if (sum != 0.0) {
    for (std::int64_t j = 0; j < taps; ++j) out[j] /= sum;
  }
}

// ---------------------------------------------------------------------------
// Butterworth bandpass as second-order sections (transposed direct form II)

constexpr int kButterOrder = 4;

struct Biquad {
  double b0, b1, b2, a1, a2;
};

std::vector<Biquad> design_bandpass(double low, double high, double fs) {
  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(pi * low / fs);
  const double wh = fs2 * std::tan(pi * high / fs);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);
  const double center = 2.0 * std::atan(w0 / fs2);
  const std::complex<double> z_center = std::polar(1.0, center);

  std::vector<Biquad> sections;
  for (int k = 0; k < kButterOrder / 2; ++k) {
    const std::complex<double> proto =
        std::polar(1.0, pi * (2.0 * k + kButterOrder + 1) / (2.0 * kButterOrder));
    const std::complex<double> pb = proto * bw;
    const std::complex<double> disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
    for (const auto& s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      const std::complex<double> z = (fs2 + s) / (fs2 - s);
      Biquad q{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)};
      // Unit gain at the band centre for every section.
      const std::complex<double> zi = 1.0 / z_center;
      const std::complex<double> h =
          (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
      const double g = 1.0 / std::abs(h);
      q.b0 *= g;
      q.b1 *= g;
      q.b2 *= g;
      sections.push_back(q);
    }
  }
  return sections;
}

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

/// Steady-state states for a unit step at the filter input.
std::vector<SectionState> step_states(const std::vector<Biquad>& sos) {
  std::vector<SectionState> zi(sos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& q = sos[i];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z2 = q.b2 - q.a2 * g;
    const double z1 = q.b1 - q.a1 * g + z2;
    zi[i] = {z1 * scale, z2 * scale};
    scale *= g;
  }
  return zi;
}

void run_sections(const std::vector<Biquad>& sos, std::vector<SectionState> state,
                  std::vector<double>& x) {
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& q = sos[i];
    double z1 = state[i].z1, z2 = state[i].z2;
    for (double& v : x) {
      const double y = q.b0 * v + z1;
      z1 = q.b1 * v - q.a1 * y + z2;
      z2 = q.b2 * v - q.a2 * y;
      v = y;
    }
  }
}

std::vector<SectionState> scaled(const std::vector<SectionState>& unit, double s) {
  std::vector<SectionState> out(unit);
  for (auto& st : out) {
    st.z1 *= s;
    st.z2 *= s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mel filterbank and FFT

double hz_to_mel(double hz, MelScale scale) {
  if (scale == MelScale::kHtk) return 2595.0 * std::log10(1.0 + hz / 700.0);
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz < min_log_hz ? hz / f_sp : min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel, MelScale scale) {
  if (scale == MelScale::kHtk) return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return mel < min_log_mel ? mel * f_sp : min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

/// Triangular filters, row-major (mel_bins x (fft_size / 2 + 1)).
std::vector<double> mel_filterbank(const SpectrogramConfig& c, int rate, int fft_size) {
  const int n_bins = fft_size / 2 + 1;
  const double hi = c.mel_high_hz > 0.0 ? c.mel_high_hz : rate / 2.0;
  const double mel_lo = hz_to_mel(c.mel_low_hz, c.scale);
  const double mel_hi = hz_to_mel(hi, c.scale);
  std::vector<double> edges(static_cast<std::size_t>(c.mel_bins) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (c.mel_bins + 1);
    edges[i] = mel_to_hz(mel, c.scale);
  }
  std::vector<double> fb(static_cast<std::size_t>(c.mel_bins) * n_bins, 0.0);
  for (int m = 0; m < c.mel_bins; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * rate / fft_size;
      double w = 0.0;
      if (f > left && f <= centre) w = (f - left) / (centre - left);
      else if (f > centre && f < right) w = (right - f) / (right - centre);
      fb[static_cast<std::size_t>(m) * n_bins + k] = w;
    }
  }
  return fb;
}

struct FftwDeleter {
  void operator()(double* p) const { fftw_free(p); }
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

/// FFTW planning is not thread-safe; executing a shared plan on fresh arrays is.
fftw_plan r2c_plan(int n) {
  static std::mutex mutex;
  static std::map<int, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(static_cast<std::size_t>(n)));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
  plans.emplace(n, plan);
  return plan;
}

}  // namespace

void validate(const Waveform& w) {
  require(w.sample_rate > 0, ErrorKind::kInvalidConfig, "sample_rate must be positive");
  for (double x : w.samples) {
    require(std::isfinite(x), ErrorKind::kNumericalError, "waveform holds a non-finite sample");
  }
}

void validate(const PipelineConfig& cfg) {
  require(cfg.target_rate > 0, ErrorKind::kInvalidConfig, "target_rate must be positive");
  require(cfg.band_low > 0.0 && cfg.band_low < cfg.band_high &&
              cfg.band_high < cfg.target_rate / 2.0,
          ErrorKind::kInvalidConfig, "band edges must satisfy 0 < low < high < rate/2");
  require(cfg.clip_seconds > 0.0, ErrorKind::kInvalidConfig, "clip_seconds must be positive");
  require(cfg.norm_std > 0.0, ErrorKind::kInvalidConfig, "norm_std must be positive");
  require(cfg.pad.eps >= 0.0, ErrorKind::kInvalidConfig, "noise padding eps must be >= 0");
  const auto& s = cfg.spectrogram;
  require(s.window_seconds > 0.0 && s.hop_seconds > 0.0, ErrorKind::kInvalidConfig,
          "window and hop must be positive");
  require(s.mel_bins > 0 && s.frames > 0 && s.fft_size > 0, ErrorKind::kInvalidConfig,
          "spectrogram dimensions must be positive");
  require(s.energy_floor > 0.0, ErrorKind::kInvalidConfig, "energy_floor must be positive");
}

Waveform resample(const Waveform& w, int target_rate) {
  require(!w.empty(), ErrorKind::kEmptyAudio, "resample: empty input");
  require(target_rate > 0, ErrorKind::kInvalidConfig, "resample: target_rate must be positive");
  require(w.sample_rate > 0, ErrorKind::kInvalidConfig, "resample: source rate must be positive");
  if (w.sample_rate == target_rate) return w;

  const std::int64_t g = std::gcd(w.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = w.sample_rate / g;
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / down) * kRolloff;
  const SincKernel kernel(cutoff);
  const std::int64_t taps = 2 * static_cast<std::int64_t>(std::ceil(kernel.half_width()));

  const auto n_in = static_cast<std::int64_t>(w.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;

  const bool tabulated = up <= kMaxTablePhases;
  std::vector<double> table;
  if (tabulated) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
      fill_phase(kernel, static_cast<double>(p) / up, taps, &table[static_cast<std::size_t>(p * taps)]);
    }
  }
  std::vector<double> scratch(tabulated ? 0 : static_cast<std::size_t>(taps));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  const std::int64_t half = taps / 2;
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t k0 = pos / up;
    const std::int64_t phase = pos % up;
    const double* h;
    if (tabulated) {
      h = &table[static_cast<std::size_t>(phase * taps)];
    } else {
      fill_phase(kernel, static_cast<double>(phase) / up, taps, scratch.data());
      h = scratch.data();
    }
    double acc = 0.0;
    // Tap j weighs input sample k0 + half - 1 - j at distance frac + j - half + 1.
    for (std::int64_t j = 0; j < taps; ++j) {
      const std::int64_t k = k0 + half - 1 - j;
      if (k >= 0 && k < n_in) acc += h[j] * w.samples[static_cast<std::size_t>(k)];
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

Waveform bandpass(const Waveform& w, double low_hz, double high_hz) {
  require(w.sample_rate > 0, ErrorKind::kInvalidConfig, "bandpass: sample rate must be positive");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < w.sample_rate / 2.0,
          ErrorKind::kInvalidConfig, "bandpass: need 0 < low < high < rate/2");
  if (w.size() < 2) return w;

  const auto sos = design_bandpass(low_hz, high_hz, w.sample_rate);
  const auto unit = step_states(sos);

  const std::size_t n = w.size();
  const auto settle = static_cast<std::size_t>(std::ceil(3.0 * w.sample_rate / low_hz));
  const std::size_t pad = std::min(n - 1, std::max<std::size_t>(3 * (2 * sos.size() + 1), settle));

  // Odd extension at both ends.
  std::vector<double> x;
  x.reserve(n + 2 * pad);
  const double first = w.samples.front();
  const double last = w.samples.back();
  for (std::size_t i = pad; i >= 1; --i) x.push_back(2.0 * first - w.samples[i]);
  x.insert(x.end(), w.samples.begin(), w.samples.end());
  for (std::size_t i = 1; i <= pad; ++i) x.push_back(2.0 * last - w.samples[n - 1 - i]);

  run_sections(sos, scaled(unit, x.front()), x);
  std::reverse(x.begin(), x.end());
  run_sections(sos, scaled(unit, x.front()), x);
  std::reverse(x.begin(), x.end());

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(pad),
                     x.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

Waveform pad_to(const Waveform& w, std::size_t length, PadMode pad, Rng& rng) {
  Waveform out = w;
  if (out.size() >= length) return out;
  out.samples.reserve(length);
  if (pad.kind == PadMode::Kind::kZeros || pad.eps == 0.0) {
    out.samples.resize(length, 0.0);
  } else {
    while (out.size() < length) out.samples.push_back(pad.eps * (2.0 * rng.uniform() - 1.0));
  }
  return out;
}

Waveform fit_length(const Waveform& w, double clip_seconds, PadMode pad, Rng& rng) {
  require(clip_seconds > 0.0, ErrorKind::kInvalidConfig, "fit_length: clip_seconds must be positive");
  require(w.sample_rate > 0, ErrorKind::kInvalidConfig, "fit_length: sample rate must be positive");
  const auto target = static_cast<std::size_t>(std::llround(clip_seconds * w.sample_rate));
  if (w.size() >= target) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.assign(w.samples.begin(), w.samples.begin() + static_cast<std::ptrdiff_t>(target));
    return out;
  }
  return pad_to(w, target, pad, rng);
}

Spectrogram mel_spectrogram(const Waveform& w, const PipelineConfig& cfg) {
  require(w.sample_rate == cfg.target_rate, ErrorKind::kInvalidConfig,
          "mel_spectrogram: waveform rate " + std::to_string(w.sample_rate) +
              " differs from configured " + std::to_string(cfg.target_rate));
  const SpectrogramConfig& sc = cfg.spectrogram;
  const int rate = w.sample_rate;
  const auto win = static_cast<std::size_t>(std::lround(sc.window_seconds * rate));
  const auto hop = static_cast<std::size_t>(std::lround(sc.hop_seconds * rate));
  require(win > 0 && hop > 0, ErrorKind::kInvalidConfig, "window/hop shorter than one sample");
  int fft_size = sc.fft_size;
  while (static_cast<std::size_t>(fft_size) < win) fft_size *= 2;
  const int n_bins = fft_size / 2 + 1;

  const auto n_mel = static_cast<std::size_t>(sc.mel_bins);
  const auto n_frames = static_cast<std::size_t>(sc.frames);
  const double floor_value = std::log(sc.energy_floor);

  Spectrogram out(n_mel, n_frames, static_cast<float>(floor_value));
  out.config = sc;
  out.config.fft_size = fft_size;
  if (out.config.mel_high_hz <= 0.0) out.config.mel_high_hz = rate / 2.0;

  std::size_t available = 0;
  if (w.size() >= win) available = 1 + (w.size() - win) / hop;
  else if (!w.empty()) available = 1;
  available = std::min(available, n_frames);
  if (available == 0) return out;

  const auto fb = mel_filterbank(sc, rate, fft_size);
  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i) {
    window[i] = win > 1 ? 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / (win - 1)) : 1.0;
  }

  const fftw_plan plan = r2c_plan(fft_size);
  std::unique_ptr<double, FftwDeleter> frame(fftw_alloc_real(static_cast<std::size_t>(fft_size)));
  std::unique_ptr<fftw_complex, FftwDeleter> spec(fftw_alloc_complex(static_cast<std::size_t>(n_bins)));
  std::vector<double> power(static_cast<std::size_t>(n_bins));

  for (std::size_t f = 0; f < available; ++f) {
    const std::size_t start = f * hop;
    double* buf = frame.get();
    std::fill(buf, buf + fft_size, 0.0);
    for (std::size_t i = 0; i < win && start + i < w.size(); ++i) {
      buf[i] = w.samples[start + i] * window[i];
    }
    fftw_execute_dft_r2c(plan, buf, spec.get());
    for (int k = 0; k < n_bins; ++k) {
      const double re = spec.get()[k][0], im = spec.get()[k][1];
      power[static_cast<std::size_t>(k)] = re * re + im * im;
    }
    for (std::size_t m = 0; m < n_mel; ++m) {
      const double* row = &fb[m * static_cast<std::size_t>(n_bins)];
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += row[k] * power[static_cast<std::size_t>(k)];
      out.at(m, f) = static_cast<float>(std::log(std::max(e, sc.energy_floor)));
    }
  }
  return out;
}

Spectrogram normalize_spectrogram(const Spectrogram& s, double mean, double std) {
  require(std > 0.0, ErrorKind::kInvalidConfig, "normalize_spectrogram: std must be positive");
  Spectrogram out = s;
  for (float& v : out.values()) v = static_cast<float>((static_cast<double>(v) - mean) / std);
  return out;
}

Preprocessed preprocess(const Waveform& w, const PipelineConfig& cfg, Rng& rng) {
  validate(cfg);
  validate(w);
  Waveform audio = resample(w, cfg.target_rate);
  audio = bandpass(audio, cfg.band_low, cfg.band_high);
  audio = fit_length(audio, cfg.clip_seconds, cfg.pad, rng);
  Spectrogram spec = mel_spectrogram(audio, cfg);
  spec = normalize_spectrogram(spec, cfg.norm_mean, cfg.norm_std);
  return {std::move(audio), std::move(spec)};
}

}  // namespace lungmix
