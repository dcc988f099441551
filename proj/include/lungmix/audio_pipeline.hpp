#pragma once

#include <cstdint>

#include "lungmix/audio_types.hpp"
#include "lungmix/rng.hpp"

namespace lungmix {

/// Common AudioSet log-mel statistics used by spectrogram transformers.
inline constexpr double kAudioSetMean = -4.2677393;
inline constexpr double kAudioSetStd = 4.5689974;

struct PadMode {
  enum class Kind { kZeros, kNoise };
  Kind kind = Kind::kNoise;
  double eps = 1e-4;  // peak amplitude of noise padding

  static PadMode zeros() { return {Kind::kZeros, 0.0}; }
  static PadMode noise(double eps = 1e-4) { return {Kind::kNoise, eps}; }
};

struct PipelineConfig {
  int target_rate = 16000;
  double band_low = 50.0;
  double band_high = 1500.0;
  double clip_seconds = 9.0;
  double norm_mean = kAudioSetMean;
  double norm_std = kAudioSetStd;
  PadMode pad = PadMode::noise();
  SpectrogramConfig spectrogram;
};

void validate(const PipelineConfig& cfg);

/// Windowed-sinc polyphase rate conversion. Identical rates pass through.
Waveform resample(const Waveform& w, int target_rate);

/// Zero-phase Butterworth bandpass (order 4 per band edge, applied forward and
/// backward). Output has the input's length and rate.
Waveform bandpass(const Waveform& w, double low_hz, double high_hz);

/// Pads or truncates to round(clip_seconds * rate) samples. Truncation keeps
/// the leading segment. Noise padding draws uniform values in [-eps, eps].
Waveform fit_length(const Waveform& w, double clip_seconds, PadMode pad, Rng& rng);

/// Pads `w` at the end to exactly `length` samples (never truncates).
Waveform pad_to(const Waveform& w, std::size_t length, PadMode pad, Rng& rng);

/// Log-mel spectrogram of shape (mel_bins, frames). Frames past the end of the
/// signal hold log(energy_floor), the value a silent frame produces.
Spectrogram mel_spectrogram(const Waveform& w, const PipelineConfig& cfg);

/// Elementwise (x - mean) / std.
Spectrogram normalize_spectrogram(const Spectrogram& s, double mean, double std);

struct Preprocessed {
  Waveform audio;
  Spectrogram spectrogram;
};

/// resample -> bandpass -> fit_length -> mel_spectrogram -> normalize.
Preprocessed preprocess(const Waveform& w, const PipelineConfig& cfg, Rng& rng);

}  // namespace lungmix
