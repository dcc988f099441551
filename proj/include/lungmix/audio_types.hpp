#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lungmix {

/// Mono PCM signal. Amplitudes are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }

  bool operator==(const Waveform&) const = default;
};

/// Throws InvalidConfig / NumericalError when the type invariants do not hold.
void validate(const Waveform& w);

enum class MelScale { kHtk, kSlaney };

/// Framing and filterbank parameters echoed alongside every spectrogram.
struct SpectrogramConfig {
  double window_seconds = 0.025;
  double hop_seconds = 0.010;
  int fft_size = 1024;
  int mel_bins = 128;
  int frames = 1024;
  double mel_low_hz = 0.0;
  double mel_high_hz = 0.0;  // 0 means Nyquist
  MelScale scale = MelScale::kHtk;
  double energy_floor = 1e-10;

  bool operator==(const SpectrogramConfig&) const = default;
};

/// Row-major (mel_bins x frames) log-mel matrix.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t mel_bins, std::size_t frames, float fill = 0.0f)
      : mel_bins_(mel_bins), frames_(frames), bins_(mel_bins * frames, fill) {}

  std::size_t mel_bins() const { return mel_bins_; }
  std::size_t frames() const { return frames_; }

  float& at(std::size_t mel, std::size_t frame) { return bins_[mel * frames_ + frame]; }
  float at(std::size_t mel, std::size_t frame) const { return bins_[mel * frames_ + frame]; }

  std::span<float> values() { return bins_; }
  std::span<const float> values() const { return bins_; }

  SpectrogramConfig config;

  bool operator==(const Spectrogram& other) const {
    return mel_bins_ == other.mel_bins_ && frames_ == other.frames_ && bins_ == other.bins_;
  }

 private:
  std::size_t mel_bins_ = 0;
  std::size_t frames_ = 0;
  std::vector<float> bins_;
};

}  // namespace lungmix
