#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lungmix/audio_types.hpp"
#include "lungmix/dataset_io.hpp"
#include "lungmix/label_algebra.hpp"

namespace lungmix {

struct SynthSpec {
  UnifiedLabel cls = UnifiedLabel::kNormal;
  double duration_s = 9.0;
  int sample_rate = 16000;
  int n_events = 3;               // per abnormal component
  double burst_ms = 10.0;         // crackle burst length
  double crackle_amplitude = 0.2;
  double wheeze_hz = 400.0;       // must lie in [100, 1000]
  double wheeze_amplitude = 0.1;
  double wheeze_seconds = 0.4;
  double noise_floor = 0.02;      // peak amplitude of the background noise
  std::uint64_t seed = 0;
  std::string id;
  Split split = Split::kTrain;
};

void validate(const SynthSpec& spec);

struct SynthRecord {
  Waveform audio;
  RecordManifest manifest;  // audio_path is "<id>.wav"
};

/// Background: lowpass-shaped uniform noise. Crackle: exponentially decaying
/// noise bursts. Wheeze: tone segments with raised-cosine edges. Both: the two
/// superposed. The manifest lists every generated event interval.
SynthRecord synth(const SynthSpec& spec);

/// `per_class` records of each of the four classes, seeds derived from `seed`.
std::vector<SynthRecord> synth_corpus(const SynthSpec& base, std::size_t per_class,
                                      std::uint64_t seed);

}  // namespace lungmix
