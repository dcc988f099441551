#pragma once

#include <filesystem>

#include "lungmix/audio_types.hpp"

namespace lungmix {

/// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM. Samples are clipped to [-1, 1) before quantization.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Flat binary: two little-endian uint32 (mel_bins, frames), then row-major
/// little-endian float32 values.
void write_spectrogram_bin(const std::filesystem::path& path, const Spectrogram& s);
Spectrogram read_spectrogram_bin(const std::filesystem::path& path);

/// One line per mel bin, comma-separated frame values.
void write_spectrogram_csv(const std::filesystem::path& path, const Spectrogram& s);

}  // namespace lungmix
