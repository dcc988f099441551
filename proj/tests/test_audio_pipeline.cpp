#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "lungmix/audio_pipeline.hpp"
#include "lungmix/error.hpp"
#include "lungmix/wav_io.hpp"
#include "oracles.hpp"

using namespace lungmix;

namespace {

Waveform make(std::vector<double> x, int rate) { return Waveform{std::move(x), rate}; }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected lungmix::Error");
  return ErrorKind::kIoError;
}

double ratio(const std::vector<double>& out, const std::vector<double>& in) {
  // Central second avoids edge transients.
  const std::size_t skip = in.size() / 4;
  std::span<const double> o(out.data() + skip, in.size() - 2 * skip);
  std::span<const double> i(in.data() + skip, in.size() - 2 * skip);
  return oracle::rms(o) / oracle::rms(i);
}

}  // namespace

TEST_CASE("resample keeps a 440 Hz tone at 440 Hz") {
  const Waveform in = make(oracle::tone(440.0, 44100, 1.0), 44100);
  const Waveform out = resample(in, 16000);
  CHECK(out.sample_rate == 16000);
  CHECK(out.size() == 16000);
  const double peak = oracle::peak_frequency(out.samples, 16000, 300.0, 600.0, 0.5);
  CHECK(std::abs(peak - 440.0) <= 4.4);
}

TEST_CASE("resample upsampling keeps tone frequency and amplitude") {
  const Waveform in = make(oracle::tone(1000.0, 8000, 1.0), 8000);
  const Waveform out = resample(in, 16000);
  CHECK(out.size() == 16000);
  CHECK(std::abs(oracle::peak_frequency(out.samples, 16000, 800, 1200, 0.5) - 1000.0) <= 10.0);
  CHECK(ratio(out.samples, oracle::tone(1000.0, 16000, 1.0)) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("resample identity and length arithmetic") {
  const Waveform in = make(oracle::tone(300.0, 16000, 0.5), 16000);
  CHECK(resample(in, 16000) == in);

  const Waveform slow = make(std::vector<double>(9 * 4000, 0.1), 4000);
  CHECK(resample(slow, 16000).size() == 144000);
}

TEST_CASE("resample preserves duration within one output sample") {
  Rng rng(11);
  const int rates[] = {4000, 8000, 11025, 16000, 22050, 44100, 48000};
  for (int trial = 0; trial < 40; ++trial) {
    const int from = rates[rng.below(7)];
    const int to = rates[rng.below(7)];
    const std::size_t n = 1 + rng.below(5000);
    const Waveform out = resample(make(std::vector<double>(n, 0.0), from), to);
    CHECK(std::abs(out.duration_seconds() - static_cast<double>(n) / from) <= 1.0 / to + 1e-12);
  }
}

TEST_CASE("resample twice to the same rate equals resampling once") {
  const Waveform in = make(oracle::tone(523.0, 22050, 0.7), 22050);
  const Waveform once = resample(in, 16000);
  const Waveform twice = resample(once, 16000);
  CHECK(oracle::rms_diff(once.samples, twice.samples) <= 1e-6);
}

TEST_CASE("resample errors") {
  CHECK(kind_of([] { resample(Waveform{{}, 16000}, 8000); }) == ErrorKind::kEmptyAudio);
  CHECK(kind_of([] { resample(Waveform{{1.0}, 16000}, 0); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("bandpass passes 400 Hz and rejects the stop bands") {
  const auto pass = oracle::tone(400.0, 16000, 2.0);
  CHECK(ratio(bandpass(make(pass, 16000), 50, 1500).samples, pass) >= 0.71);

  const auto low = oracle::tone(25.0, 16000, 2.0);
  CHECK(ratio(bandpass(make(low, 16000), 50, 1500).samples, low) <= 0.1);

  const auto high = oracle::tone(3000.0, 16000, 2.0);
  CHECK(ratio(bandpass(make(high, 16000), 50, 1500).samples, high) <= 0.1);
}

TEST_CASE("bandpass passband stays within 3 dB across the band") {
  for (double hz : {100.0, 200.0, 800.0, 1200.0}) {
    const auto x = oracle::tone(hz, 16000, 2.0);
    const double r = ratio(bandpass(make(x, 16000), 50, 1500).samples, x);
    CAPTURE(hz);
    CHECK(r >= 0.708);
    CHECK(r <= 1.01);
  }
}

TEST_CASE("bandpass keeps length, rate and zero signals") {
  const Waveform zero = make(std::vector<double>(5000, 0.0), 16000);
  const Waveform out = bandpass(zero, 50, 1500);
  CHECK(out == zero);
}

TEST_CASE("bandpass is linear") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 1000 + rng.below(20000);
    std::vector<double> x(n), y(n), mixed(n);
    const double a = 2.0 * rng.uniform() - 1.0, b = 2.0 * rng.uniform() - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 2.0 * rng.uniform() - 1.0;
      y[i] = 2.0 * rng.uniform() - 1.0;
      mixed[i] = a * x[i] + b * y[i];
    }
    const auto fx = bandpass(make(x, 16000), 50, 1500).samples;
    const auto fy = bandpass(make(y, 16000), 50, 1500).samples;
    const auto fm = bandpass(make(mixed, 16000), 50, 1500).samples;
    std::vector<double> combo(n);
    for (std::size_t i = 0; i < n; ++i) combo[i] = a * fx[i] + b * fy[i];
    CHECK(oracle::rms_diff(fm, combo) <= 1e-6);
  }
}

TEST_CASE("bandpass rejects invalid band edges") {
  const Waveform w = make({0.0, 1.0, 0.0}, 16000);
  CHECK(kind_of([&] { bandpass(w, 0.0, 1500); }) == ErrorKind::kInvalidConfig);
  CHECK(kind_of([&] { bandpass(w, 1500, 50); }) == ErrorKind::kInvalidConfig);
  CHECK(kind_of([&] { bandpass(w, 50, 8000); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("fit_length cuts and pads") {
  Rng rng(1);
  std::vector<double> twelve(12 * 16000);
  for (std::size_t i = 0; i < twelve.size(); ++i) twelve[i] = std::sin(0.001 * i);
  const Waveform cut = fit_length(make(twelve, 16000), 9.0, PadMode::zeros(), rng);
  REQUIRE(cut.size() == 144000);
  CHECK(std::equal(cut.samples.begin(), cut.samples.end(), twelve.begin()));

  const Waveform nine = make(std::vector<double>(144000, 0.25), 16000);
  CHECK(fit_length(nine, 9.0, PadMode::noise(), rng) == nine);

  const Waveform four = make(std::vector<double>(64000, 0.5), 16000);
  const Waveform padded = fit_length(four, 9.0, PadMode::zeros(), rng);
  REQUIRE(padded.size() == 144000);
  CHECK(std::all_of(padded.samples.begin() + 64000, padded.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("fit_length noise padding stays below eps and is seeded") {
  const Waveform four = make(std::vector<double>(100, 0.5), 1000);
  Rng r1(9), r2(9);
  const Waveform a = fit_length(four, 1.0, PadMode::noise(1e-4), r1);
  const Waveform b = fit_length(four, 1.0, PadMode::noise(1e-4), r2);
  CHECK(a == b);
  bool nonzero = false;
  for (std::size_t i = 100; i < a.size(); ++i) {
    CHECK(std::abs(a.samples[i]) <= 1e-4);
    nonzero = nonzero || a.samples[i] != 0.0;
  }
  CHECK(nonzero);
}

TEST_CASE("fit_length output length is exact for random inputs") {
  Rng rng(3);
  const int rates[] = {8000, 16000, 22050, 44100};
  for (int trial = 0; trial < 1000; ++trial) {
    const int rate = rates[rng.below(4)];
    const std::size_t n = 1 + rng.below(3 * static_cast<std::size_t>(rate));
    const double seconds = 0.01 + 2.0 * rng.uniform();
    const Waveform out = fit_length(make(std::vector<double>(n, 0.1), rate), seconds, PadMode::noise(), rng);
    REQUIRE(out.size() == static_cast<std::size_t>(std::llround(seconds * rate)));
  }
}

TEST_CASE("mel_spectrogram shape, floor and determinism") {
  PipelineConfig cfg;
  Rng rng(4);
  std::vector<double> x(144000);
  for (auto& v : x) v = 0.1 * (2.0 * rng.uniform() - 1.0);
  const Waveform w = make(x, 16000);
  const Spectrogram s = mel_spectrogram(w, cfg);
  CHECK(s.mel_bins() == 128);
  CHECK(s.frames() == 1024);
  for (float v : s.values()) CHECK(std::isfinite(v));
  CHECK(s == mel_spectrogram(w, cfg));

  // 9 s at 25 ms / 10 ms gives 898 frames; the rest hold the silent-frame value.
  const float floor_value = static_cast<float>(std::log(cfg.spectrogram.energy_floor));
  CHECK(s.at(10, 897) != floor_value);
  for (std::size_t f = 898; f < 1024; ++f) CHECK(s.at(10, f) == floor_value);

  const Spectrogram silent = mel_spectrogram(make(std::vector<double>(144000, 0.0), 16000), cfg);
  for (float v : silent.values()) CHECK(v == floor_value);
}

TEST_CASE("mel_spectrogram energy lands in the right filter") {
  PipelineConfig cfg;
  const Spectrogram s = mel_spectrogram(make(oracle::tone(1000.0, 16000, 1.0), 16000), cfg);
  // HTK mel of 1000 Hz is 1000.0; filter centres are spaced mel(8000) / 129 apart.
  const double spacing = 2595.0 * std::log10(1.0 + 8000.0 / 700.0) / 129.0;
  const auto expected = static_cast<std::size_t>(std::lround(1000.0 / spacing)) - 1;
  std::size_t best = 0;
  for (std::size_t m = 1; m < 128; ++m) {
    if (s.at(m, 50) > s.at(best, 50)) best = m;
  }
  CHECK(best + 1 >= expected);
  CHECK(best <= expected + 1);
}

TEST_CASE("mel_spectrogram rejects a mismatched rate") {
  PipelineConfig cfg;
  CHECK(kind_of([&] { mel_spectrogram(make(std::vector<double>(1000, 0.0), 8000), cfg); }) ==
        ErrorKind::kInvalidConfig);
}

TEST_CASE("normalize_spectrogram arithmetic") {
  Spectrogram s(2, 2, 6.0f);
  CHECK(normalize_spectrogram(s, 2.0, 2.0).at(1, 1) == 2.0f);
  CHECK(normalize_spectrogram(s, 6.0, 3.0).at(0, 0) == 0.0f);
  s.at(0, 1) = -1.25f;
  CHECK(normalize_spectrogram(s, 0.0, 1.0) == s);
  CHECK(kind_of([&] { normalize_spectrogram(s, 0.0, 0.0); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("preprocess produces a 9 s clip and a 128x1024 spectrogram") {
  PipelineConfig cfg;
  const Waveform in = make(oracle::tone(440.0, 44100, 12.0, 0.3), 44100);
  Rng r1(2), r2(2);
  const Preprocessed a = preprocess(in, cfg, r1);
  const Preprocessed b = preprocess(in, cfg, r2);
  CHECK(a.audio.sample_rate == 16000);
  CHECK(a.audio.size() == 144000);
  CHECK(a.spectrogram.mel_bins() == 128);
  CHECK(a.spectrogram.frames() == 1024);
  CHECK(a.spectrogram == b.spectrogram);
  CHECK(a.audio == b.audio);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.band_high = 9000;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kInvalidConfig);
  cfg = {};
  cfg.norm_std = 0;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kInvalidConfig);
  cfg = {};
  cfg.clip_seconds = -1;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("wav round trip and spectrogram file layout") {
  const auto dir = oracle::scratch_dir("wav");
  Waveform w{{0.0, 0.5, -0.5, -1.0, 32767.0 / 32768.0, 1.0 / 32768.0}, 16000};
  write_wav(dir / "a.wav", w);
  CHECK(read_wav(dir / "a.wav") == w);

  // Hand-built 32-bit float file.
  std::string bytes = "RIFF";
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { bytes.push_back(static_cast<char>(v)); bytes.push_back(static_cast<char>(v >> 8)); };
  u32(36 + 8);
  bytes += "WAVEfmt ";
  u32(16); u16(3); u16(1); u32(8000); u32(32000); u16(4); u16(32);
  bytes += "data";
  u32(8);
  for (float f : {0.25f, -0.75f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  std::ofstream(dir / "f.wav", std::ios::binary) << bytes;
  const Waveform f = read_wav(dir / "f.wav");
  CHECK(f.sample_rate == 8000);
  CHECK(f.samples == std::vector<double>{0.25, -0.75});

  Spectrogram s(128, 1024, 1.5f);
  s.at(3, 7) = -2.0f;
  write_spectrogram_bin(dir / "s.f32", s);
  const std::string raw = oracle::read_bytes(dir / "s.f32");
  REQUIRE(raw.size() == 8 + 128 * 1024 * 4);
  CHECK(static_cast<unsigned char>(raw[0]) == 128);
  CHECK(raw[1] == 0);
  CHECK(static_cast<unsigned char>(raw[4]) == 0);
  CHECK(static_cast<unsigned char>(raw[5]) == 4);
  CHECK(read_spectrogram_bin(dir / "s.f32") == s);

  CHECK(kind_of([&] { read_wav(dir / "missing.wav"); }) == ErrorKind::kIoError);
  std::ofstream(dir / "junk.wav") << "not audio";
  CHECK(kind_of([&] { read_wav(dir / "junk.wav"); }) == ErrorKind::kParseError);
}
