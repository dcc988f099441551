#include "lungmix/wav_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "lungmix/error.hpp"

namespace lungmix {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIoError, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIoError, "write failed: " + path.string());
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorKind::kParseError, where + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) fail(ErrorKind::kParseError, where + ": truncated fmt chunk");
      format = get_u16(chunk + 8);
      channels = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = get_u16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }

  if (format == 0) fail(ErrorKind::kParseError, where + ": missing fmt chunk");
  if (data == nullptr) fail(ErrorKind::kParseError, where + ": missing data chunk");
  if (channels != 1) fail(ErrorKind::kParseError, where + ": only mono audio is supported");
  if (rate == 0) fail(ErrorKind::kParseError, where + ": zero sample rate");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_size / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      w.samples[i] = static_cast<std::int16_t>(get_u16(data + 2 * i)) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_size / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float f = std::bit_cast<float>(get_u32(data + 4 * i));
      if (!std::isfinite(f)) fail(ErrorKind::kParseError, where + ": non-finite sample");
      w.samples[i] = f;
    }
  } else {
    fail(ErrorKind::kParseError,
         where + ": unsupported encoding (need 16-bit PCM or 32-bit float)");
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  require(w.sample_rate > 0, ErrorKind::kInvalidConfig, "write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double x : w.samples) {
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  write_file(path, out);
}

void write_spectrogram_bin(const std::filesystem::path& path, const Spectrogram& s) {
  std::string out;
  out.reserve(8 + s.values().size() * 4);
  put_u32(out, static_cast<std::uint32_t>(s.mel_bins()));
  put_u32(out, static_cast<std::uint32_t>(s.frames()));
  for (float v : s.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  write_file(path, out);
}

Spectrogram read_spectrogram_bin(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 8) fail(ErrorKind::kParseError, path.string() + ": truncated header");
  const std::size_t mel = get_u32(bytes.data());
  const std::size_t frames = get_u32(bytes.data() + 4);
  if (bytes.size() != 8 + mel * frames * 4) {
    fail(ErrorKind::kParseError, path.string() + ": size does not match header");
  }
  Spectrogram s(mel, frames);
  auto values = s.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes.data() + 8 + 4 * i));
  }
  return s;
}

void write_spectrogram_csv(const std::filesystem::path& path, const Spectrogram& s) {
  std::string out;
  std::array<char, 32> buf{};
  for (std::size_t m = 0; m < s.mel_bins(); ++m) {
    for (std::size_t f = 0; f < s.frames(); ++f) {
      if (f) out.push_back(',');
      const int n = std::snprintf(buf.data(), buf.size(), "%.9g", static_cast<double>(s.at(m, f)));
      out.append(buf.data(), static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace lungmix
