#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library paths they check.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<double> tone(double hz, int rate, double seconds, double amplitude = 0.5) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return x;
}

inline double rms(std::span<const double> x) {
  long double s = 0;
  for (double v : x) s += static_cast<long double>(v) * v;
  return x.empty() ? 0.0 : static_cast<double>(std::sqrt(s / x.size()));
}

inline double rms_diff(std::span<const double> a, std::span<const double> b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    s += d * d;
  }
  return a.empty() ? 0.0 : static_cast<double>(std::sqrt(s / a.size()));
}

/// Direct DFT magnitude at an arbitrary frequency.
inline double dft_magnitude(std::span<const double> x, int rate, double hz) {
  long double re = 0, im = 0;
  const long double w = 2.0L * std::numbers::pi_v<long double> * hz / rate;
  for (std::size_t i = 0; i < x.size(); ++i) {
    re += x[i] * std::cos(w * i);
    im -= x[i] * std::sin(w * i);
  }
  return static_cast<double>(std::sqrt(re * re + im * im));
}

/// Frequency of the largest DFT magnitude on a grid [lo, hi] with the given step.
inline double peak_frequency(std::span<const double> x, int rate, double lo, double hi, double step) {
  double best_hz = lo, best = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double m = dft_magnitude(x, rate, f);
    if (m > best) {
      best = m;
      best_hz = f;
    }
  }
  return best_hz;
}

/// Loudness outliers from one pass of running sums (population variance).
inline std::vector<std::uint8_t> loudness_mask(std::span<const double> x) {
  long double sum = 0, sumsq = 0;
  for (double v : x) {
    sum += v;
    sumsq += static_cast<long double>(v) * v;
  }
  const long double n = x.size();
  const long double mean = sum / n;
  long double var = sumsq / n - mean * mean;
  if (var < 0) var = 0;
  const long double threshold = std::fabs(mean + 2 * std::sqrt(var));
  std::vector<std::uint8_t> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) m[i] = std::fabs(static_cast<long double>(x[i])) > threshold;
  return m;
}

/// Number of non-empty subsets of `width` items with at least `min_size` members.
inline std::size_t count_subsets(unsigned width, unsigned min_size) {
  std::size_t count = 0;
  std::vector<int> chosen;
  auto rec = [&](auto&& self, unsigned next) -> void {
    if (next == width) {
      if (chosen.size() >= min_size) ++count;
      return;
    }
    self(self, next + 1);
    chosen.push_back(static_cast<int>(next));
    self(self, next + 1);
    chosen.pop_back();
  };
  rec(rec, 0);
  return count;
}

inline std::string sha256_bytes(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Digest over every regular file in `dir` (sorted by name), excluding `skip`.
inline std::string sha256_dir(const std::filesystem::path& dir, const std::string& skip = "run_config.ini") {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != skip) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += f.filename().string();
    all += sha256_bytes(read_bytes(f));
  }
  return sha256_bytes(all);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lungmix_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
