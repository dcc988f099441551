#include "lungmix/rng.hpp"

#include <boost/random/beta_distribution.hpp>
#include <limits>

#include "lungmix/error.hpp"

namespace lungmix {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig: return "invalid_config";
    case ErrorKind::kEmptyAudio: return "empty_audio";
    case ErrorKind::kShapeMismatch: return "shape_mismatch";
    case ErrorKind::kRateMismatch: return "rate_mismatch";
    case ErrorKind::kSchemaMismatch: return "schema_mismatch";
    case ErrorKind::kNumericalError: return "numerical_error";
    case ErrorKind::kUnknownLabel: return "unknown_label";
    case ErrorKind::kParseError: return "parse_error";
    case ErrorKind::kMissingAudio: return "missing_audio";
    case ErrorKind::kInsufficientData: return "insufficient_data";
    case ErrorKind::kIoError: return "io_error";
  }
  return "unknown";
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  require(n > 0, ErrorKind::kInvalidConfig, "Rng::below requires n > 0");
  const std::uint64_t bound = n;
  // Reject the partial top bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

double Rng::beta(double alpha, double beta) {
  boost::random::beta_distribution<double> dist(alpha, beta);
  return dist(engine_);
}

}  // namespace lungmix
