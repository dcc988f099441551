#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lungmix {

/// Multi-hot vector over the abnormal classes of a schema. All-zero is normal.
struct LabelVector {
  std::uint32_t bits = 0;
  std::uint32_t width = 0;  // number of abnormal classes (n - 1)

  bool is_normal() const { return bits == 0; }
  bool operator==(const LabelVector&) const = default;
};

/// n sound classes: class 0 is normal, the remaining n - 1 are abnormal and
/// every subset of them is its own category (label powerset).
class LabelSchema {
 public:
  explicit LabelSchema(std::vector<std::string> abnormal_names);

  /// normal / crackle / wheeze / both.
  static const LabelSchema& four_class();

  std::size_t n_classes() const { return abnormal_names_.size() + 1; }
  std::uint32_t width() const { return static_cast<std::uint32_t>(abnormal_names_.size()); }
  std::size_t category_count() const { return std::size_t{1} << abnormal_names_.size(); }
  const std::vector<std::string>& abnormal_names() const { return abnormal_names_; }

  LabelVector from_category(std::size_t id) const;
  std::string category_name(std::size_t id) const;
  /// Inverse of category_name. Throws UnknownLabel.
  LabelVector parse(std::string_view name) const;
  /// One-hot vector for abnormal class `index` (0-based among abnormal names).
  LabelVector abnormal(std::size_t index) const;
  LabelVector normal() const { return {0, width()}; }

  /// Every category in id order.
  std::vector<LabelVector> enumerate() const;

 private:
  std::vector<std::string> abnormal_names_;
};

/// Total categories for n classes: every subset of the n - 1 abnormal classes.
std::size_t powerset_category_count(std::size_t n_classes);
/// Categories holding two or more abnormal classes.
std::size_t mixed_category_count(std::size_t n_classes);

/// Bijection bitset -> category id; inverse is LabelSchema::from_category.
std::size_t powerset_category(const LabelVector& y);

/// Bitwise OR. Throws SchemaMismatch on differing widths.
LabelVector unify_or(const LabelVector& a, const LabelVector& b);

// Four-class system shared by the dataset and metrics modules.
enum class UnifiedLabel : std::uint8_t { kNormal = 0, kCrackle = 1, kWheeze = 2, kBoth = 3 };
inline constexpr std::size_t kUnifiedLabelCount = 4;

std::string_view to_string(UnifiedLabel label);
/// Throws UnknownLabel.
UnifiedLabel parse_unified_label(std::string_view name);
LabelVector to_label_vector(UnifiedLabel label);
/// Throws SchemaMismatch unless y belongs to the four-class schema.
UnifiedLabel to_unified(const LabelVector& y);

enum class InterpolationMode { kLinear, kNonlinear, kCombined, kPreserve };

std::string_view to_string(InterpolationMode mode);
/// Throws InvalidConfig.
InterpolationMode parse_interpolation_mode(std::string_view name);

struct SoftTarget {
  LabelVector y_a;
  LabelVector y_b;
  double lambda = 0.0;

  bool operator==(const SoftTarget&) const = default;
};

struct InterpolatedLabel {
  std::optional<LabelVector> hard;
  std::optional<SoftTarget> soft;
};

/// linear -> soft only; nonlinear -> OR label only; combined -> both;
/// preserve -> y_a only.
InterpolatedLabel interpolate_label(const LabelVector& y_a, const LabelVector& y_b,
                                    double lambda, InterpolationMode mode);

/// Softmax cross-entropy (natural log) of `logits` against category `target`.
double cross_entropy(std::span<const double> logits, std::size_t target);

/// lambda * CE(y_a) + (1 - lambda) * CE(y_b).
double mixup_loss(std::span<const double> logits, const LabelVector& y_a,
                  const LabelVector& y_b, double lambda);

struct LossWeights {
  double lambda1 = 1.0;
  /// Constant weight on the mixup term; when unset, the weight is rescaled so
  /// the mixup term equals the CE term numerically.
  std::optional<double> lambda2;
  InterpolationMode mode = InterpolationMode::kCombined;
};

struct LossBreakdown {
  double ce_term = 0.0;      // CE against y_a OR y_b
  double mixup_term = 0.0;   // unweighted mixup loss
  double lambda2 = 0.0;
  double total = 0.0;
};

LossBreakdown lungmix_loss(std::span<const double> logits, const LabelVector& y_a,
                           const LabelVector& y_b, double lambda, const LossWeights& weights);

}  // namespace lungmix
