#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "lung/dataset.hpp"

namespace lung {

/// counts[t][p]: rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t t) const;
  std::uint64_t column_sum(std::size_t p) const;

  std::string to_csv() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws LengthMismatch or OutOfRangeLabel.
ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct ClassificationReport {
  std::array<ClassMetrics, kNumClasses> classes{};
  double accuracy = 0.0;
  ClassMetrics macro;     // support = total
  ClassMetrics weighted;  // support = total
  std::uint64_t total = 0;

  nlohmann::json to_json() const;
  static ClassificationReport from_json(const nlohmann::json& j);
  bool operator==(const ClassificationReport&) const = default;
};

/// Zero divisions yield 0.0. Throws EmptyEvaluation when the matrix is empty.
ClassificationReport report(const ConfusionMatrix& cm);

/// Half-up rounding to two decimals, as printed in the table.
std::string format_metric(double value);

/// Fixed-width table: six class rows, accuracy, macro avg, weighted avg.
std::string format_report(const ClassificationReport& r);

/// Per-class (b - a) deltas of precision, recall and f1 plus accuracy, as text.
std::string format_comparison(const ClassificationReport& a, const ClassificationReport& b);

/// Loads either a bare report JSON or an evaluation output with a "report" key.
ClassificationReport load_report(const std::filesystem::path& path);

}  // namespace lung
