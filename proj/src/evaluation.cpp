#include "lung/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lung/errors.hpp"

namespace lung {
namespace {

constexpr int kWidth = 14;  // longest row label ("Bronchiectasis", "weighted avg")

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

double round_half_up(double value, double scale) {
  // The epsilon keeps exact decimal midpoints (0.125 stored as 0.12499...)
  // rounding upward.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string padded(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : std::string(width - s.size(), ' ') + s;
}

std::string signed_metric(double delta) {
  const double magnitude = round_half_up(std::fabs(delta), 100.0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%.2f", delta < 0.0 && magnitude > 0.0 ? '-' : '+', magnitude);
  return buf;
}

nlohmann::json metrics_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1-score", m.f1}, {"support", m.support}};
}

ClassMetrics metrics_from(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1-score").get<double>(),
          j.at("support").get<std::uint64_t>()};
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) t += counts[c][c];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const {
  std::uint64_t s = 0;
  for (auto v : counts[t]) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t p) const {
  std::uint64_t s = 0;
  for (const auto& row : counts) s += row[p];
  return s;
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "true\\predicted";
  for (auto name : kClassNames) os << ',' << name;
  os << '\n';
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    os << kClassNames[t];
    for (auto v : counts[t]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size())
    throw LengthMismatch(std::to_string(truth.size()) + " true labels vs " + std::to_string(predicted.size()) +
                         " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= kNumClasses || predicted[i] >= kNumClasses)
      throw OutOfRangeLabel("label at position " + std::to_string(i) + " is outside 0.." +
                            std::to_string(kNumClasses - 1));
    ++cm.counts[truth[i]][predicted[i]];
  }
  return cm;
}

ClassificationReport report(const ConfusionMatrix& cm) {
  ClassificationReport r;
  r.total = cm.total();
  if (r.total == 0) throw EmptyEvaluation("confusion matrix has no entries");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = r.classes[c];
    m.support = cm.row_sum(c);
    m.precision = ratio(cm.counts[c][c], cm.column_sum(c));
    m.recall = ratio(cm.counts[c][c], m.support);
    m.f1 = harmonic(m.precision, m.recall);
  }
  r.accuracy = ratio(cm.trace(), r.total);
  for (const auto& m : r.classes) {
    const double w = static_cast<double>(m.support) / static_cast<double>(r.total);
    r.macro.precision += m.precision / kNumClasses;
    r.macro.recall += m.recall / kNumClasses;
    r.macro.f1 += m.f1 / kNumClasses;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  r.macro.support = r.weighted.support = r.total;
  return r;
}

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(value, 100.0));
  return buf;
}

std::string format_report(const ClassificationReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& label, const ClassMetrics& m) {
    os << padded(label, kWidth) << ' ' << ' ' << padded(format_metric(m.precision), 9) << ' '
       << padded(format_metric(m.recall), 9) << ' ' << padded(format_metric(m.f1), 9) << ' '
       << padded(std::to_string(m.support), 9) << '\n';
  };
  os << std::string(kWidth, ' ') << ' ' << ' ' << padded("precision", 9) << ' ' << padded("recall", 9) << ' '
     << padded("f1-score", 9) << ' ' << padded("support", 9) << "\n\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) row(std::string(kClassNames[c]), r.classes[c]);
  os << '\n';
  os << padded("accuracy", kWidth) << ' ' << ' ' << padded("", 9) << ' ' << padded("", 9) << ' '
     << padded(format_metric(r.accuracy), 9) << ' ' << padded(std::to_string(r.total), 9) << '\n';
  row("macro avg", r.macro);
  row("weighted avg", r.weighted);
  return os.str();
}

std::string format_comparison(const ClassificationReport& a, const ClassificationReport& b) {
  std::ostringstream os;
  os << std::string(kWidth, ' ') << ' ' << ' ' << padded("precision", 9) << ' ' << padded("recall", 9) << ' '
     << padded("f1-score", 9) << "\n\n";
  auto row = [&](const std::string& label, const ClassMetrics& x, const ClassMetrics& y) {
    os << padded(label, kWidth) << ' ' << ' ' << padded(signed_metric(y.precision - x.precision), 9) << ' '
       << padded(signed_metric(y.recall - x.recall), 9) << ' ' << padded(signed_metric(y.f1 - x.f1), 9) << '\n';
  };
  for (std::size_t c = 0; c < kNumClasses; ++c) row(std::string(kClassNames[c]), a.classes[c], b.classes[c]);
  os << '\n';
  os << padded("accuracy", kWidth) << ' ' << ' ' << padded("", 9) << ' ' << padded("", 9) << ' '
     << padded(signed_metric(b.accuracy - a.accuracy), 9) << '\n';
  row("macro avg", a.macro, b.macro);
  row("weighted avg", a.weighted, b.weighted);
  return os.str();
}

nlohmann::json ClassificationReport::to_json() const {
  nlohmann::json j;
  for (std::size_t c = 0; c < kNumClasses; ++c) j[std::string(kClassNames[c])] = metrics_json(classes[c]);
  j["accuracy"] = accuracy;
  j["macro avg"] = metrics_json(macro);
  j["weighted avg"] = metrics_json(weighted);
  j["total"] = total;
  return j;
}

ClassificationReport ClassificationReport::from_json(const nlohmann::json& j) {
  ClassificationReport r;
  try {
    for (std::size_t c = 0; c < kNumClasses; ++c) r.classes[c] = metrics_from(j.at(std::string(kClassNames[c])));
    r.accuracy = j.at("accuracy").get<double>();
    r.macro = metrics_from(j.at("macro avg"));
    r.weighted = metrics_from(j.at("weighted avg"));
    r.total = j.value("total", r.macro.support);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedReport(std::string("report JSON: ") + e.what());
  }
  return r;
}

ClassificationReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedReport(path.string() + ": " + e.what());
  }
  if (j.contains("confusion") && !j.contains("report")) {
    ConfusionMatrix cm;
    try {
      const auto rows = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
      if (rows.size() != kNumClasses) throw MalformedReport(path.string() + ": confusion must be 6x6");
      for (std::size_t t = 0; t < kNumClasses; ++t) {
        if (rows[t].size() != kNumClasses) throw MalformedReport(path.string() + ": confusion must be 6x6");
        for (std::size_t p = 0; p < kNumClasses; ++p) cm.counts[t][p] = rows[t][p];
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedReport(path.string() + ": " + e.what());
    }
    return report(cm);
  }
  return ClassificationReport::from_json(j.contains("report") ? j.at("report") : j);
}

}  // namespace lung
