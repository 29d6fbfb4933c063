#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imc/harness/dataset.hpp"
#include "imc/harness/metrics.hpp"

namespace imc::harness {

// Headline scores on a 0-100 scale. Accuracy covers closed rows, the other
// three cover open rows; a score is absent when its rows are.
struct Scores {
  std::optional<double> accuracy;
  std::optional<double> rouge1;
  std::optional<double> bleu;
  std::optional<double> recall;
};

struct EvalRow {
  std::string id;
  QuestionType qtype = QuestionType::open;
  std::string prediction;
  std::string reference;
  std::optional<bool> correct;  // closed rows
  RougeScore rouge;             // open rows
  double bleu = 0.0;            // open rows
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t closed = 0;
  std::size_t open = 0;
  std::size_t unpredicted = 0;  // dataset rows without a prediction
  Scores scores;
  std::optional<Scores> deltas;  // this run minus the baseline
  std::vector<EvalRow> rows;     // dataset order
};

// Every prediction id must exist in the dataset (invalid-input listing the
// unknown ids); duplicate prediction ids are invalid-input too. Rows follow
// dataset order, so the result does not depend on prediction order.
EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<VqaSample>& dataset,
                    const std::optional<EvalReport>& baseline = std::nullopt);

// Component-wise difference; absent when either side is.
Scores difference(const Scores& current, const Scores& baseline);

inline constexpr int kReportFormatVersion = 1;

std::string dump_report(const EvalReport& report);
EvalReport parse_report(const std::string& text, const std::string& source);
void save_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);

// Human-readable summary: counts, the four scores and deltas if present.
std::string format_report(const EvalReport& report);

}  // namespace imc::harness
