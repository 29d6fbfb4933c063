#include "imc/harness/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "json.hpp"

namespace imc::harness {

using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "imc-eval-report";

std::optional<double> mean_percent(double sum, std::size_t n) {
  if (n == 0) return std::nullopt;
  return 100.0 * sum / static_cast<double>(n);
}

std::optional<double> minus(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_number(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json scores_json(const Scores& s) {
  return {{"accuracy", opt(s.accuracy)}, {"rouge1", opt(s.rouge1)}, {"bleu", opt(s.bleu)}, {"recall", opt(s.recall)}};
}

Scores scores_from(const json& j) {
  return {opt_number(j, "accuracy"), opt_number(j, "rouge1"), opt_number(j, "bleu"), opt_number(j, "recall")};
}

std::string fixed(const std::optional<double>& v, bool sign = false) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, sign ? "%+.2f" : "%.2f", *v);
  return buf;
}

}  // namespace

Scores difference(const Scores& current, const Scores& baseline) {
  return {minus(current.accuracy, baseline.accuracy), minus(current.rouge1, baseline.rouge1),
          minus(current.bleu, baseline.bleu), minus(current.recall, baseline.recall)};
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<VqaSample>& dataset,
                    const std::optional<EvalReport>& baseline) {
  std::map<std::string, const Prediction*, std::less<>> by_id;
  std::string duplicates;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) duplicates += (duplicates.empty() ? "" : ", ") + p.id;
  require(duplicates.empty(), "predictions repeat ids: " + duplicates);

  std::map<std::string, bool, std::less<>> known;
  for (const auto& s : dataset) known[s.id] = true;
  std::string unknown;
  for (const auto& p : predictions)
    if (!known.count(p.id)) unknown += (unknown.empty() ? "" : ", ") + p.id;
  require(unknown.empty(), "prediction ids not in the dataset: " + unknown);

  EvalReport report;
  double correct = 0.0, rouge = 0.0, bleu_sum = 0.0, recall = 0.0;
  for (const auto& s : dataset) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      ++report.unpredicted;
      continue;
    }
    EvalRow row;
    row.id = s.id;
    row.qtype = s.qtype;
    row.prediction = it->second->prediction;
    row.reference = s.answer;
    if (s.qtype == QuestionType::closed) {
      row.correct = closed_match(row.prediction, row.reference);
      correct += *row.correct ? 1.0 : 0.0;
      ++report.closed;
    } else {
      row.rouge = rouge1(row.prediction, row.reference);
      row.bleu = bleu(row.prediction, row.reference);
      rouge += row.rouge.f1;
      recall += row.rouge.recall;
      bleu_sum += row.bleu;
      ++report.open;
    }
    report.rows.push_back(std::move(row));
  }
  report.total = report.rows.size();
  report.scores = {mean_percent(correct, report.closed), mean_percent(rouge, report.open),
                   mean_percent(bleu_sum, report.open), mean_percent(recall, report.open)};
  if (baseline) report.deltas = difference(report.scores, baseline->scores);
  return report;
}

std::string dump_report(const EvalReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"id", row.id}, {"qtype", std::string(to_string(row.qtype))}, {"prediction", row.prediction},
              {"reference", row.reference}};
    if (row.correct) {
      j["correct"] = *row.correct;
    } else {
      j["rouge1"] = {{"precision", row.rouge.precision}, {"recall", row.rouge.recall}, {"f1", row.rouge.f1}};
      j["bleu"] = row.bleu;
    }
    rows.push_back(std::move(j));
  }
  json doc = {{"format", kReportFormat},
              {"version", kReportFormatVersion},
              {"total", r.total},
              {"closed", r.closed},
              {"open", r.open},
              {"unpredicted", r.unpredicted},
              {"scores", scores_json(r.scores)},
              {"deltas", r.deltas ? scores_json(*r.deltas) : json(nullptr)},
              {"rows", std::move(rows)}};
  return doc.dump(1) + "\n";
}

EvalReport parse_report(const std::string& text, const std::string& source) {
  try {
    const auto doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kReportFormat)
      fail(ErrorCode::parse_error, source + ": not an evaluation report");
    if (doc.at("version").get<int>() != kReportFormatVersion)
      fail(ErrorCode::parse_error, source + ": report version " + std::to_string(doc.at("version").get<int>()) +
                                       " is not supported");
    EvalReport r;
    r.total = doc.at("total").get<std::size_t>();
    r.closed = doc.at("closed").get<std::size_t>();
    r.open = doc.at("open").get<std::size_t>();
    r.unpredicted = doc.value("unpredicted", std::size_t{0});
    r.scores = scores_from(doc.at("scores"));
    if (doc.contains("deltas") && !doc["deltas"].is_null()) r.deltas = scores_from(doc["deltas"]);
    for (const auto& j : doc.value("rows", json::array())) {
      EvalRow row;
      row.id = j.at("id").get<std::string>();
      const auto qtype = parse_question_type(j.at("qtype").get<std::string>());
      if (!qtype) fail(ErrorCode::parse_error, source + ": row '" + row.id + "' has an unknown qtype");
      row.qtype = *qtype;
      row.prediction = j.at("prediction").get<std::string>();
      row.reference = j.at("reference").get<std::string>();
      if (j.contains("correct")) {
        row.correct = j["correct"].get<bool>();
      } else {
        const auto& rg = j.at("rouge1");
        row.rouge = {rg.at("precision").get<double>(), rg.at("recall").get<double>(), rg.at("f1").get<double>()};
        row.bleu = j.at("bleu").get<double>();
      }
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, source + ": malformed evaluation report: " + e.what());
  }
}

void save_report(const EvalReport& report, const std::string& path) { write_text_file(path, dump_report(report)); }

EvalReport load_report(const std::string& path) { return parse_report(resources::read_file(path), path); }

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "samples   " << r.total << " (closed " << r.closed << ", open " << r.open << ")";
  if (r.unpredicted) out << ", " << r.unpredicted << " without prediction";
  out << "\n";
  const std::pair<const char*, std::optional<double> Scores::*> fields[] = {
      {"accuracy", &Scores::accuracy}, {"rouge1", &Scores::rouge1}, {"bleu", &Scores::bleu}, {"recall", &Scores::recall}};
  for (const auto& [name, member] : fields) {
    out << std::string(name) + std::string(10 - std::string(name).size(), ' ') << fixed(r.scores.*member);
    if (r.deltas) out << "  (" << fixed((*r.deltas).*member, true) << ")";
    out << "\n";
  }
  return out.str();
}

}  // namespace imc::harness
