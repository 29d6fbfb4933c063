#include "imc/harness/dataset.hpp"

#include <fstream>
#include <set>

#include "imc/common/error.hpp"
#include "json.hpp"

namespace imc::harness {

using nlohmann::json;

namespace {

// Calls body(record, where) for every non-blank line.
template <class Body>
void for_each_record(std::istream& in, const std::string& source, Body&& body) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      fail(ErrorCode::parse_error, where + ": not valid JSON");
    }
    if (!rec.is_object()) fail(ErrorCode::parse_error, where + ": expected a JSON object");
    body(rec, where);
  }
}

std::string text_field(const json& rec, const char* name, const std::string& where) {
  const auto it = rec.find(name);
  if (it == rec.end() || it->is_null()) fail(ErrorCode::parse_error, where + ": missing field '" + name + "'");
  if (!it->is_string()) fail(ErrorCode::parse_error, where + ": field '" + name + "' must be a string");
  return it->get<std::string>();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return in;
}

}  // namespace

std::string_view to_string(QuestionType t) { return t == QuestionType::open ? "open" : "closed"; }

std::optional<QuestionType> parse_question_type(std::string_view s) {
  if (s == "open") return QuestionType::open;
  if (s == "closed") return QuestionType::closed;
  return std::nullopt;
}

std::vector<VqaSample> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<VqaSample> out;
  std::set<std::string> seen;
  for_each_record(in, source, [&](const json& rec, const std::string& where) {
    VqaSample s;
    s.id = text_field(rec, "id", where);
    s.image_path = text_field(rec, "image_path", where);
    s.question = text_field(rec, "question", where);
    s.answer = text_field(rec, "answer", where);
    const auto qtype = text_field(rec, "qtype", where);
    const auto modality = text_field(rec, "modality", where);
    if (s.id.empty()) fail(ErrorCode::parse_error, where + ": field 'id' is empty");
    if (s.answer.empty()) fail(ErrorCode::parse_error, where + ": field 'answer' is empty");
    const auto t = parse_question_type(qtype);
    if (!t) fail(ErrorCode::parse_error, where + ": field 'qtype' must be open or closed, got '" + qtype + "'");
    const auto m = parse_modality(modality);
    if (!m) fail(ErrorCode::parse_error, where + ": field 'modality' must be CT, MRI or X-ray, got '" + modality + "'");
    s.qtype = *t;
    s.modality = *m;
    if (!seen.insert(s.id).second) fail(ErrorCode::parse_error, where + ": duplicate id '" + s.id + "'");
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<VqaSample> load_dataset(const std::string& path) {
  auto in = open_input(path);
  return parse_dataset(in, path);
}

std::string dump_dataset(const std::vector<VqaSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    const json rec = {{"id", s.id},
                      {"image_path", s.image_path},
                      {"question", s.question},
                      {"answer", s.answer},
                      {"qtype", std::string(to_string(s.qtype))},
                      {"modality", std::string(to_string(s.modality))}};
    out += rec.dump() + "\n";
  }
  return out;
}

void save_dataset(const std::vector<VqaSample>& samples, const std::string& path) {
  write_text_file(path, dump_dataset(samples));
}

std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source) {
  std::vector<Prediction> out;
  for_each_record(in, source, [&](const json& rec, const std::string& where) {
    out.push_back({text_field(rec, "id", where), text_field(rec, "prediction", where)});
  });
  return out;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  auto in = open_input(path);
  return parse_predictions(in, path);
}

std::string dump_predictions(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) out += json{{"id", p.id}, {"prediction", p.prediction}}.dump() + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

}  // namespace imc::harness
