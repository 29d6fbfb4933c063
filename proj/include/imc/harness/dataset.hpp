#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imc/common/taxonomy.hpp"

namespace imc::harness {

enum class QuestionType { open, closed };

std::string_view to_string(QuestionType t);
std::optional<QuestionType> parse_question_type(std::string_view s);

struct VqaSample {
  std::string id;
  std::string image_path;  // relative paths resolve against the dataset file's directory
  std::string question;
  std::string answer;
  QuestionType qtype = QuestionType::open;
  Modality modality = Modality::ct;
};

struct Prediction {
  std::string id;
  std::string prediction;
};

// Line-delimited JSON, one object per line; blank lines are skipped.
// Errors are parse-error and name the source, line and field. Ids must be
// unique within a file.
std::vector<VqaSample> parse_dataset(std::istream& in, const std::string& source);
std::vector<VqaSample> load_dataset(const std::string& path);
std::string dump_dataset(const std::vector<VqaSample>& samples);
void save_dataset(const std::vector<VqaSample>& samples, const std::string& path);

std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source);
std::vector<Prediction> load_predictions(const std::string& path);
std::string dump_predictions(const std::vector<Prediction>& predictions);

// Shared by the harness writers.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace imc::harness
