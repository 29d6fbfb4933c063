#include "imc/harness/sweep.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "imc/common/defaults.hpp"
#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/common/rng.hpp"
#include "imc/pdc/synthetic.hpp"
#include "imc/sms/mock.hpp"
#include "imc/textnoise/textnoise.hpp"
#include "json.hpp"

namespace imc::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (fs::path(base) / path).string();
}

template <class T>
T get_or(const json& cfg, const char* name, T fallback) {
  const auto it = cfg.find(name);
  if (it == cfg.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, std::string("sweep config: field '") + name + "' has the wrong type");
  }
}

std::vector<std::size_t> grid(const json& cfg, const char* name) {
  const auto values = get_or<std::vector<std::size_t>>(cfg, name, {});
  require(!values.empty(), std::string("sweep config: '") + name + "' must list at least one grid value");
  for (auto v : values) require(v >= 1, std::string("sweep config: '") + name + "' values must be at least 1");
  return values;
}

SweepResult prototypes_sweep(const json& cfg) {
  pdc::BlobConfig blobs;
  blobs.layers = get_or<std::size_t>(cfg, "layers", 3);
  blobs.dim = get_or<std::size_t>(cfg, "dim", 16);
  blobs.sigma = get_or<double>(cfg, "sigma", 0.5);
  blobs.spacing = get_or<double>(cfg, "spacing", 5.0);
  blobs.modes = get_or<std::size_t>(cfg, "modes", 4);
  blobs.seed = get_or<std::uint64_t>(cfg, "seed", 0);
  const pdc::BlobBenchmark bench(blobs);
  const auto training = bench.training_set(get_or<std::size_t>(cfg, "train_per_key", defaults::kPoolSamples), 0);
  const auto heldout = bench.heldout_set(get_or<std::size_t>(cfg, "heldout", 200), 1);
  const auto pool_seed = get_or<std::uint64_t>(cfg, "pool_seed", 1);

  SweepResult r{"prototypes", {"accuracy"}, {}};
  for (auto k : grid(cfg, "k")) {
    const auto pool = pdc::build_pool(training, k, pool_seed);
    r.rows.push_back({"K=" + std::to_string(k), {{"accuracy", 100.0 * pdc::classification_accuracy(heldout, pool)}}});
  }
  return r;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(resources::read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

SweepResult rounds_sweep(const json& cfg, const std::string& base) {
  const auto questions_path = get_or<std::string>(cfg, "questions", "");
  require(!questions_path.empty(), "sweep config: 'questions' (one clean question per line) is required");
  const auto questions = read_lines(resolve(base, questions_path));
  require(!questions.empty(), "sweep config: the question file is empty");
  const auto dict_path = get_or<std::string>(cfg, "dictionary", "");
  auto dict = dict_path.empty() ? sms::Dictionary::builtin() : sms::Dictionary::load(resolve(base, dict_path));
  const auto kind = textnoise::parse_text_kind(get_or<std::string>(cfg, "text_kind", "swap"));
  const auto rate = get_or<double>(cfg, "rate", defaults::kTextCorruptionRate);
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 0);
  sms::StochasticOracleBackend backend(std::move(dict), get_or<double>(cfg, "miss_rate", 0.5),
                                       textnoise::DistractorPool::builtin().sentences());

  sms::LoopConfig loop;
  loop.k = get_or<std::size_t>(cfg, "k", defaults::kMicroLoops);
  loop.max_micro_iters = get_or<std::size_t>(cfg, "max_micro_iters", defaults::kMaxMicroIters);
  loop.t0 = get_or<double>(cfg, "t0", defaults::kInitialTemperature);

  SweepResult r{"rounds", {"exact", "rouge1", "bleu", "recall", "calls"}, {}};
  for (auto n : grid(cfg, "n")) {
    loop.n = n;
    double exact = 0, rouge = 0, bleu_sum = 0, recall = 0, calls = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const auto& clean = questions[i];
      const auto noisy = textnoise::corrupt_text(clean, {kind, rate, derive_key({seed, i})}).text;
      const auto out = sms::denoise(noisy, std::nullopt, backend, loop, derive_key({seed, i, 1}));
      const auto score = rouge1(out.final_text, clean);
      exact += out.final_text == clean ? 1.0 : 0.0;
      rouge += score.f1;
      recall += score.recall;
      bleu_sum += bleu(out.final_text, clean);
      calls += static_cast<double>(out.trace.call_count());
    }
    const double m = static_cast<double>(questions.size());
    r.rows.push_back({"n=" + std::to_string(n),
                      {{"exact", 100 * exact / m},
                       {"rouge1", 100 * rouge / m},
                       {"bleu", 100 * bleu_sum / m},
                       {"recall", 100 * recall / m},
                       {"calls", calls / m}}});
  }
  return r;
}

SweepResult eval_sweep(const json& cfg, const std::string& base) {
  const auto it = cfg.find("points");
  require(it != cfg.end() && it->is_array() && !it->empty(), "sweep config: 'points' must be a non-empty list");
  SweepResult r{"eval", {"accuracy", "rouge1", "bleu", "recall"}, {}};
  for (const auto& p : *it) {
    const auto label = get_or<std::string>(p, "label", "");
    require(!label.empty(), "sweep config: every point needs a 'label'");
    const auto dataset = load_dataset(resolve(base, get_or<std::string>(p, "dataset", "")));
    const auto predictions = load_predictions(resolve(base, get_or<std::string>(p, "predictions", "")));
    const auto report = evaluate(predictions, dataset);
    r.rows.push_back({label,
                      {{"accuracy", report.scores.accuracy},
                       {"rouge1", report.scores.rouge1},
                       {"bleu", report.scores.bleu},
                       {"recall", report.scores.recall}}});
  }
  return r;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

SweepResult run_sweep(const std::string& config_json, const std::string& base_dir) {
  json cfg;
  try {
    cfg = json::parse(config_json);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, std::string("sweep config is not valid JSON: ") + e.what());
  }
  require(cfg.is_object(), "sweep config must be a JSON object");
  const auto kind = get_or<std::string>(cfg, "kind", "");
  if (kind == "prototypes") return prototypes_sweep(cfg);
  if (kind == "rounds") return rounds_sweep(cfg, base_dir);
  if (kind == "eval") return eval_sweep(cfg, base_dir);
  fail(ErrorCode::invalid_input, "sweep config: kind must be prototypes, rounds or eval, got '" + kind + "'");
}

SweepResult run_sweep_file(const std::string& path) {
  return run_sweep(resources::read_file(path), fs::path(path).parent_path().string());
}

std::string format_table(const SweepResult& result) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"point"};
  header.insert(header.end(), result.columns.begin(), result.columns.end());
  cells.push_back(header);
  for (const auto& row : result.rows) {
    std::vector<std::string> line{row.point};
    for (const auto& [name, value] : row.metrics) line.push_back(cell(value));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      const auto pad = std::string(width[c] - line[c].size(), ' ');
      // Labels left-aligned, numbers right-aligned.
      out += c == 0 ? line[c] + pad : "  " + pad + line[c];
    }
    out += "\n";
  }
  return out;
}

std::string dump_sweep(const SweepResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json metrics = json::object();
    for (const auto& [name, value] : row.metrics) metrics[name] = value ? json(*value) : json(nullptr);
    rows.push_back({{"point", row.point}, {"metrics", metrics}});
  }
  return json{{"format", "imc-sweep"}, {"version", 1}, {"kind", result.kind}, {"columns", result.columns},
              {"rows", rows}}
             .dump(1) +
         "\n";
}

}  // namespace imc::harness
