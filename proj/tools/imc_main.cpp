// Command-line front end: one binary, one subcommand per operation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "imc/common/defaults.hpp"
#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/common/rng.hpp"
#include "imc/harness/build.hpp"
#include "imc/harness/evaluate.hpp"
#include "imc/harness/sweep.hpp"
#include "imc/imgnoise/image_io.hpp"
#include "imc/imgnoise/simulators.hpp"
#include "imc/pdc/io.hpp"
#include "imc/sms/http_backend.hpp"
#include "imc/sms/mock.hpp"
#include "imc/sms/trace_io.hpp"
#include "imc/textnoise/textnoise.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace imc;

namespace {

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> read_lines_from(const std::string& path) {
  if (path.empty() || path == "-") return read_lines(std::cin);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_lines(in);
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    harness::write_text_file(path, text);
  }
}

ArtifactKind artifact_kind(const std::string& name) {
  const auto k = parse_artifact_kind(name);
  require(k.has_value(), "unknown image kind '" + name + "'");
  return *k;
}

// ---- imgnoise / textnoise ---------------------------------------------------

void add_corrupt_image(CLI::App& app) {
  auto* cmd = app.add_subcommand("corrupt-image", "Apply one simulated acquisition artifact to a PNG/PGM image");
  static std::string in, out, kind;
  static int severity = defaults::kBenchmarkSeverity;
  static std::uint64_t seed = 0;
  cmd->add_option("--in", in, "Input image (.png or .pgm)")->required();
  cmd->add_option("--out", out, "Output image (.png or .pgm)")->required();
  cmd->add_option("--kind", kind, "ct_sparse_view, ct_low_dose, mri_motion, mri_aliasing, mri_banding, xray_motion")
      ->required();
  cmd->add_option("--severity", severity, "Severity level")->check(CLI::Range(1, 3));
  cmd->add_option("--seed", seed, "Random seed");
  cmd->callback([] {
    const auto img = imgnoise::read_image(in);
    imgnoise::write_image(imgnoise::corrupt_image(img, {artifact_kind(kind), severity, seed}), out);
  });
}

void add_corrupt_text(CLI::App& app) {
  auto* cmd = app.add_subcommand("corrupt-text", "Corrupt questions, one per line (stdin to stdout by default)");
  static std::string kind, pool, in, out;
  static double rate = defaults::kTextCorruptionRate;
  static std::uint64_t seed = 0;
  cmd->add_option("--kind", kind, "insert, delete, swap, replace, unrelated_sentence")->required();
  cmd->add_option("--rate", rate, "Fraction of eligible words to corrupt")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", seed, "Random seed; line i uses a key derived from (seed, i)");
  cmd->add_option("--pool", pool, "Distractor sentences, one per line");
  cmd->add_option("--in", in, "Input file (default stdin)");
  cmd->add_option("--out", out, "Output file (default stdout)");
  cmd->callback([] {
    const auto k = textnoise::parse_text_kind(kind);
    const auto distractors = pool.empty() ? textnoise::DistractorPool::builtin() : textnoise::DistractorPool::load(pool);
    const auto lines = read_lines_from(in);
    std::string text;
    for (std::size_t i = 0; i < lines.size(); ++i)
      text += textnoise::corrupt_text(lines[i], {k, rate, derive_key({seed, i})}, distractors).text + "\n";
    emit(out, text);
  });
}

// ---- pdc --------------------------------------------------------------------

void add_pdc(CLI::App& app) {
  {
    auto* cmd = app.add_subcommand("build-pool", "Cluster labelled training embeddings into a prototype pool");
    static std::string train, out;
    static std::size_t k = defaults::kPrototypeClusters;
    static std::uint64_t seed = 0;
    cmd->add_option("--train", train, "Labelled embedding stacks (JSONL)")->required();
    cmd->add_option("--k", k, "Clusters per condition and layer")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--out", out, "Pool file to write")->required();
    cmd->callback([] { pdc::save_pool(out, pdc::build_pool(pdc::read_stacks(train), k, seed)); });
  }
  {
    auto* cmd = app.add_subcommand("build-calibration", "Compute calibration directions from clean/noisy pairs");
    static std::string pool, clean, noisy, out;
    static double alpha = defaults::kCalibrationAlpha;
    cmd->add_option("--pool", pool, "Prototype pool")->required();
    cmd->add_option("--clean", clean, "Clean stacks (JSONL), paired with --noisy by sample_id")->required();
    cmd->add_option("--noisy", noisy, "Labelled noisy stacks (JSONL)")->required();
    cmd->add_option("--alpha", alpha, "Default step stored in the file")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", out, "Calibration file to write")->required();
    cmd->callback([] {
      std::map<std::string, pdc::EmbeddingStack> by_id;
      for (auto& s : pdc::read_stacks(clean)) by_id[s.sample_id] = std::move(s);
      std::vector<pdc::CalibrationPair> pairs;
      std::string unmatched;
      for (auto& s : pdc::read_stacks(noisy)) {
        const auto it = by_id.find(s.sample_id);
        if (it == by_id.end()) {
          unmatched += (unmatched.empty() ? "" : ", ") + s.sample_id;
          continue;
        }
        pairs.push_back({it->second, std::move(s)});
      }
      require(unmatched.empty(), "noisy stacks without a clean partner: " + unmatched);
      pdc::save_calibration(out, pdc::compute_calibration(pairs, pdc::load_pool(pool), alpha));
    });
  }
  {
    auto* cmd = app.add_subcommand("classify", "Predict the noise condition of embedding stacks");
    static std::string pool, in, out;
    cmd->add_option("--pool", pool, "Prototype pool")->required();
    cmd->add_option("--in", in, "Embedding stacks (JSONL)")->required();
    cmd->add_option("--out", out, "Result file, one JSON object per stack (default stdout)");
    cmd->callback([] {
      const auto p = pdc::load_pool(pool);
      std::string text;
      for (const auto& s : pdc::read_stacks(in)) {
        const auto r = pdc::classify(s, p);
        nlohmann::json layers = nlohmann::json::array(), votes = nlohmann::json::object();
        for (const auto& v : r.per_layer)
          layers.push_back({{"condition", v.key.name()}, {"cluster", v.cluster}, {"distance", v.distance}});
        for (const auto& [key, n] : r.vote_counts) votes[key.name()] = n;
        text += nlohmann::json{{"sample_id", s.sample_id},
                               {"state", std::string(pdc::to_string(r.final.state))},
                               {"modality", std::string(to_string(r.final.modality))},
                               {"votes", votes},
                               {"layers", layers}}
                    .dump() +
                "\n";
      }
      emit(out, text);
    });
  }
  {
    auto* cmd = app.add_subcommand("calibrate", "Classify stacks and shift the noisy ones toward clean");
    static std::string pool, cal, in, out;
    static std::optional<double> alpha;
    cmd->add_option("--pool", pool, "Prototype pool")->required();
    cmd->add_option("--cal", cal, "Calibration file")->required();
    cmd->add_option("--alpha", alpha, "Step size (default: the file's alpha)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--in", in, "Embedding stacks (JSONL)")->required();
    cmd->add_option("--out", out, "Calibrated stacks (JSONL)")->required();
    cmd->callback([] {
      const auto p = pdc::load_pool(pool);
      const auto c = pdc::load_calibration(cal);
      std::vector<pdc::EmbeddingStack> result;
      for (const auto& s : pdc::read_stacks(in)) result.push_back(pdc::pipeline(s, p, c, alpha).stack);
      pdc::write_stacks(out, result);
    });
  }
}

// ---- sms --------------------------------------------------------------------

void add_denoise_text(CLI::App& app) {
  auto* cmd = app.add_subcommand("denoise-text", "Clean questions with the multi-agent denoising loop");
  static std::string in, out, image_dir, backend = "mock", trace, replay_path, prompts, dictionary;
  static std::size_t k = defaults::kMicroLoops, n = defaults::kMacroRounds, iters = defaults::kMaxMicroIters;
  static double t0 = defaults::kInitialTemperature, miss_rate = 0.0;
  static std::uint64_t seed = 0;
  static bool no_halving = false;
  cmd->add_option("--in", in, "Questions, one per line; 'image<TAB>question' attaches an image")->required();
  cmd->add_option("--out", out, "Denoised questions (default stdout)");
  cmd->add_option("--image-dir", image_dir, "Directory the image names resolve against");
  cmd->add_option("--k", k, "Parallel micro loops per round")->check(CLI::PositiveNumber);
  cmd->add_option("--n", n, "Macro rounds")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", iters, "Denoise/check iterations per micro loop")->check(CLI::PositiveNumber);
  cmd->add_option("--t0", t0, "Initial temperature");
  cmd->add_flag("--no-halving", no_halving, "Keep the temperature fixed across rounds");
  cmd->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--dictionary", dictionary, "Word list for the mock backend (default: built in)");
  cmd->add_option("--miss-rate", miss_rate, "Mock denoiser miss probability per unit temperature")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--prompts", prompts, "Directory with <role>.txt prompt templates");
  cmd->add_option("--seed", seed, "Random seed; line i uses a key derived from (seed, i)");
  cmd->add_option("--trace", trace, "Write one JSON trace per question (JSONL)");
  cmd->add_option("--replay", replay_path, "Re-run from a trace file instead of calling a backend");
  cmd->callback([] {
    const auto prompt_set = prompts.empty() ? sms::PromptSet::builtin() : sms::PromptSet::load_dir(prompts);
    std::string text, traces;
    const auto record = [&](const sms::DenoiseResult& r) {
      text += r.final_text + "\n";
      traces += nlohmann::json::parse(sms::dump_trace(r.trace)).dump() + "\n";
    };
    if (!replay_path.empty()) {
      for (const auto& line : read_lines_from(replay_path))
        if (!line.empty()) record(sms::replay(sms::parse_trace(line), prompt_set));
    } else {
      std::unique_ptr<sms::ChatBackend> chat;
      if (backend == "http") {
        chat = std::make_unique<sms::HttpBackend>(sms::http_config_from_env());
      } else {
        auto dict = dictionary.empty() ? sms::Dictionary::builtin() : sms::Dictionary::load(dictionary);
        chat = std::make_unique<sms::StochasticOracleBackend>(std::move(dict), miss_rate,
                                                              textnoise::DistractorPool::builtin().sentences());
      }
      sms::LoopConfig cfg{k, n, iters, t0, !no_halving};
      const auto lines = read_lines_from(in);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string question = lines[i];
        std::optional<std::string> image;
        if (const auto tab = question.find('\t'); tab != std::string::npos) {
          image = (fs::path(image_dir) / question.substr(0, tab)).string();
          question = question.substr(tab + 1);
        }
        if (question.empty()) {
          text += "\n";
          continue;
        }
        record(sms::denoise(question, image, *chat, cfg, derive_key({seed, i}), prompt_set));
      }
    }
    emit(out, text);
    if (!trace.empty()) harness::write_text_file(trace, traces);
  });
}

// ---- harness ----------------------------------------------------------------

void add_bench(CLI::App& app) {
  auto* bench = app.add_subcommand("bench", "Build noisy benchmarks, score predictions, run ablation sweeps");
  bench->require_subcommand(1);
  {
    auto* cmd = bench->add_subcommand("build", "Corrupt a VQA dataset and write it with a manifest");
    static std::string data, image_kind = "none", severity = "2", text_kind = "none", out;
    static double rate = defaults::kTextCorruptionRate;
    static std::uint64_t seed = 0;
    cmd->add_option("--data", data, "Dataset (JSONL)")->required();
    cmd->add_option("--image-kind", image_kind, "Artifact kind, or none");
    cmd->add_option("--severity", severity, "1, 2, 3 or mixed (drawn per sample)")
        ->check(CLI::IsMember({"1", "2", "3", "mixed"}));
    cmd->add_option("--text-kind", text_kind, "Text corruption kind, or none");
    cmd->add_option("--rate", rate, "Text corruption rate")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->callback([] {
      harness::BuildOptions opt;
      opt.seed = seed;
      opt.base_dir = fs::path(data).parent_path().string();
      opt.out_dir = out;
      if (image_kind != "none")
        opt.image = harness::ImagePolicy{
            artifact_kind(image_kind), severity == "mixed" ? std::nullopt : std::optional<int>(std::stoi(severity))};
      if (text_kind != "none") opt.text = harness::TextPolicy{textnoise::parse_text_kind(text_kind), rate};
      const auto r = harness::build_noisy_dataset(harness::load_dataset(data), opt);
      std::size_t skipped = 0, failed = 0;
      for (const auto& e : r.manifest) {
        skipped += e.status == harness::EntryStatus::skipped;
        failed += e.status == harness::EntryStatus::failed;
      }
      std::cout << r.samples.size() << " samples written to " << out << " (" << skipped << " skipped, " << failed
                << " failed entries; see manifest.jsonl)\n";
    });
  }
  {
    auto* cmd = bench->add_subcommand("eval", "Score predictions against a dataset");
    static std::string data, pred, baseline, out;
    cmd->add_option("--data", data, "Dataset (JSONL)")->required();
    cmd->add_option("--pred", pred, "Predictions (JSONL with id and prediction)")->required();
    cmd->add_option("--baseline", baseline, "Report of a clean run; adds deltas");
    cmd->add_option("--out", out, "Write the full report (JSON)");
    cmd->callback([] {
      std::optional<harness::EvalReport> base;
      if (!baseline.empty()) base = harness::load_report(baseline);
      const auto r = harness::evaluate(harness::load_predictions(pred), harness::load_dataset(data), base);
      std::cout << harness::format_report(r);
      if (!out.empty()) harness::save_report(r, out);
    });
  }
  {
    auto* cmd = bench->add_subcommand("sweep", "Run an ablation grid from a JSON config");
    static std::string config, out;
    cmd->add_option("--config", config, "Sweep config (JSON)")->required();
    cmd->add_option("--out", out, "Write the result table as JSON");
    cmd->callback([] {
      const auto r = harness::run_sweep_file(config);
      std::cout << harness::format_table(r);
      if (!out.empty()) harness::write_text_file(out, harness::dump_sweep(r));
    });
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Medical multi-modal noise simulation and denoising toolkit"};
  app.require_subcommand(1);
  add_corrupt_image(app);
  add_corrupt_text(app);
  add_pdc(app);
  add_denoise_text(app);
  add_bench(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
