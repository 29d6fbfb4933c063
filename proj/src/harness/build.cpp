#include "imc/harness/build.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"
#include "imc/common/rng.hpp"
#include "imc/imgnoise/image_io.hpp"
#include "imc/imgnoise/simulators.hpp"
#include "json.hpp"

namespace imc::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (auto& c : out) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!safe) c = '_';
  }
  return out;
}

std::string lower_extension(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

struct Outcome {
  std::optional<VqaSample> sample;
  std::vector<ManifestEntry> entries;
};

Outcome build_one(const VqaSample& in, const BuildOptions& opt) {
  Outcome out;
  const auto seed = sample_seed(opt.seed, in.id);
  VqaSample s = in;

  const fs::path source = fs::path(in.image_path).is_absolute() ? fs::path(in.image_path)
                                                                 : fs::path(opt.base_dir) / in.image_path;
  const auto ext = lower_extension(in.image_path);
  const std::string rel = "images/" + file_stem_for(in.id) + ext;
  const fs::path target = fs::path(opt.out_dir) / rel;

  ManifestEntry image{in.id, "copy", std::nullopt, std::nullopt, seed, rel, EntryStatus::ok, {}};
  try {
    if (!fs::exists(source)) fail(ErrorCode::io_error, "image '" + source.string() + "' does not exist");
    if (fs::exists(target) && fs::equivalent(source, target))
      fail(ErrorCode::invalid_input, "output would overwrite the input image '" + source.string() + "'");
    bool corrupt = false;
    if (opt.image) {
      image.kind = std::string(to_string(opt.image->kind));
      if (modality_of(opt.image->kind) != in.modality) {
        image.status = EntryStatus::skipped;
        image.message = image.kind + " applies to " + std::string(to_string(modality_of(opt.image->kind))) +
                        " images, sample is " + std::string(to_string(in.modality));
      } else {
        corrupt = true;
        image.severity = opt.image->severity
                             ? *opt.image->severity
                             : 1 + static_cast<int>(CounterRng(derive_key({seed, hash_string("severity")})).below(3));
      }
    }
    if (corrupt) {
      if (ext != ".png" && ext != ".pgm")
        fail(ErrorCode::invalid_input, "image '" + in.image_path + "' is neither PNG nor PGM");
      const auto img = imgnoise::read_image(source.string());
      imgnoise::write_image(imgnoise::corrupt_image(img, {opt.image->kind, *image.severity, seed}), target.string());
    } else {
      fs::copy_file(source, target, fs::copy_options::overwrite_existing);
    }
  } catch (const std::exception& e) {
    image.status = EntryStatus::failed;
    image.message = e.what();
    out.entries.push_back(std::move(image));
    return out;
  }
  s.image_path = rel;
  out.entries.push_back(std::move(image));

  if (opt.text) {
    ManifestEntry text{in.id, std::string(textnoise::to_string(opt.text->kind)), std::nullopt, std::nullopt, seed,
                       "dataset.jsonl", EntryStatus::ok, {}};
    if (opt.text->kind != textnoise::TextKind::unrelated_sentence) text.rate = opt.text->rate;
    try {
      const auto r = textnoise::corrupt_text(in.question, {opt.text->kind, opt.text->rate, seed});
      s.question = r.text;
      if (r.no_op) {
        text.status = EntryStatus::skipped;
        text.message = "no word could take this edit";
      }
    } catch (const Error& e) {
      text.status = EntryStatus::skipped;
      text.message = e.what();
    }
    out.entries.push_back(std::move(text));
  }
  out.sample = std::move(s);
  return out;
}

}  // namespace

std::string_view to_string(EntryStatus s) {
  switch (s) {
    case EntryStatus::ok: return "ok";
    case EntryStatus::skipped: return "skipped";
    case EntryStatus::failed: return "failed";
  }
  return "?";
}

std::uint64_t sample_seed(std::uint64_t seed, std::string_view id) { return derive_key({seed, hash_string(id)}); }

BuildResult build_noisy_dataset(const std::vector<VqaSample>& samples, const BuildOptions& options) {
  require(!options.out_dir.empty(), "an output directory is required");
  if (options.image && options.image->severity)
    require(*options.image->severity >= 1 && *options.image->severity <= 3, "severity must be 1, 2 or 3");
  if (options.text && options.text->kind != textnoise::TextKind::unrelated_sentence)
    require(options.text->rate >= 0.0 && options.text->rate <= 1.0, "text rate must lie in [0, 1]");

  std::set<std::string> stems;
  for (const auto& s : samples)
    require(stems.insert(file_stem_for(s.id) + lower_extension(s.image_path)).second,
            "ids '" + s.id + "' and another sample map to the same output file");

  std::error_code ec;
  fs::create_directories(fs::path(options.out_dir) / "images", ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + options.out_dir + "/images': " + ec.message());

  std::vector<Outcome> outcomes(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { outcomes[i] = build_one(samples[i], options); });

  BuildResult result;
  for (auto& o : outcomes) {
    if (o.sample) result.samples.push_back(std::move(*o.sample));
    for (auto& e : o.entries) result.manifest.push_back(std::move(e));
  }
  save_dataset(result.samples, (fs::path(options.out_dir) / "dataset.jsonl").string());
  write_text_file((fs::path(options.out_dir) / "manifest.jsonl").string(), dump_manifest(result.manifest));
  return result;
}

std::string dump_manifest(const std::vector<ManifestEntry>& manifest) {
  std::string out;
  for (const auto& e : manifest) {
    json rec = {{"id", e.id},
                {"kind", e.kind},
                {"severity", e.severity ? json(*e.severity) : json(nullptr)},
                {"rate", e.rate ? json(*e.rate) : json(nullptr)},
                {"seed", e.seed},
                {"output_path", e.output_path},
                {"status", std::string(to_string(e.status))}};
    if (!e.message.empty()) rec["message"] = e.message;
    out += rec.dump() + "\n";
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.kind = j.at("kind").get<std::string>();
      if (!j.at("severity").is_null()) e.severity = j["severity"].get<int>();
      if (!j.at("rate").is_null()) e.rate = j["rate"].get<double>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.output_path = j.at("output_path").get<std::string>();
      const auto status = j.at("status").get<std::string>();
      e.status = status == "ok" ? EntryStatus::ok : status == "skipped" ? EntryStatus::skipped : EntryStatus::failed;
      e.message = j.value("message", "");
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace imc::harness
