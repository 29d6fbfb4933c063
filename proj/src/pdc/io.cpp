#include "imc/pdc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "json.hpp"

namespace imc::pdc {

using nlohmann::json;

namespace {

constexpr const char* kPoolFormat = "imc-prototype-pool";
constexpr const char* kCalibrationFormat = "imc-calibration-set";

json rounded(const Vec& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(round9(x));
  return arr;
}

Vec to_vec(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::parse_error, where + ": expected an array of numbers");
  Vec v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) fail(ErrorCode::parse_error, where + ": expected a number");
    v.push_back(x.get<double>());
  }
  return v;
}

template <class T>
T field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) fail(ErrorCode::parse_error, where + ": missing field '" + name + "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, where + ": field '" + name + "' has the wrong type");
  }
}

json key_json(const StateKey& key) {
  return {{"state", std::string(to_string(key.state))}, {"modality", std::string(imc::to_string(key.modality))}};
}

StateKey key_from(const json& obj, const std::string& where) {
  const auto state = parse_noise_state(field<std::string>(obj, "state", where));
  const auto modality = parse_modality(field<std::string>(obj, "modality", where));
  if (!state) fail(ErrorCode::parse_error, where + ": unknown state '" + obj.at("state").get<std::string>() + "'");
  if (!modality)
    fail(ErrorCode::parse_error, where + ": unknown modality '" + obj.at("modality").get<std::string>() + "'");
  StateKey key{*state, *modality};
  try {
    validate(key);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, where + ": " + e.what());
  }
  return key;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, what + " is not valid JSON: " + e.what());
  }
}

void check_header(const json& doc, const char* format, int version, const std::string& what) {
  if (field<std::string>(doc, "format", what) != format)
    fail(ErrorCode::parse_error, what + ": not a " + std::string(format) + " file");
  const int found = field<int>(doc, "version", what);
  if (found != version)
    fail(ErrorCode::parse_error, what + ": format version " + std::to_string(found) + " is not supported (expected " +
                                     std::to_string(version) + ")");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

void unit_normalize(Vec& v) {
  const double n = norm(v);
  if (n > 0.0)
    for (auto& x : v) x /= n;
}

}  // namespace

double round9(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

// ---- interchange ----------------------------------------------------------

std::vector<EmbeddingStack> parse_stacks(std::istream& in, const std::string& source) {
  std::vector<EmbeddingStack> stacks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::parse_error, where + ": not valid JSON");
    }
    if (!rec.is_object()) fail(ErrorCode::parse_error, where + ": expected a JSON object");

    EmbeddingStack s;
    s.sample_id = field<std::string>(rec, "sample_id", where);
    if (rec.contains("modality") && !rec["modality"].is_null()) {
      const auto m = parse_modality(field<std::string>(rec, "modality", where));
      if (!m) fail(ErrorCode::parse_error, where + ": unknown modality '" + rec["modality"].get<std::string>() + "'");
      s.modality = *m;
    }
    if (rec.contains("state") && !rec["state"].is_null()) {
      const auto st = parse_noise_state(field<std::string>(rec, "state", where));
      if (!st) fail(ErrorCode::parse_error, where + ": unknown state '" + rec["state"].get<std::string>() + "'");
      s.state = *st;
    }
    if (!rec.contains("layers")) fail(ErrorCode::parse_error, where + ": missing field 'layers'");
    const auto& layers = rec["layers"];
    if (!layers.is_array()) fail(ErrorCode::parse_error, where + ": 'layers' must be an array");
    for (std::size_t l = 0; l < layers.size(); ++l)
      s.layers.push_back(to_vec(layers[l], where + " layer " + std::to_string(l)));
    try {
      validate(s);
      if (s.state && s.modality) label_of(s);
    } catch (const Error& e) {
      fail(ErrorCode::parse_error, where + ": " + e.what());
    }
    if (!stacks.empty() &&
        (s.layer_count() != stacks.front().layer_count() || s.dim() != stacks.front().dim()))
      fail(ErrorCode::parse_error, where + ": shape " + std::to_string(s.layer_count()) + "x" +
                                       std::to_string(s.dim()) + " differs from the first record's " +
                                       std::to_string(stacks.front().layer_count()) + "x" +
                                       std::to_string(stacks.front().dim()));
    stacks.push_back(std::move(s));
  }
  return stacks;
}

std::vector<EmbeddingStack> read_stacks(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return parse_stacks(in, path);
}

void write_stack(std::ostream& out, const EmbeddingStack& stack) {
  json rec;
  rec["sample_id"] = stack.sample_id;
  rec["modality"] = stack.modality ? json(std::string(imc::to_string(*stack.modality))) : json(nullptr);
  rec["state"] = stack.state ? json(std::string(to_string(*stack.state))) : json(nullptr);
  rec["layers"] = stack.layers;
  out << rec.dump() << '\n';
}

void write_stacks(const std::string& path, const std::vector<EmbeddingStack>& stacks) {
  std::ostringstream out;
  for (const auto& s : stacks) write_stack(out, s);
  write_text(path, out.str());
}

// ---- prototype pool -------------------------------------------------------

std::string dump_pool(const PrototypePool& pool) {
  validate(pool);
  json doc;
  doc["format"] = kPoolFormat;
  doc["version"] = kPoolFormatVersion;
  doc["k"] = pool.k;
  doc["layers"] = pool.layers;
  doc["dim"] = pool.dim;
  json conds = json::array();
  for (const auto& [key, layers] : pool.conditions) {
    json c = key_json(key);
    json ls = json::array();
    for (const auto& p : layers) {
      json centers = json::array();
      for (const auto& v : p.centers) centers.push_back(rounded(v));
      ls.push_back({{"centers", centers}, {"members", p.members}});
    }
    c["layers"] = ls;
    conds.push_back(c);
  }
  doc["conditions"] = conds;
  return doc.dump(1) + "\n";
}

PrototypePool parse_pool(const std::string& text) {
  const auto doc = parse_json(text, "prototype pool");
  check_header(doc, kPoolFormat, kPoolFormatVersion, "prototype pool");
  PrototypePool pool;
  pool.k = field<std::size_t>(doc, "k", "prototype pool");
  pool.layers = field<std::size_t>(doc, "layers", "prototype pool");
  pool.dim = field<std::size_t>(doc, "dim", "prototype pool");
  for (const auto& c : field<json>(doc, "conditions", "prototype pool")) {
    const auto key = key_from(c, "prototype pool condition");
    const std::string where = "prototype pool condition " + key.name();
    auto& layers = pool.conditions[key];
    for (const auto& l : field<json>(c, "layers", where)) {
      LayerPrototypes p;
      for (const auto& v : field<json>(l, "centers", where)) p.centers.push_back(to_vec(v, where));
      p.members = field<std::vector<std::vector<std::string>>>(l, "members", where);
      for (auto& ids : p.members) std::sort(ids.begin(), ids.end());
      layers.push_back(std::move(p));
    }
  }
  try {
    validate(pool);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, std::string("prototype pool: ") + e.what());
  }
  return pool;
}

void save_pool(const std::string& path, const PrototypePool& pool) { write_text(path, dump_pool(pool)); }

PrototypePool load_pool(const std::string& path) { return parse_pool(resources::read_file(path)); }

// ---- calibration set ------------------------------------------------------

std::string dump_calibration(const CalibrationSet& cal) {
  validate(cal);
  json doc;
  doc["format"] = kCalibrationFormat;
  doc["version"] = kCalibrationFormatVersion;
  doc["alpha"] = cal.alpha;
  doc["k"] = cal.k;
  doc["layers"] = cal.layers;
  doc["dim"] = cal.dim;
  json conds = json::array();
  for (const auto& [key, layers] : cal.vectors) {
    json c = key_json(key);
    json ls = json::array();
    for (const auto& clusters : layers) {
      json vs = json::array();
      for (const auto& v : clusters)
        vs.push_back({{"direction", rounded(v.direction)}, {"degenerate", v.degenerate}, {"support", v.support}});
      ls.push_back(vs);
    }
    c["layers"] = ls;
    conds.push_back(c);
  }
  doc["conditions"] = conds;
  return doc.dump(1) + "\n";
}

CalibrationSet parse_calibration(const std::string& text) {
  const auto doc = parse_json(text, "calibration set");
  check_header(doc, kCalibrationFormat, kCalibrationFormatVersion, "calibration set");
  CalibrationSet cal;
  cal.alpha = field<double>(doc, "alpha", "calibration set");
  cal.k = field<std::size_t>(doc, "k", "calibration set");
  cal.layers = field<std::size_t>(doc, "layers", "calibration set");
  cal.dim = field<std::size_t>(doc, "dim", "calibration set");
  for (const auto& c : field<json>(doc, "conditions", "calibration set")) {
    const auto key = key_from(c, "calibration set condition");
    const std::string where = "calibration set condition " + key.name();
    auto& layers = cal.vectors[key];
    for (const auto& l : field<json>(c, "layers", where)) {
      std::vector<CalibrationVector> clusters;
      for (const auto& v : l) {
        CalibrationVector cv;
        cv.direction = to_vec(field<json>(v, "direction", where), where);
        cv.degenerate = field<bool>(v, "degenerate", where);
        cv.support = field<std::size_t>(v, "support", where);
        // Undo the 9-digit rounding so stored directions are unit again.
        if (!cv.degenerate) unit_normalize(cv.direction);
        clusters.push_back(std::move(cv));
      }
      layers.push_back(std::move(clusters));
    }
  }
  try {
    validate(cal);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, std::string("calibration set: ") + e.what());
  }
  return cal;
}

void save_calibration(const std::string& path, const CalibrationSet& cal) {
  write_text(path, dump_calibration(cal));
}

CalibrationSet load_calibration(const std::string& path) { return parse_calibration(resources::read_file(path)); }

}  // namespace imc::pdc
