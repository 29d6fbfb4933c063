#include "imc/imgnoise/severity.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"

namespace imc::imgnoise {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

double parse_number(const std::string& text, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(v))
    fail(ErrorCode::parse_error,
         "severity table line " + std::to_string(line) + ": bad number '" + text + "'");
  return v;
}

// Parameter names each kind's row must define.
std::vector<std::string> required_params(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::ct_sparse_view: return {"n_angles"};
    case ArtifactKind::ct_low_dose: return {"i0"};
    case ArtifactKind::mri_motion: return {"n_events", "max_shift"};
    case ArtifactKind::mri_aliasing: return {"r"};
    case ArtifactKind::mri_banding: return {"amplitude", "stripes"};
    case ArtifactKind::xray_motion: return {"length", "contrast"};
  }
  return {};
}

std::string row_key(ArtifactKind kind, int severity) {
  return std::string(to_string(kind)) + "." + std::to_string(severity);
}

std::size_t as_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

}  // namespace

SeverityTable SeverityTable::parse(std::string_view text) {
  SeverityTable table;
  int version = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::parse_error, "severity table line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (key == "version") {
      version = static_cast<int>(parse_number(value, line_no));
      continue;
    }
    std::map<std::string, double> row;
    std::istringstream fields(value);
    std::string field;
    while (fields >> field) {
      const auto feq = field.find('=');
      if (feq == std::string::npos || feq == 0)
        fail(ErrorCode::parse_error,
             "severity table line " + std::to_string(line_no) + ": expected name=value, got '" + field + "'");
      row[field.substr(0, feq)] = parse_number(field.substr(feq + 1), line_no);
    }
    table.rows_[key] = std::move(row);
  }
  if (version != kVersion)
    fail(ErrorCode::parse_error, "severity table version " + std::to_string(version) + " is not supported (expected " +
                                     std::to_string(kVersion) + ")");

  for (auto kind : kAllArtifactKinds) {
    for (int severity = 1; severity <= 3; ++severity) {
      const auto it = table.rows_.find(row_key(kind, severity));
      if (it == table.rows_.end())
        fail(ErrorCode::parse_error, "severity table is missing row " + row_key(kind, severity));
      for (const auto& name : required_params(kind)) {
        if (!it->second.count(name))
          fail(ErrorCode::parse_error, "severity table row " + it->first + " is missing '" + name + "'");
      }
    }
  }
  return table;
}

SeverityTable SeverityTable::load(const std::string& path) { return parse(resources::read_file(path)); }

const SeverityTable& SeverityTable::builtin() {
  static const SeverityTable table = parse(resources::get("severity_table"));
  return table;
}

double SeverityTable::value(ArtifactKind kind, int severity, const std::string& name) const {
  require(severity >= 1 && severity <= 3, "severity must be 1, 2 or 3, got " + std::to_string(severity));
  const auto& row = rows_.at(row_key(kind, severity));
  return row.at(name);
}

SparseViewParams SeverityTable::sparse_view(int severity) const {
  return {as_count(value(ArtifactKind::ct_sparse_view, severity, "n_angles"))};
}

LowDoseParams SeverityTable::low_dose(int severity) const {
  return {value(ArtifactKind::ct_low_dose, severity, "i0")};
}

MotionParams SeverityTable::motion(int severity) const {
  return {as_count(value(ArtifactKind::mri_motion, severity, "n_events")),
          value(ArtifactKind::mri_motion, severity, "max_shift")};
}

AliasingParams SeverityTable::aliasing(int severity) const {
  return {as_count(value(ArtifactKind::mri_aliasing, severity, "r"))};
}

BandingParams SeverityTable::banding(int severity) const {
  return {value(ArtifactKind::mri_banding, severity, "amplitude"),
          value(ArtifactKind::mri_banding, severity, "stripes")};
}

XrayMotionParams SeverityTable::xray_motion(int severity) const {
  return {as_count(value(ArtifactKind::xray_motion, severity, "length")),
          value(ArtifactKind::xray_motion, severity, "contrast")};
}

}  // namespace imc::imgnoise
