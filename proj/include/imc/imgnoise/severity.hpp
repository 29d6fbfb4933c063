#pragma once

#include <map>
#include <string>
#include <string_view>

#include "imc/common/taxonomy.hpp"

namespace imc::imgnoise {

struct SparseViewParams {
  std::size_t n_angles = 60;
};

struct LowDoseParams {
  double i0 = 1e4;  // incident photons per detector bin; +inf disables noise
};

struct MotionParams {
  std::size_t n_events = 4;
  double max_shift = 4.0;  // pixels
};

struct AliasingParams {
  std::size_t r = 3;  // keep every r-th phase-encode line
};

struct BandingParams {
  double amplitude = 0.3;
  double stripes = 16.0;
};

struct XrayMotionParams {
  std::size_t length = 9;  // pixels
  double contrast = 0.8;
};

// Versioned severity table: "<kind>.<severity> = name=value ..." lines.
class SeverityTable {
 public:
  static constexpr int kVersion = 1;

  // Throws parse-error on malformed text, a version mismatch, or a missing
  // kind/severity row.
  static SeverityTable parse(std::string_view text);
  static SeverityTable load(const std::string& path);

  // The table shipped in config/severity_table.txt.
  static const SeverityTable& builtin();

  SparseViewParams sparse_view(int severity) const;
  LowDoseParams low_dose(int severity) const;
  MotionParams motion(int severity) const;
  AliasingParams aliasing(int severity) const;
  BandingParams banding(int severity) const;
  XrayMotionParams xray_motion(int severity) const;

  double value(ArtifactKind kind, int severity, const std::string& name) const;

 private:
  std::map<std::string, std::map<std::string, double>> rows_;
};

}  // namespace imc::imgnoise
