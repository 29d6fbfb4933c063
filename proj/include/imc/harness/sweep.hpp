#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imc/harness/evaluate.hpp"

namespace imc::harness {

// Sweep configs are JSON objects with a "kind":
//  - "prototypes": K grid over the synthetic blob benchmark, reporting
//    classification accuracy;
//  - "rounds": macro-round grid n for the mock-backed text denoiser,
//    reporting exact recovery and the text metrics against the clean
//    questions;
//  - "eval": one evaluate() per listed (label, predictions, dataset) point,
//    e.g. predictions produced by an external model at each grid value.
// Relative paths inside the config resolve against the config's directory.
struct SweepRow {
  std::string point;
  std::vector<std::pair<std::string, std::optional<double>>> metrics;
};

struct SweepResult {
  std::string kind;
  std::vector<std::string> columns;  // metric names, shared by every row
  std::vector<SweepRow> rows;
};

SweepResult run_sweep(const std::string& config_json, const std::string& base_dir);
SweepResult run_sweep_file(const std::string& path);

std::string format_table(const SweepResult& result);
std::string dump_sweep(const SweepResult& result);

}  // namespace imc::harness
