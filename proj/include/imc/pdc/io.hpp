#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "imc/pdc/calibration.hpp"
#include "imc/pdc/pool.hpp"

namespace imc::pdc {

inline constexpr int kPoolFormatVersion = 1;
inline constexpr int kCalibrationFormatVersion = 1;

// Embedding interchange: one JSON object per line with sample_id, modality,
// state and layers (L arrays of D numbers). modality and state may be null
// or absent. Every record in a file must share L and D. Blank lines are
// skipped. Errors name the line.
std::vector<EmbeddingStack> parse_stacks(std::istream& in, const std::string& source = "<stream>");
std::vector<EmbeddingStack> read_stacks(const std::string& path);
void write_stack(std::ostream& out, const EmbeddingStack& stack);
void write_stacks(const std::string& path, const std::vector<EmbeddingStack>& stacks);

// Versioned JSON; numbers are written at 9 significant digits.
std::string dump_pool(const PrototypePool& pool);
PrototypePool parse_pool(const std::string& text);
void save_pool(const std::string& path, const PrototypePool& pool);
PrototypePool load_pool(const std::string& path);

std::string dump_calibration(const CalibrationSet& cal);
CalibrationSet parse_calibration(const std::string& text);
void save_calibration(const std::string& path, const CalibrationSet& cal);
CalibrationSet load_calibration(const std::string& path);

// Rounds to 9 significant digits, the precision of the persisted files.
double round9(double v);

}  // namespace imc::pdc
