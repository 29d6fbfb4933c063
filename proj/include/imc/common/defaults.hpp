#pragma once

#include <cstddef>

// Hyperparameter defaults of the IMC framework.
namespace imc::defaults {

inline constexpr std::size_t kPrototypeClusters = 8;
inline constexpr std::size_t kPoolSamples = 100;
inline constexpr double kCalibrationAlpha = 0.05;

inline constexpr std::size_t kMicroLoops = 10;
inline constexpr std::size_t kMacroRounds = 2;
inline constexpr std::size_t kMaxMicroIters = 3;
inline constexpr double kInitialTemperature = 1.0;

inline constexpr double kTextCorruptionRate = 0.25;
inline constexpr int kBenchmarkSeverity = 2;
inline constexpr std::size_t kDenseViewAngles = 360;

inline constexpr std::size_t kKMeansMaxIters = 300;
inline constexpr double kKMeansTolerance = 1e-6;
inline constexpr std::size_t kKMeansRestarts = 10;

inline constexpr double kPcaTolerance = 1e-9;
inline constexpr std::size_t kPcaMaxIters = 1000;

}  // namespace imc::defaults
