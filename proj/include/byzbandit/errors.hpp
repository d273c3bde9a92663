// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace byzbandit {

// Raised when a matrix required to be SPD fails the positivity check
// (Cholesky pivot <= 0, or an explicit min-eigenvalue guard).
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// brute_force_gm refuses dimensions > 4 (lattice cost grows exponentially).
struct DimensionTooLarge : std::invalid_argument {
  explicit DimensionTooLarge(const std::string& what) : std::invalid_argument(what) {}
};

// Group partitioning needs 3 * corrupted <= agents.
struct InvalidCorruptionBound : std::invalid_argument {
  explicit InvalidCorruptionBound(const std::string& what) : std::invalid_argument(what) {}
};

// Breakdown constant is only defined for alpha in [0, 1/2).
struct InvalidAlpha : std::invalid_argument {
  explicit InvalidAlpha(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent experiment configuration.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace byzbandit
