#pragma once

// Synthetic benchmark generators, a CSV loader for the tabular benchmarks and
// the one-parameter quartic used to study basins of attraction.
//
// Every Dataset carries a trailing bias column fixed at +1. Classification
// targets use the 0.1 / 0.9 encoding.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hjbnn/linalg.hpp"

namespace hjbnn {

inline constexpr double kLowTarget = 0.1;
inline constexpr double kHighTarget = 0.9;

struct Dataset {
  std::string name;
  Matrix inputs;   // N_p x N_i, bias last
  Matrix targets;  // N_p x N_o
  std::optional<Matrix> test_inputs;
  std::optional<Matrix> test_targets;
  /// Free-form provenance (encodings, split sizes, ...).
  std::map<std::string, std::string> metadata;

  std::size_t pattern_count() const noexcept { return inputs.rows(); }
  std::size_t input_width() const noexcept { return inputs.cols(); }
  std::size_t output_width() const noexcept { return targets.cols(); }

  /// Throws DimensionError / ParameterError when the type invariants fail.
  void validate() const;
};

/// Nine patterns over {0,1,2}^2, inputs offset by 0.1, target 0.9 when x1+x2 is odd.
Dataset gen_modulo2();
/// Four patterns over {0,1}^2 with the same conventions as gen_modulo2.
Dataset gen_xor();
/// 2^bits patterns; both input bits and parity targets are encoded as 0.1 / 0.9.
/// Throws ParameterError for bits outside [1, 16].
Dataset gen_parity(std::size_t bits);

/// Gabor target with the (x1^2 - x2^2) exponent unless
/// `isotropic` selects (x1^2 + x2^2).
double gabor(double x1, double x2, bool isotropic = false);
/// n points uniform on [0,1]^2 drawn from a seeded generator.
Dataset gen_gabor(std::size_t n, std::uint64_t seed, bool isotropic = false);

struct CsvOptions {
  std::size_t n_inputs = 0;
  /// Zero-based column holding the class / target value.
  std::size_t target_column = 0;
  bool encode_targets = true;
  /// Number of rows kept for training after the seeded shuffle; the rest form the
  /// test split. Zero keeps every row for training.
  std::size_t split_train = 0;
  std::uint64_t seed = 0;
  /// Columns dropped before feature extraction (e.g. a sample id).
  std::vector<std::size_t> skip_columns;
  std::string name;
};

/// Loads a comma-separated file. A first row without a single numeric cell is
/// treated as a header; "?" and empty cells are missing values. Non-numeric feature
/// columns are ordinal-coded in order of first appearance. Features are imputed
/// with training-split means and min-max scaled with training-split statistics.
Dataset load_csv(const std::string& path, const CsvOptions& options);

/// Quartic error e(w) = w^4/4 - w^3/3 - w^2 + 8/3.
double toy1d_error(double w);
/// J(w) = -de/dw = -(w^3 - w^2 - 2w).
double toy1d_jac(double w);

}  // namespace hjbnn
