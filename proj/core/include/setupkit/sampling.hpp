// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace setupkit {

enum class QmcGenerator { Sobol, Stratified };

std::string_view to_string(QmcGenerator g);
QmcGenerator parse_qmc_generator(std::string_view token);

struct QmcConfig {
  int dimension = 168;
  int count = 100;
  /// 0 leaves Sobol points unscrambled; any other value seeds an Owen
  /// (nested uniform) scramble. Always seeds the stratified generator.
  std::uint64_t scramble_seed = 0;
  QmcGenerator generator = QmcGenerator::Sobol;

  void validate() const;
};

/// Row-major count x dimension matrix.
struct SampleMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double operator()(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::vector<double> row(int r) const;
};

inline constexpr int kMaxSobolDimension = 200;

/// Points [skip, skip + count) of the Gray-code ordered Sobol sequence in
/// [0, 1)^dimension. Throws UnsupportedDimension above kMaxSobolDimension.
SampleMatrix sobol_points(int dimension, int count, int skip = 0, std::uint64_t scramble_seed = 0);

/// Latin-hypercube style stratification, independent per dimension.
SampleMatrix stratified_points(int dimension, int count, std::uint64_t seed);

/// Uniform points for the configured generator. Unscrambled Sobol skips the
/// origin, which would map to -inf in normal space.
SampleMatrix generate_uniform(const QmcConfig& config);

/// generate_uniform() pushed through the standard normal quantile.
SampleMatrix generate(const QmcConfig& config);

/// Largest gap between consecutive sorted values in one column, including
/// the gaps to 0 and 1. A 1-D discrepancy proxy.
double max_gap(const SampleMatrix& m, int column);

void write_matrix_csv(std::ostream& out, const SampleMatrix& m);
SampleMatrix read_matrix_csv(std::istream& in);

}  // namespace setupkit
