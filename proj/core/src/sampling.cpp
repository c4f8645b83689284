// SPDX-License-Identifier: Apache-2.0
#include "setupkit/sampling.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"
#include "setupkit/normal.hpp"
#include "setupkit/random.hpp"

namespace setupkit {
namespace {

struct DirectionEntry {
  int degree;
  unsigned coeffs;
  std::array<unsigned, 12> m;
};

constexpr DirectionEntry kDirections[] = {
#include "sobol_directions.inc"
};
static_assert(std::size(kDirections) == kMaxSobolDimension - 1);

constexpr int kBits = 32;

// v[j] = m_j * 2^(32 - j), extended by the primitive-polynomial recurrence.
std::array<std::uint32_t, kBits> direction_numbers(int dim) {
  std::array<std::uint32_t, kBits> v{};
  if (dim == 0) {
    for (int j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
    return v;
  }
  const DirectionEntry& e = kDirections[dim - 1];
  const int s = e.degree;
  for (int j = 0; j < s; ++j) v[j] = e.m[j] << (kBits - 1 - j);
  for (int j = s; j < kBits; ++j) {
    std::uint32_t x = v[j - s] ^ (v[j - s] >> s);
    for (int k = 1; k < s; ++k)
      if ((e.coeffs >> (s - 1 - k)) & 1u) x ^= v[j - k];
    v[j] = x;
  }
  return v;
}

std::uint32_t reverse_bits(std::uint32_t x) {
  std::uint32_t r = 0;
  for (int i = 0; i < kBits; ++i) r |= ((x >> i) & 1u) << (kBits - 1 - i);
  return r;
}

// Nested uniform (Owen) scramble: every bit is flipped by a hash of the
// more significant bits, computed in bit-reversed order (Laine-Karras).
std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
  std::uint32_t r = reverse_bits(x);
  r += seed;
  r ^= r * 0x6c50b47cu;
  r ^= r * 0xb82f1e52u;
  r ^= r * 0xc7afe638u;
  r ^= r * 0x8d22f6e6u;
  return reverse_bits(r);
}

}  // namespace

std::string_view to_string(QmcGenerator g) { return g == QmcGenerator::Sobol ? "sobol" : "stratified"; }

QmcGenerator parse_qmc_generator(std::string_view token) {
  if (token == "sobol") return QmcGenerator::Sobol;
  if (token == "stratified") return QmcGenerator::Stratified;
  throw ParseError(fmt::format("unknown generator '{}' (expected sobol or stratified)", token));
}

void QmcConfig::validate() const {
  if (dimension < 1) throw ConfigError("qmc: dimension must be at least 1");
  if (count < 1) throw ConfigError("qmc: count must be at least 1");
}

std::vector<double> SampleMatrix::row(int r) const {
  const auto begin = values.begin() + static_cast<std::ptrdiff_t>(r) * cols;
  return {begin, begin + cols};
}

SampleMatrix sobol_points(int dimension, int count, int skip, std::uint64_t scramble_seed) {
  if (dimension > kMaxSobolDimension)
    throw UnsupportedDimension(
        fmt::format("Sobol direction numbers are bundled for {} dimensions, {} requested", kMaxSobolDimension,
                    dimension));
  if (dimension < 1 || count < 0 || skip < 0) throw std::invalid_argument("sobol_points: bad shape");

  SampleMatrix out{count, dimension, std::vector<double>(static_cast<std::size_t>(count) * dimension)};
  std::vector<std::uint32_t> seeds(dimension);
  {
    SplitMix64 rng(scramble_seed);
    for (auto& s : seeds) s = static_cast<std::uint32_t>(rng.next());
  }
  for (int d = 0; d < dimension; ++d) {
    const auto v = direction_numbers(d);
    std::uint32_t x = 0;
    for (int i = 0; i < skip + count; ++i) {
      if (i > 0) {
        // Gray code: flip the direction number of the lowest zero bit of i - 1.
        const int c = std::countr_one(static_cast<std::uint32_t>(i - 1));
        x ^= v[c];
      }
      if (i < skip) continue;
      // Scrambled points sit at the centre of their 2^-32 cell so they never hit 0.
      out(i - skip, d) = scramble_seed ? (owen_scramble(x, seeds[d]) + 0.5) * 0x1.0p-32
                                       : static_cast<double>(x) * 0x1.0p-32;
    }
  }
  return out;
}

SampleMatrix stratified_points(int dimension, int count, std::uint64_t seed) {
  if (dimension < 1 || count < 0) throw std::invalid_argument("stratified_points: bad shape");
  SampleMatrix out{count, dimension, std::vector<double>(static_cast<std::size_t>(count) * dimension)};
  SplitMix64 rng(mix_seed(seed, 0x5eed));
  std::vector<int> perm(count);
  for (int d = 0; d < dimension; ++d) {
    for (int i = 0; i < count; ++i) perm[i] = i;
    for (int i = count - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    for (int i = 0; i < count; ++i) {
      double u = (perm[i] + rng.uniform()) / count;
      if (u <= 0.0) u = 0.5 / count;
      out(i, d) = u;
    }
  }
  return out;
}

SampleMatrix generate_uniform(const QmcConfig& config) {
  config.validate();
  if (config.generator == QmcGenerator::Stratified)
    return stratified_points(config.dimension, config.count, config.scramble_seed);
  const int skip = config.scramble_seed == 0 ? 1 : 0;
  return sobol_points(config.dimension, config.count, skip, config.scramble_seed);
}

SampleMatrix generate(const QmcConfig& config) {
  SampleMatrix m = generate_uniform(config);
  for (double& v : m.values) v = normal_quantile(v);
  return m;
}

double max_gap(const SampleMatrix& m, int column) {
  std::vector<double> col(m.rows);
  for (int r = 0; r < m.rows; ++r) col[r] = m(r, column);
  std::sort(col.begin(), col.end());
  double gap = col.empty() ? 1.0 : std::max(col.front(), 1.0 - col.back());
  for (std::size_t i = 1; i < col.size(); ++i) gap = std::max(gap, col[i] - col[i - 1]);
  return gap;
}

void write_matrix_csv(std::ostream& out, const SampleMatrix& m) {
  for (int c = 0; c < m.cols; ++c) out << (c ? "," : "") << "v" << c;
  out << '\n';
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) out << (c ? "," : "") << format_number(m(r, c));
    out << '\n';
  }
}

SampleMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix: empty input");
  SampleMatrix m;
  m.cols = static_cast<int>(split_csv_line(line).size());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != m.cols)
      throw ParseError(fmt::format("matrix line {}: expected {} fields, got {}", line_no, m.cols, f.size()));
    for (const auto& v : f) m.values.push_back(parse_number(v, fmt::format("matrix line {}", line_no)));
    ++m.rows;
  }
  return m;
}

}  // namespace setupkit
