// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <setupkit/errors.hpp>
#include <setupkit/normal.hpp>
#include <setupkit/random.hpp>
#include <setupkit/sampling.hpp>

using namespace setupkit;

TEST_CASE("canonical Sobol prefix") {
  const SampleMatrix m = sobol_points(1, 4);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 0) == 0.5);
  CHECK(m(2, 0) == 0.75);
  CHECK(m(3, 0) == 0.25);
}

TEST_CASE("Sobol matches frozen reference points") {
  // Gray-code ordered, unscrambled, new Joe-Kuo direction numbers.
  const int dims[] = {0, 1, 2, 9, 99, 167, 199};
  const double at1000[] = {0.2197265625, 0.0966796875, 0.5185546875, 0.0693359375,
                           0.1865234375, 0.8134765625, 0.8427734375};
  const double at4096[] = {0.0003662109375, 0.4705810546875, 0.8358154296875, 0.9947509765625,
                           0.2384033203125, 0.2542724609375, 0.7100830078125};
  const SampleMatrix a = sobol_points(200, 1, 1000);
  const SampleMatrix b = sobol_points(200, 1, 4096);
  for (int i = 0; i < 7; ++i) {
    CAPTURE(dims[i]);
    CHECK(a(0, dims[i]) == at1000[i]);
    CHECK(b(0, dims[i]) == at4096[i]);
  }
  const SampleMatrix c = sobol_points(200, 4);
  const int d3[] = {0, 1, 2, 9, 99, 199};
  const double v3[] = {0.25, 0.75, 0.75, 0.25, 0.25, 0.75};
  for (int i = 0; i < 6; ++i) CHECK(c(3, d3[i]) == v3[i]);
}

TEST_CASE("skip is consistent with a longer run") {
  const SampleMatrix all = sobol_points(7, 40);
  const SampleMatrix tail = sobol_points(7, 10, 30);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 7; ++c) CHECK(tail(r, c) == all(30 + r, c));
}

TEST_CASE("dimension limits") {
  CHECK_THROWS_AS(sobol_points(201, 4), UnsupportedDimension);
  QmcConfig q;
  q.dimension = 300;
  CHECK_THROWS_AS(generate(q), UnsupportedDimension);
  q.generator = QmcGenerator::Stratified;
  q.scramble_seed = 3;
  CHECK(generate(q).cols == 300);
  QmcConfig bad;
  bad.count = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("uniform points: per-dimension means near one half") {
  for (std::uint64_t seed : {0ULL, 5ULL}) {
    for (QmcGenerator g : {QmcGenerator::Sobol, QmcGenerator::Stratified}) {
      QmcConfig q;
      q.dimension = 168;
      q.count = 256;
      q.scramble_seed = seed;
      q.generator = g;
      const SampleMatrix m = generate_uniform(q);
      for (int c = 0; c < m.cols; ++c) {
        double s = 0.0;
        for (int r = 0; r < m.rows; ++r) {
          const double u = m(r, c);
          REQUIRE(u > 0.0);
          REQUIRE(u < 1.0);
          s += u;
        }
        CHECK(std::fabs(s / m.rows - 0.5) <= 3.0 / std::sqrt(static_cast<double>(m.rows)));
      }
    }
  }
}

TEST_CASE("Sobol gaps are smaller than pseudo-random gaps") {
  QmcConfig q;
  q.dimension = 168;
  q.count = 10000;
  const SampleMatrix sobol = generate_uniform(q);
  SampleMatrix prng{q.count, q.dimension, std::vector<double>(static_cast<std::size_t>(q.count) * q.dimension)};
  SplitMix64 rng(99);
  for (double& v : prng.values) v = rng.uniform();
  double s_worst = 0.0, p_worst = 0.0;
  for (int c = 0; c < q.dimension; ++c) {
    s_worst = std::max(s_worst, max_gap(sobol, c));
    p_worst = std::max(p_worst, max_gap(prng, c));
  }
  CHECK(s_worst < p_worst);
}

TEST_CASE("scrambling is seeded and changes the points") {
  const SampleMatrix a = sobol_points(5, 64, 0, 17);
  const SampleMatrix b = sobol_points(5, 64, 0, 17);
  const SampleMatrix c = sobol_points(5, 64, 0, 18);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  // Owen scrambling keeps the one-dimensional stratification.
  for (int d = 0; d < 5; ++d) {
    std::vector<int> cells(64, 0);
    for (int r = 0; r < 64; ++r) ++cells[static_cast<std::size_t>(a(r, d) * 64)];
    for (int n : cells) CHECK(n == 1);
  }
}

TEST_CASE("normal mapping and determinism") {
  QmcConfig q;
  q.dimension = 3;
  q.count = 8;
  const SampleMatrix u = generate_uniform(q);
  const SampleMatrix z = generate(q);
  CHECK(u(0, 0) == 0.5);  // the origin is skipped
  for (std::size_t i = 0; i < u.values.size(); ++i) CHECK(z.values[i] == normal_quantile(u.values[i]));
  CHECK(generate(q).values == z.values);
}

TEST_CASE("matrix csv round trip") {
  QmcConfig q;
  q.dimension = 4;
  q.count = 5;
  q.scramble_seed = 9;
  const SampleMatrix m = generate(q);
  std::stringstream ss;
  write_matrix_csv(ss, m);
  const SampleMatrix back = read_matrix_csv(ss);
  CHECK(back.rows == m.rows);
  CHECK(back.cols == m.cols);
  CHECK(back.values == m.values);
  std::stringstream bad("v0,v1\n1\n");
  CHECK_THROWS_AS(read_matrix_csv(bad), ParseError);
}
