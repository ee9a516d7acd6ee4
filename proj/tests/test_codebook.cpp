#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "netburst/codebook.hpp"
#include "netburst/synth.hpp"

using namespace netburst;

TEST_CASE("quartile codebook on 1..8 matches hand-computed quantiles") {
  std::vector<double> vals{1, 2, 3, 4, 5, 6, 7, 8};
  Codebook cb = fit_quantile(vals, 4);
  REQUIRE(cb.bins() == 4);
  CHECK(cb.boundaries == std::vector<double>{1, 2.5, 4.5, 6.5, 8});
  CHECK(cb.centroids == std::vector<double>{1.5, 3.5, 5.5, 7.5});
}

TEST_CASE("fit_quantile rejects degenerate inputs") {
  CHECK_THROWS_AS(fit_quantile({3, 3, 3, 3}, 4), DataError);
  CHECK_THROWS_AS(fit_quantile({}, 4), DataError);
  CHECK_THROWS_AS(fit_quantile({1, 2, 3}, 1), ConfigError);
}

TEST_CASE("fit_uniform spaces boundaries evenly with midpoint centroids") {
  std::vector<double> vals{0, 1, 3, 8, 5};
  Codebook cb = fit_uniform(vals, 4);
  CHECK(cb.boundaries == std::vector<double>{0, 2, 4, 6, 8});
  CHECK(cb.centroids == std::vector<double>{1, 3, 5, 7});
  CHECK_THROWS_AS(fit_uniform({5, 5, 5}, 4), DataError);

  Codebook two = fit_uniform({0, 1, 100}, 2);
  CHECK(two.boundaries == std::vector<double>{0, 50, 100});
  CHECK(two.encode(0) == 0);
  CHECK(two.encode(1) == 0);  // the dense bottom shares one bin
  CHECK(two.encode(100) == 1);
}

TEST_CASE("encode is left-closed with clamping edges") {
  Codebook cb = fit_quantile({1, 2, 3, 4, 5, 6, 7, 8}, 4);
  CHECK(cb.encode(6.0) == 2);
  CHECK(cb.encode(1.0) == 0);      // left edge
  CHECK(cb.encode(8.0) == 3);      // last bin right-closed
  CHECK(cb.encode(1e9) == 3);      // clamp above
  CHECK(cb.encode(-50.0) == 0);    // clamp below
  CHECK(cb.decode(2) == 5.5);
  CHECK_THROWS_AS(cb.decode(-1), ConfigError);
  CHECK_THROWS_AS(cb.decode(4), ConfigError);
}

TEST_CASE("decode then encode is a fixed point on tokens") {
  std::vector<double> vals = pareto_sample(1.5, 1.0, 99, 4000);
  for (int bins : {4, 16, 64}) {
    Codebook cb = fit_quantile(vals, bins);
    for (int t = 0; t < cb.bins(); ++t) CHECK(cb.encode(cb.decode(t)) == t);
    Codebook ub = fit_uniform(vals, bins);
    for (int t = 0; t < ub.bins(); ++t) CHECK(ub.encode(ub.decode(t)) == t);
  }
}

TEST_CASE("equal mass within one sample for distinct values") {
  std::vector<double> vals = pareto_sample(1.5, 1.0, 7, 10000);
  std::sort(vals.begin(), vals.end());
  CHECK(std::adjacent_find(vals.begin(), vals.end()) == vals.end());
  for (int bins : {16, 64, 256}) {
    Codebook cb = fit_quantile(vals, bins);
    REQUIRE(cb.bins() == bins);
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : vals) ++counts[static_cast<std::size_t>(cb.encode(v))];
    double target = 10000.0 / bins;
    for (int c : counts) CHECK(std::abs(c - target) <= 1.0);
  }
}

TEST_CASE("ties merge boundaries and shrink the effective bin count") {
  // 97% mass on one value: every interior quantile collapses onto it
  std::vector<double> heavy(97, 10.0);
  heavy.insert(heavy.end(), {2600, 2800, 3000});
  Codebook collapsed = fit_quantile(heavy, 8);
  CHECK(collapsed.bins() == 1);
  CHECK(collapsed.requested_bins == 8);
  CHECK(collapsed.encode(10.0) == 0);
  CHECK(collapsed.encode(3000.0) == 0);

  // with half the mass on spikes the top splits while ties still merge
  std::vector<double> mixed(4, 10.0);
  mixed.insert(mixed.end(), {2600, 2800, 2900, 3000});
  Codebook cb = fit_quantile(mixed, 8);
  CHECK(cb.bins() < 8);
  CHECK(cb.bins() >= 2);
  CHECK(cb.encode(10.0) == 0);
  for (int t = 0; t < cb.bins(); ++t) {
    CHECK(cb.encode(cb.decode(t)) == t);
    CHECK(cb.decode(t) >= cb.boundaries[static_cast<std::size_t>(t)]);
    CHECK(cb.decode(t) <= cb.boundaries[static_cast<std::size_t>(t) + 1]);
  }
}

TEST_CASE("order preservation and round-trip bound") {
  std::vector<double> vals = pareto_sample(2.0, 1.0, 123, 5000);
  Codebook q = fit_quantile(vals, 32);
  Codebook u = fit_uniform(vals, 32);
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    CHECK(q.encode(sorted[i - 1]) <= q.encode(sorted[i]));
    CHECK(u.encode(sorted[i - 1]) <= u.encode(sorted[i]));
  }
  for (const Codebook& cb : {q, u}) {
    for (std::size_t i = 0; i < vals.size(); i += 7) {
      int tok = cb.encode(vals[i]);
      double width = cb.boundaries[static_cast<std::size_t>(tok) + 1] -
                     cb.boundaries[static_cast<std::size_t>(tok)];
      CHECK(std::abs(vals[i] - cb.decode(tok)) <= width);
    }
  }
}

TEST_CASE("median centroids stay inside their bin") {
  std::vector<double> vals = pareto_sample(1.2, 1.0, 5, 2000);
  Codebook cb = fit_quantile(vals, 16, CentroidStat::median);
  for (int t = 0; t < cb.bins(); ++t) {
    CHECK(cb.decode(t) >= cb.boundaries[static_cast<std::size_t>(t)]);
    CHECK(cb.decode(t) <= cb.boundaries[static_cast<std::size_t>(t) + 1]);
  }
}

TEST_CASE("codebook file round trip is bit-faithful") {
  std::vector<double> vals = pareto_sample(1.5, 1.0, 31337, 3000);
  Codebook cb = fit_quantile(vals, 64);
  std::string path = "/tmp/netburst_test_codebook.txt";
  save_codebook(cb, path);
  Codebook back = load_codebook(path);
  CHECK(back.scheme == cb.scheme);
  CHECK(back.requested_bins == cb.requested_bins);
  CHECK(back.boundaries == cb.boundaries);
  CHECK(back.centroids == cb.centroids);
  std::remove(path.c_str());
}
