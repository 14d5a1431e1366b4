#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rcs/error.hpp"
#include "rcs/solver.hpp"

using namespace rcs;

TEST_CASE("build_optimal_bgc") {
  SUBCASE("forced layers") {
    const auto spec = fixtures::grid(1, 2, 2, 2);
    const BinCatalog c({0.4, 0.3, 0.2, 0.1});
    const Bgc b = build_optimal_bgc(spec, c, 0);
    CHECK(b.to_matrix() == Matrix{{1, 2}, {3, 4}});
  }
  SUBCASE("bins below the empty level") {
    const auto spec = fixtures::grid(1, 3, 4, 2);
    const BinCatalog c = normalize_catalog(std::vector<double>{6, 5, 4, 3, 2, 1});
    const Bgc b = build_optimal_bgc(spec, c, 2);
    CHECK(b.to_matrix() == Matrix{{0, 0, 0}, {0, 0, 0}, {1, 2, 3}, {4, 5, 6}});
  }
  SUBCASE("validation") {
    const auto spec = fixtures::grid(1, 2, 2, 2);
    CHECK_THROWS_AS(build_optimal_bgc(spec, BinCatalog({0.5, 0.3, 0.2}), 0), Error);
    CHECK_THROWS_AS(build_optimal_bgc(spec, BinCatalog({0.5, 0.3, 0.2}), 2), Error);
    CHECK_THROWS_AS(build_optimal_bgc(fixtures::grid(1, 1, 2, 2), BinCatalog({0.4, 0.3, 0.2, 0.1}), 0), Error);
  }
}

TEST_CASE("optimal layout matches exhaustive enumeration") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = fixtures::random_instance(rng, 9);
    const int H = inst.spec.height;
    const int he = inst.empty_level;
    GridSpec spec = inst.spec;
    spec.fill_level = H - he;
    const BinCatalog padded = pad_with_empty_bins(spec.fill_level, inst.catalog);
    const Bgc opt = build_optimal_bgc(spec, padded, he);
    std::vector<std::int64_t> w(inst.weights);
    w.resize(padded.size(), 0);
    const CostTable table(H);
    const auto got = weighted_retrieval_cost<std::int64_t>(opt, w, table);
    const int mf = spec.occupied_stacks(padded.size());
    CHECK(got == oracle::min_weighted_cost(w, H, he, mf));
  }
}

TEST_CASE("optimal empty level") {
  SUBCASE("H=1 has one candidate") {
    GridSpec spec = fixtures::grid(1, 3, 1, 1);
    const auto c = normalize_catalog(std::vector<double>{3, 2, 1});
    const auto s = optimal_empty_level(spec, c, CostTable(1));
    CHECK(s.empty_level == 0);
    CHECK(s.expected_cost.size() == 1);
  }
  SUBCASE("per-level brute force") {
    GridSpec spec = fixtures::grid(2, 3, 4, 4);
    spec.reserve_fraction = 0.25;
    const std::vector<double> raw{40, 20, 10, 8, 6, 5, 4, 3, 2, 1, 1};
    const auto c = normalize_catalog(raw);
    const CostTable t(4);
    const auto s = optimal_empty_level(spec, c, t);
    REQUIRE(s.expected_cost.size() == 2);
    double best = 1e300;
    int arg = -1;
    for (int he = 0; he <= 1; ++he) {
      const int hc = 4 - he;
      const BinCatalog padded = pad_with_empty_bins(hc, c);
      const int mf = static_cast<int>((padded.size() + hc - 1) / hc);
      double e = 0.0;
      for (BinId n = 1; n <= padded.size(); ++n) {
        const int rank = static_cast<int>((n - 1) / static_cast<BinId>(mf));
        e += padded.popularity(n) * static_cast<double>(oracle::retrieval(he + 1 + rank, he));
      }
      CHECK(*s.expected_cost[static_cast<std::size_t>(he)] == doctest::Approx(e).epsilon(1e-12));
      if (e < best) {
        best = e;
        arg = he;
      }
    }
    CHECK(s.empty_level == arg);
  }
  SUBCASE("candidates that need too many stacks") {
    GridSpec spec = fixtures::grid(1, 3, 3, 3);
    spec.reserve_fraction = 0.5;
    const auto c = normalize_catalog(std::vector<double>(8, 1.0));
    const auto s = optimal_empty_level(spec, c, CostTable(3), false);
    REQUIRE(s.expected_cost.size() == 3);
    CHECK(s.expected_cost[0].has_value());
    CHECK_FALSE(s.expected_cost[1].has_value());
    CHECK_FALSE(s.expected_cost[2].has_value());
    CHECK_THROWS_AS(optimal_empty_level(spec, c, CostTable(3), true), Error);
  }
}

TEST_CASE("layer groups with repeated popularity") {
  const auto ex = fixtures::repeated_popularity();
  const LayerGroups& g = ex.groups;
  CHECK(g.group_count() == 3);
  CHECK(g.empty_level() == 0);
  CHECK(g.bins_per_group() == 3);
  for (BinId b : {1u, 2u, 3u}) {
    CHECK(g.group_of(b) == 1);
    CHECK(std::vector<int>(g.candidates(b).begin(), g.candidates(b).end()) == std::vector<int>{1});
  }
  for (BinId b = 4; b <= 9; ++b) {
    CHECK(std::vector<int>(g.candidates(b).begin(), g.candidates(b).end()) == std::vector<int>{2, 3});
    CHECK(g.equality_class(b) == g.equality_class(4));
  }
  CHECK(g.equality_class(1) != g.equality_class(2));
  CHECK(std::vector<BinId>(g.members(1).begin(), g.members(1).end()) == std::vector<BinId>{1, 2, 3});
}

TEST_CASE("equality classes") {
  SUBCASE("all distinct") {
    const auto layout = fixtures::layout(1, 3, 2, normalize_catalog(std::vector<double>{6, 5, 4, 3, 2, 1}));
    const LayerGroups g(layout.bgc, layout.catalog);
    for (BinId b = 1; b <= 6; ++b) CHECK(g.candidates(b).size() == 1);
  }
  SUBCASE("all equal") {
    const auto layout = fixtures::layout(1, 3, 3, normalize_catalog(std::vector<double>(9, 1.0)));
    const LayerGroups g(layout.bgc, layout.catalog);
    for (BinId b = 1; b <= 9; ++b) CHECK(g.candidates(b).size() == 3);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
      std::vector<BinId> bins{1, 2, 3, 4, 5, 6, 7, 8, 9};
      std::shuffle(bins.begin(), bins.end(), rng);
      bins.resize(3);
      CHECK(is_layer_complete(bins, g));
    }
  }
}

TEST_CASE("layer-complete stacks") {
  const auto ex = fixtures::repeated_popularity();
  const Bgc& b = ex.pictured;
  CHECK(is_layer_complete(b.stack(0), ex.groups));
  CHECK_FALSE(is_layer_complete(b.stack(1), ex.groups));
  CHECK_FALSE(is_layer_complete(b.stack(2), ex.groups));
  CHECK_FALSE(is_equivalent_optimal(b, ex.groups));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto sample = fixtures::random_stack(rng);
    const bool expect = oracle::layer_complete(sample.bins, sample.groups);
    CHECK(is_layer_complete(sample.bins, sample.groups) == expect);
    std::vector<std::vector<int>> options;
    for (BinId x : sample.bins) {
      const auto c = sample.groups.candidates(x);
      options.emplace_back(c.begin(), c.end());
    }
    CHECK(classified_groups(sample.bins, sample.groups) == oracle::max_distinct_groups(options));
  }
}

TEST_CASE("classified_groups assignment and limit") {
  const auto ex = fixtures::repeated_popularity();
  std::vector<int> assignment;
  const std::vector<BinId> bins{2, 3, 6};
  CHECK(classified_groups(bins, ex.groups, 0, &assignment) == 2);
  REQUIRE(assignment.size() == 3);
  CHECK(std::count(assignment.begin(), assignment.end(), 0) == 1);
  CHECK(classified_groups(bins, ex.groups, 1) == 1);
  const std::vector<BinId> tail{7, 8, 9};
  CHECK(classified_groups(tail, ex.groups, 1) == 0);
}

TEST_CASE("equivalent optimal configurations") {
  const auto layout = fixtures::layout(2, 3, 3, normalize_catalog(std::vector<double>{9, 8, 7, 6, 5, 4, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}));
  const LayerGroups g(layout.bgc, layout.catalog);
  CHECK(is_equivalent_optimal(layout.bgc, g));
  CHECK(distance_to_equivalent_optimal(layout.bgc, g) == 0);

  Matrix m = layout.bgc.to_matrix();
  std::reverse(m.begin(), m.end());  // every stack upside down
  CHECK(is_equivalent_optimal(Bgc::from_matrix(m), g));

  Matrix swapped = layout.bgc.to_matrix();
  std::swap(swapped[0][0], swapped[1][1]);  // group 1 of stack 0 with group 2 of stack 1
  const Bgc s = Bgc::from_matrix(swapped);
  CHECK_FALSE(is_equivalent_optimal(s, g));
  CHECK(distance_to_equivalent_optimal(s, g) == 4);
}

TEST_CASE("quasi-equivalent optimal configurations") {
  const auto ex = fixtures::repeated_popularity();
  CHECK(popular_group_count(ex.groups, 1.0) == 3);
  CHECK(popular_group_count(ex.groups, 0.2) == 1);
  CHECK(popular_group_count(ex.groups, 1e-9) == 1);
  CHECK(popular_group_count(ex.groups, 2.0 / 3.0) == 2);
  // The pictured layout lacks group 1 in stack 3.
  CHECK_FALSE(is_quasi_equivalent_optimal(ex.pictured, ex.groups, 0.2));
  const Bgc only_first = Bgc::from_matrix({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(is_quasi_equivalent_optimal(only_first, ex.groups, 0.2));

  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    Matrix m = ex.pictured.to_matrix();
    std::vector<BinId> flat;
    for (auto& row : m) flat.insert(flat.end(), row.begin(), row.end());
    std::shuffle(flat.begin(), flat.end(), rng);
    for (std::size_t i = 0; i < flat.size(); ++i) m[i / 3][i % 3] = flat[i];
    const Bgc b = Bgc::from_matrix(m);
    CHECK(is_quasi_equivalent_optimal(b, ex.groups, 1.0) == is_equivalent_optimal(b, ex.groups));
  }
}

TEST_CASE("stack distance") {
  CHECK(stack_distance({1, 1, 1, 2, 5}, {1, 2, 3, 4, 5}) == 4);
  CHECK(stack_distance({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(stack_distance({}, {1, 2}) == 2);

  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> size(0, 6);
  std::uniform_int_distribution<int> label(1, 4);
  const auto draw = [&] {
    StackMultiset s(static_cast<std::size_t>(size(rng)));
    for (int& x : s) x = label(rng);
    std::sort(s.begin(), s.end());
    return s;
  };
  for (int t = 0; t < 500; ++t) {
    const auto a = draw();
    const auto b = draw();
    const auto c = draw();
    CHECK(stack_distance(a, a) == 0);
    CHECK(stack_distance(a, b) == stack_distance(b, a));
    CHECK(stack_distance(a, c) <= stack_distance(a, b) + stack_distance(b, c));
    if (a != b) CHECK(stack_distance(a, b) > 0);
  }
}

TEST_CASE("distance to an equivalent optimal configuration") {
  const auto ex = fixtures::repeated_popularity();
  CHECK(stack_distance_to_complete(ex.pictured.stack(0), ex.groups) == 0);
  CHECK(stack_distance_to_complete(ex.pictured.stack(1), ex.groups) == 2);
  CHECK(stack_distance_to_complete(ex.pictured.stack(2), ex.groups) == 2);
  CHECK(distance_to_equivalent_optimal(ex.pictured, ex.groups) == 4);
  // Agrees with the multiset definition on the best labelling.
  for (int m = 0; m < 3; ++m) {
    const auto labels = stack_labels(ex.pictured.stack(static_cast<StackId>(m)), ex.groups);
    CHECK(stack_distance(labels, {1, 2, 3}) ==
          stack_distance_to_complete(ex.pictured.stack(static_cast<StackId>(m)), ex.groups));
  }
}

TEST_CASE("expected requests to collect every out-of-place bin") {
  CHECK(expected_transform_requests(std::vector<double>{0.5, 0.5}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(expected_transform_requests(std::vector<double>{1.0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expected_transform_requests(std::vector<double>{}) == 0.0);
  CHECK(std::isinf(expected_transform_requests(std::vector<double>{0.3, 0.0})));
  CHECK_THROWS_AS(expected_transform_requests(std::vector<double>{-0.1}), Error);
  CHECK_THROWS_AS(expected_transform_requests(std::vector<double>{0.7, 0.7}), Error);
  CHECK_THROWS_AS(expected_transform_requests(std::vector<double>(21, 0.01)), Error);

  const std::vector<double> setup1{0.2, 0.1};
  const double mc = oracle::monte_carlo_collector(setup1, 200000, 99);
  CHECK(expected_transform_requests(setup1) == doctest::Approx(mc).epsilon(0.01));

  // Equal probabilities: n * H_n.
  for (int n = 1; n <= 8; ++n) {
    double harmonic = 0.0;
    for (int k = 1; k <= n; ++k) harmonic += 1.0 / k;
    const std::vector<double> p(static_cast<std::size_t>(n), 1.0 / n);
    CHECK(expected_transform_requests(p) == doctest::Approx(n * harmonic).epsilon(1e-9));
  }
}
