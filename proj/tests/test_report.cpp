#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "rcs/config.hpp"
#include "rcs/error.hpp"
#include "rcs/report.hpp"

using namespace rcs;
namespace fs = std::filesystem;

namespace {

ScenarioConfig short_config(double hours) {
  ScenarioConfig cfg = default_config();
  cfg.horizon_hours = hours;
  return cfg;
}

ReportBundle hand_bundle(const std::string& policy, std::uint64_t seed, std::vector<std::size_t> exceed,
                         double delivery, double gripper) {
  ReportBundle b;
  b.scenario = "s";
  b.policy = policy;
  b.seed = seed;
  b.randomization = 40;
  b.requests = 10;
  for (std::size_t i = 0; i < exceed.size(); ++i) b.exceedance.push_back({kExceedanceThresholds[i], exceed[i]});
  b.robot_time = {delivery + gripper, delivery, gripper};
  return b;
}

}  // namespace

TEST_CASE("quantiles and summaries") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(v, 0.0) == 1);
  CHECK(quantile(v, 1.0) == 4);
  const Summary s = summarize(std::vector<double>{5, 1, 3});
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.median == 3);
  CHECK(s.min == 1);
  CHECK(s.max == 5);
  CHECK(s.iqr == doctest::Approx(s.q3 - s.q1));
}

TEST_CASE("moving statistics") {
  const std::vector<double> v{1, 5, 3, 2, 8};
  const auto avg = moving_average(v, 2);
  REQUIRE(avg.size() == 5);
  CHECK(avg[0].value == 1);
  CHECK(avg[1].value == 3);
  CHECK(avg[4].value == 5);
  const auto mx = moving_maximum(v, 3);
  CHECK(mx[2].value == 5);
  CHECK(mx[3].value == 5);
  CHECK(mx[4].value == 8);
}

TEST_CASE("bundle from a simulated run") {
  const ScenarioConfig cfg = short_config(1.0);
  const EventLog log = run(make_scenario(cfg, PolicyKind::LayerComplete, 40, 2));
  const ReportBundle b = make_bundle(log, scenario_key(cfg), cfg.grid.height);
  CHECK(b.requests == log.requests.size());
  CHECK(b.served + b.zero_task == b.requests);

  std::size_t surface = 0;
  std::size_t served = 0;
  std::vector<double> totals;
  for (const auto& r : log.requests) {
    totals.push_back(r.retrieval_time);
    if (r.zero_task) continue;
    ++served;
    surface += r.bins_above == 0;
  }
  CHECK(b.surface_fraction == doctest::Approx(static_cast<double>(surface) / static_cast<double>(served)));
  // ... and the "0 bins above" bucket of the histogram.
  CHECK(b.bins_above_histogram[1].bucket == "0");
  CHECK(b.surface_fraction == doctest::Approx(static_cast<double>(b.bins_above_histogram[1].count) /
                                              static_cast<double>(b.served)));

  // The mean equals the mean of the partition sums.
  double parts = 0.0;
  for (const auto& s : b.samples) parts += s.waiting + s.delivery1 + s.digging + s.delivery2;
  CHECK(b.summary.mean == doctest::Approx(parts / static_cast<double>(b.samples.size())));
  CHECK(b.summary.mean == doctest::Approx(std::accumulate(totals.begin(), totals.end(), 0.0) /
                                          static_cast<double>(totals.size())));

  std::size_t hist = 0;
  for (const auto& h : b.depth_histogram) hist += h.count;
  CHECK(hist == b.requests);
  REQUIRE(b.exceedance.size() == std::size(kExceedanceThresholds));
  for (std::size_t i = 1; i < b.exceedance.size(); ++i) CHECK(b.exceedance[i].count <= b.exceedance[i - 1].count);
  CHECK(b.robot_time.overall == doctest::Approx(b.robot_time.delivery + b.robot_time.gripper));

  SUBCASE("JSON round trip") { CHECK(bundle_from_json(bundle_to_json(b)) == b); }
  SUBCASE("CSV round trip") { CHECK(bundle_from_csv(bundle_csv(b)) == b); }
  SUBCASE("compared with itself") {
    const std::vector<ReportBundle> one{b};
    const Comparison c = compare_bundles(one, one);
    for (const auto& row : c.rows) {
      REQUIRE(row.reduction_percent.has_value());
      CHECK(*row.reduction_percent == 0.0);
    }
  }
}

TEST_CASE("empty run gives header-only tables") {
  EventLog log;
  log.policy = "lcp";
  const ReportBundle b = make_bundle(log, "s", 6);
  for (const auto& [name, text] : bundle_csv(b)) {
    if (name == "meta.csv") continue;
    CAPTURE(name);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
  CHECK(bundle_from_csv(bundle_csv(b)) == b);
  CHECK(bundle_from_json(bundle_to_json(b)) == b);
}

TEST_CASE("comparison arithmetic") {
  const std::vector<ReportBundle> ref{hand_bundle("lcp", 1, {10, 4, 0, 0, 0, 0, 0}, 100, 50),
                                      hand_bundle("lcp", 2, {6, 2, 1, 0, 0, 0, 0}, 80, 30)};
  const std::vector<ReportBundle> base{hand_bundle("delayed", 1, {20, 8, 0, 1, 0, 0, 0}, 150, 60),
                                       hand_bundle("delayed", 2, {12, 4, 0, 0, 0, 0, 0}, 90, 40)};
  const Comparison c = compare_bundles(ref, base);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  REQUIRE(c.rows.size() == 10);
  CHECK(c.rows[0].metric == "exceed_30");
  CHECK(c.rows[0].reference == 16);
  CHECK(c.rows[0].baseline == 32);
  CHECK(*c.rows[0].reduction_percent == doctest::Approx(50.0));
  CHECK(*c.rows[1].reduction_percent == doctest::Approx(50.0));
  CHECK_FALSE(c.rows[2].reduction_percent.has_value());  // 1 against 0
  CHECK(*c.rows[3].reduction_percent == doctest::Approx(100.0));
  CHECK(*c.rows[4].reduction_percent == 0.0);
  CHECK(c.rows[7].metric == "robot_overall");
  CHECK(*c.rows[7].reduction_percent == doctest::Approx((340.0 - 260.0) / 340.0 * 100.0));
  CHECK(*c.rows[8].reduction_percent == doctest::Approx((240.0 - 180.0) / 240.0 * 100.0));
  CHECK(*c.rows[9].reduction_percent == doctest::Approx(20.0));

  std::vector<ReportBundle> other = base;
  other[1].scenario = "t";
  CHECK_THROWS_AS(compare_bundles(ref, other), Error);
  other = base;
  other[1].randomization = 100;
  CHECK_THROWS_AS(compare_bundles(ref, other), Error);
  other = base;
  other[1].seed = 3;
  CHECK_THROWS_AS(compare_bundles(ref, other), Error);

  std::vector<ReportBundle> all = ref;
  all.insert(all.end(), base.begin(), base.end());
  const auto per_level = compare_policies(all);
  REQUIRE(per_level.size() == 1);
  CHECK(per_level[0].baseline_policy == "delayed");
  CHECK_THROWS_AS(compare_policies(base), Error);

  const auto agg = aggregate_bundles(all);
  const auto robot = std::find_if(agg.begin(), agg.end(), [](const AggregateRow& r) {
    return r.policy == "lcp" && r.metric == "robot_overall";
  });
  REQUIRE(robot != agg.end());
  CHECK(robot->runs == 2);
  CHECK(robot->mean == doctest::Approx(130.0));
  CHECK(robot->stddev == doctest::Approx(std::sqrt(2 * 20.0 * 20.0)));
}

TEST_CASE("batch grid") {
  ScenarioConfig cfg = short_config(0.25);
  cfg.batch.seeds = {1};
  const BatchResult r = run_batch(cfg);
  CHECK(r.failures.empty());
  REQUIRE(r.bundles.size() == 9);
  CHECK(r.aggregate.size() == 9 * 8);
  const BatchResult again = run_batch(cfg);
  CHECK(again.bundles == r.bundles);

  const fs::path dir = fs::temp_directory_path() / "rcs_report_test";
  fs::remove_all(dir);
  emit_reports(r, dir.string());
  CHECK(fs::exists(dir / "aggregate.csv"));
  CHECK(fs::exists(dir / "comparison.csv"));
  CHECK(fs::exists(dir / "failures.csv"));
  CHECK(fs::exists(dir / "lcp_r40_s1" / "samples.csv"));
  const auto loaded = load_bundles(dir.string());
  REQUIRE(loaded.size() == 9);
  for (const auto& b : r.bundles) {
    CHECK(std::find(loaded.begin(), loaded.end(), b) != loaded.end());
  }
  fs::remove_all(dir);

  try {
    emit_reports(r, "/proc/rcs-cannot-write");
    FAIL("expected an Io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("failing batch cells are recorded") {
  ScenarioConfig cfg = short_config(0.1);
  cfg.batch.policies = {PolicyKind::DelayedReshuffle};
  cfg.batch.randomizations = {0};
  cfg.batch.seeds = {1, 2};
  cfg.robots = 0;
  const BatchResult r = run_batch(cfg);
  CHECK(r.bundles.empty());
  CHECK(r.failures.size() == 2);
}
