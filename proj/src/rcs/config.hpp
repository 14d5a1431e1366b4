#pragma once

// Scenario configuration: JSON document <-> validated config <-> Scenario.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcs/policy.hpp"
#include "rcs/sim.hpp"

namespace rcs {

struct PopularityModel {
  std::string model = "piecewise";  // zipf, truncated_geometric, piecewise, explicit
  double s = 1.0;                   // zipf exponent
  double q = 0.95;                  // geometric ratio
  double popular_fraction = 0.2;
  double popular_mass = 0.8;
  double zero_tail_fraction = 0.0;
  double decay = 0.97;
  std::vector<double> weights;      // explicit
};

/// Raw (unnormalized, unsorted) weights for `count` bins.
std::vector<double> popularity_weights(const PopularityModel& model, std::size_t count);

struct BatchSpec {
  std::vector<PolicyKind> policies;
  std::vector<int> randomizations;
  std::vector<std::uint64_t> seeds;
};

struct ScenarioConfig {
  GridSpec grid;
  std::size_t bin_count = 200;
  PopularityModel popularity;
  PolicyKind policy = PolicyKind::LayerComplete;
  double check_period = 300.0;
  double epsilon = 0.2;
  int robots = 4;
  RobotKinematics kinematics;
  double request_rate = 5.0;
  double processing_time = 30.0;
  std::optional<double> horizon_hours;
  std::optional<std::size_t> horizon_requests;
  std::uint64_t seed = 1;
  int initial_randomization = 40;
  int snapshot_cadence = 0;
  std::optional<int> empty_level;  // nullopt = "auto"
  BatchSpec batch;
};

/// Desk-scale defaults: 8 x 6 footprint, H = 6, 200 bins at h_e = 1, buffer
/// stack 40, workstations at (2,5) and (5,5).
ScenarioConfig default_config();

/// Parses and validates a JSON config. Missing keys take defaults; unknown
/// keys and out-of-range values are rejected. Every problem is reported with
/// its JSON pointer in one Error(Validation) (Error(Parse) for bad JSON).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Normalized document: every key present, fixed key order.
std::string serialize_config(const ScenarioConfig& config);

/// Scenario for one run; overrides select a batch cell. Baseline policies
/// drop the buffer stack.
Scenario make_scenario(const ScenarioConfig& config, std::optional<PolicyKind> policy = {},
                       std::optional<int> randomization = {},
                       std::optional<std::uint64_t> seed = {});

}  // namespace rcs
