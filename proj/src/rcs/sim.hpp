#pragma once

// Discrete-event simulation of the retrieval workflow.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcs/model.hpp"
#include "rcs/policy.hpp"
#include "rcs/rng.hpp"
#include "rcs/solver.hpp"

namespace rcs {

struct RobotKinematics {
  double top_speed = 3.1;     // m/s
  double acceleration = 0.8;  // m/s^2
  double lift_speed = 1.6;    // m/s
  double load = 1.2;          // s
  double unload = 1.0;        // s
  double turn = 1.0;          // s
};

void validate_kinematics(const RobotKinematics& k);

/// One-dimensional move from rest to rest: triangular profile below v^2/a,
/// trapezoidal otherwise.
double leg_time(double distance, double top_speed, double acceleration);

/// X leg then Y leg, plus one turn when both legs are nonzero.
double travel_time(Coord from, Coord to, const GridSpec& spec, const RobotKinematics& k);

/// Constant-speed gripper travel over `cells` cells.
double lift_time(int cells, const GridSpec& spec, const RobotKinematics& k);

/// Gripper travel over `cells` cells plus one load and one unload.
double gripper_time(int cells, const GridSpec& spec, const RobotKinematics& k);

struct Request {
  std::uint64_t id = 0;
  double arrival = 0.0;
  BinId bin = kEmptyCell;
  int workstation = 0;
};

struct Horizon {
  std::optional<double> seconds;
  std::optional<std::size_t> requests;
};

/// Poisson arrivals at `rate_per_minute`, bins drawn i.i.d. by popularity,
/// workstations assigned round robin.
std::vector<Request> generate_requests(const BinCatalog& catalog, double rate_per_minute,
                                       const Horizon& horizon, std::uint64_t seed,
                                       int workstations);

/// Swaps floor(percent * N / 200) disjoint pairs of bins drawn uniformly
/// without replacement.
Bgc randomize_from_optimal(const Bgc& optimal, int percent, Rng& rng);

struct Scenario {
  GridSpec spec;
  BinCatalog catalog;  // normalized, unpadded
  PolicyKind policy = PolicyKind::LayerComplete;
  double check_period = 300.0;
  double epsilon = 0.2;
  int robots = 4;
  RobotKinematics kinematics;
  double request_rate = 5.0;       // per minute
  double processing_time = 30.0;   // s
  Horizon horizon;
  std::uint64_t seed = 1;
  int initial_randomization = 0;   // percent
  std::optional<int> empty_level;  // nullopt = optimal
  int snapshot_cadence = 0;        // matrix every n inserts, 0 = never
  std::optional<Bgc> initial;      // replaces the randomized start
  std::optional<std::vector<Request>> requests;  // replaces the generated stream
  bool check_invariants = false;   // conservation checks after every event
};

/// Throws Error(Validation) on any inconsistent field.
void validate_scenario(const Scenario& scenario);

enum class Priority { Return = 0, Reshuffle = 1, Retrieval = 2 };

struct PhaseRecord {
  std::uint64_t job = 0;
  std::string phase;  // Delivery1, Digging, Delivery2, Release, Restore, Delivery3, Insert, BufferCheck
  std::optional<std::uint64_t> request;
  int robot = -1;
  Priority priority = Priority::Retrieval;
  double start = 0.0;
  double end = 0.0;
  StackId stack = 0;
  BinId bin = kEmptyCell;
};

struct RequestRecord {
  std::uint64_t id = 0;
  BinId bin = kEmptyCell;
  int workstation = 0;
  double arrival = 0.0;
  bool zero_task = false;
  int depth = 0;       // layer of the target when digging began, 0 for zero-task
  int bins_above = 0;
  int robot = -1;
  StackId stack = 0;
  double waiting = 0.0;
  double delivery1 = 0.0;
  double digging = 0.0;
  double delivery2 = 0.0;
  double retrieval_time = 0.0;  // sum of the four parts
  std::string storage;          // storage case of the return trip
};

struct SnapshotRecord {
  std::size_t k = 0;  // storage events (returns) so far
  double time = 0.0;
  std::string cause;  // initial, insert, buffer
  std::optional<std::uint64_t> request;
  std::string storage;
  long distance_before = 0;
  long distance_after = 0;
  bool equivalent = false;
  bool quasi_equivalent = false;
  std::optional<Matrix> matrix;
};

struct RobotRecord {
  int id = 0;
  double delivery = 0.0;  // horizontal travel seconds
  double gripper = 0.0;   // lift seconds plus load/unload
  std::size_t tasks = 0;
  double overall() const { return delivery + gripper; }
};

struct EventLog {
  std::string policy;
  std::uint64_t seed = 0;
  int initial_randomization = 0;
  int empty_level = 0;
  int fill_level = 0;
  double epsilon = 0.2;
  double end_time = 0.0;
  std::vector<PhaseRecord> phases;
  std::vector<RequestRecord> requests;
  std::vector<SnapshotRecord> snapshots;
  std::vector<RobotRecord> robots;
  std::optional<std::size_t> lambda;
  std::optional<std::size_t> lambda_epsilon;

  std::string to_ndjson() const;
  static EventLog from_ndjson(const std::string& text);
};

/// Status of a configuration against the layer groups.
SnapshotRecord snapshot_check(const Bgc& bgc, const LayerGroups& groups, double epsilon);

/// Runs the scenario until every generated request has been served and every
/// follow-up job has finished. Throws Error(Deadlock) with a state dump when
/// work remains but nothing can proceed.
EventLog run(const Scenario& scenario);

}  // namespace rcs
