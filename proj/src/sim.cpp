#include "rcs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace rcs {

using nlohmann::json;

void validate_kinematics(const RobotKinematics& k) {
  const std::pair<const char*, double> fields[] = {
      {"top_speed", k.top_speed}, {"acceleration", k.acceleration}, {"lift_speed", k.lift_speed},
      {"load", k.load},           {"unload", k.unload},             {"turn", k.turn}};
  for (const auto& [name, v] : fields) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw Error(ErrorKind::Validation, std::string("kinematics: ") + name + " must be positive");
    }
  }
}

double leg_time(double distance, double top_speed, double acceleration) {
  if (distance <= 0.0) return 0.0;
  if (distance < top_speed * top_speed / acceleration) return 2.0 * std::sqrt(distance / acceleration);
  return distance / top_speed + top_speed / acceleration;
}

double travel_time(Coord from, Coord to, const GridSpec& spec, const RobotKinematics& k) {
  const double dx = std::abs(to.x - from.x) * spec.cell_length;
  const double dy = std::abs(to.y - from.y) * spec.cell_width;
  double t = leg_time(dx, k.top_speed, k.acceleration) + leg_time(dy, k.top_speed, k.acceleration);
  if (dx > 0.0 && dy > 0.0) t += k.turn;
  return t;
}

double lift_time(int cells, const GridSpec& spec, const RobotKinematics& k) {
  if (cells < 0) throw Error(ErrorKind::Domain, "lift time: negative cell count");
  return cells * spec.bin_height / k.lift_speed;
}

double gripper_time(int cells, const GridSpec& spec, const RobotKinematics& k) {
  return lift_time(cells, spec, k) + k.load + k.unload;
}

std::vector<Request> generate_requests(const BinCatalog& catalog, double rate_per_minute,
                                       const Horizon& horizon, std::uint64_t seed,
                                       int workstations) {
  if (!(rate_per_minute > 0.0)) throw Error(ErrorKind::Validation, "request rate must be positive");
  if (workstations < 1) throw Error(ErrorKind::Validation, "at least one workstation required");
  if (horizon.seconds.has_value() == horizon.requests.has_value()) {
    throw Error(ErrorKind::Validation, "horizon needs exactly one of seconds or requests");
  }
  std::vector<double> cum;
  cum.reserve(catalog.size());
  double total = 0.0;
  for (double p : catalog.popularities()) cum.push_back(total += p);

  Rng arrivals = make_rng(seed, RngStream::Arrivals);
  Rng targets = make_rng(seed, RngStream::Targets);
  const double rate = rate_per_minute / 60.0;
  std::vector<Request> out;
  double t = 0.0;
  for (std::uint64_t i = 0;; ++i) {
    if (horizon.requests && out.size() >= *horizon.requests) break;
    t += arrivals.exponential(rate);
    if (horizon.seconds && t >= *horizon.seconds) break;
    const double u = targets.uniform() * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (idx >= cum.size()) {
      // u rounded up to the total: take the last bin with positive mass.
      idx = cum.size() - 1;
      while (idx > 0 && catalog.popularities()[idx] == 0.0) --idx;
    }
    out.push_back({i, t, static_cast<BinId>(idx + 1), static_cast<int>(i % workstations)});
  }
  return out;
}

Bgc randomize_from_optimal(const Bgc& optimal, int percent, Rng& rng) {
  if (percent < 0 || percent > 100) {
    throw Error(ErrorKind::Validation, "randomization percent must lie in 0..100");
  }
  Matrix cells = optimal.to_matrix();
  std::vector<std::pair<std::size_t, std::size_t>> where;
  std::vector<BinId> ids;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (cells[r][c] != kEmptyCell) ids.push_back(cells[r][c]);
    }
  }
  std::sort(ids.begin(), ids.end());
  where.resize(ids.empty() ? 0 : ids.back() + 1);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (cells[r][c] != kEmptyCell) where[cells[r][c]] = {r, c};
    }
  }
  const std::size_t pairs = static_cast<std::size_t>(percent) * ids.size() / 200;
  for (std::size_t i = 0; i < 2 * pairs; ++i) {
    std::swap(ids[i], ids[i + rng.index(ids.size() - i)]);
  }
  for (std::size_t q = 0; q < pairs; ++q) {
    const auto [r1, c1] = where[ids[2 * q]];
    const auto [r2, c2] = where[ids[2 * q + 1]];
    std::swap(cells[r1][c1], cells[r2][c2]);
  }
  return Bgc::from_matrix(cells);
}

void validate_scenario(const Scenario& sc) {
  std::vector<std::string> problems;
  if (sc.catalog.size() == 0) problems.push_back("catalog is empty");
  if (sc.robots < 1) problems.push_back("robots must be at least 1");
  if (!(sc.request_rate > 0.0)) problems.push_back("request rate must be positive");
  if (!(sc.processing_time >= 0.0)) problems.push_back("processing time must be non-negative");
  if (!(sc.check_period > 0.0)) problems.push_back("buffer check period must be positive");
  if (!(sc.epsilon > 0.0 && sc.epsilon <= 1.0)) problems.push_back("epsilon must lie in (0, 1]");
  if (sc.initial_randomization < 0 || sc.initial_randomization > 100) {
    problems.push_back("initial randomization must lie in 0..100");
  }
  if (sc.snapshot_cadence < 0) problems.push_back("snapshot cadence must be non-negative");
  if (!sc.requests && sc.horizon.seconds.has_value() == sc.horizon.requests.has_value()) {
    problems.push_back("horizon needs exactly one of seconds or requests");
  }
  if (sc.spec.workstations.empty()) problems.push_back("at least one workstation required");
  try {
    validate_kinematics(sc.kinematics);
    validate_policy_grid(sc.policy, sc.spec);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::Validation, msg);
  }
}

SnapshotRecord snapshot_check(const Bgc& bgc, const LayerGroups& groups, double epsilon) {
  SnapshotRecord s;
  s.distance_after = distance_to_equivalent_optimal(bgc, groups);
  s.distance_before = s.distance_after;
  s.equivalent = s.distance_after == 0;
  s.quasi_equivalent = is_quasi_equivalent_optimal(bgc, groups, epsilon);
  return s;
}

namespace {

const char* priority_name(Priority p) {
  switch (p) {
    case Priority::Return: return "return";
    case Priority::Reshuffle: return "reshuffle";
    case Priority::Retrieval: return "retrieval";
  }
  return "?";
}

Priority parse_priority(const std::string& s) {
  if (s == "return") return Priority::Return;
  if (s == "reshuffle") return Priority::Reshuffle;
  return Priority::Retrieval;
}

enum class JobKind { Retrieval, Restore, Return, BufferCheck };

struct Job {
  std::uint64_t seq = 0;
  JobKind kind = JobKind::Retrieval;
  Priority priority = Priority::Retrieval;
  std::size_t request = 0;
  StackId target = 0;
  std::vector<DigMove> moves;
  std::vector<char> temporary;
  std::vector<StackId> locks;
  int robot = -1;
};

enum class EventKind { Arrival = 0, DiggingEnd = 1, Released = 2, ProcessingDone = 3, JobEnd = 4, BufferTimer = 5 };

struct Event {
  double time;
  int priority;
  std::uint64_t request;
  int kind;
  std::uint64_t seq;
  std::uint64_t ref;  // request index or job sequence

  auto key() const { return std::tie(time, priority, request, kind, seq); }
  bool operator>(const Event& o) const { return key() > o.key(); }
};

enum class StartResult { Started, Blocked, Dropped };

struct Robot {
  Coord pos;
  RobotRecord stats;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& sc) : sc_(sc), storage_rng_(make_rng(sc.seed, RngStream::Storage)) {}

  EventLog run() {
    validate_scenario(sc_);
    setup();
    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      now_ = ev.time;
      handle(ev);
      dispatch();
    }
    if (!pending_.empty() || !active_.empty()) {
      throw Error(ErrorKind::Deadlock, deadlock_dump());
    }
    log_.end_time = now_;
    for (const auto& r : robots_) log_.robots.push_back(r.stats);
    return std::move(log_);
  }

 private:
  void setup() {
    layout_ = solve_layout(sc_.spec, sc_.catalog, sc_.empty_level,
                           sc_.policy == PolicyKind::LayerComplete);
    spec_ = layout_.spec;
    validate_grid_spec(spec_, layout_.catalog.size());
    groups_ = LayerGroups(layout_.bgc, layout_.catalog);
    lcp_.groups = groups_;
    lcp_.buffer_stack = spec_.buffer_stack.value_or(0);
    lcp_.check_period = sc_.check_period;
    lcp_.epsilon = sc_.epsilon;
    occupied_.assign(groups_.occupied_stacks().begin(), groups_.occupied_stacks().end());

    if (sc_.initial) {
      check_initial(*sc_.initial);
      physical_ = *sc_.initial;
    } else {
      Rng rng = make_rng(sc_.seed, RngStream::Randomization);
      physical_ = randomize_from_optimal(layout_.bgc, sc_.initial_randomization, rng);
    }
    logical_ = physical_;
    n_bins_ = layout_.catalog.size();
    claimed_.assign(n_bins_ + 1, 0);
    locks_.assign(static_cast<std::size_t>(spec_.stack_count()), 0);

    requests_ = sc_.requests ? *sc_.requests
                             : generate_requests(layout_.catalog, sc_.request_rate, sc_.horizon,
                                                 sc_.seed,
                                                 static_cast<int>(spec_.workstations.size()));
    check_requests();

    for (int i = 0; i < sc_.robots; ++i) {
      Robot r;
      r.stats.id = i;
      r.pos = spec_.workstations[static_cast<std::size_t>(i) % spec_.workstations.size()];
      robots_.push_back(r);
      free_.push_back(i);
    }

    log_.policy = to_string(sc_.policy);
    log_.seed = sc_.seed;
    log_.initial_randomization = sc_.initial_randomization;
    log_.empty_level = groups_.empty_level();
    log_.fill_level = groups_.group_count();
    log_.epsilon = sc_.epsilon;
    log_.requests.resize(requests_.size());

    SnapshotRecord first = snapshot_check(logical_, groups_, sc_.epsilon);
    first.cause = "initial";
    push_snapshot(std::move(first), true);

    double last_arrival = 0.0;
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      schedule(requests_[i].arrival, Priority::Retrieval, requests_[i].id, EventKind::Arrival, i);
      last_arrival = std::max(last_arrival, requests_[i].arrival);
    }
    last_arrival_ = last_arrival;
    if (sc_.policy == PolicyKind::LayerComplete && sc_.check_period <= last_arrival_) {
      schedule(sc_.check_period, Priority::Reshuffle, 0, EventKind::BufferTimer, 0);
    }
  }

  void check_initial(const Bgc& b) const {
    if (b.height() != spec_.height || b.stack_count() != spec_.stack_count()) {
      throw Error(ErrorKind::Validation, "initial configuration does not match the grid shape");
    }
    if (b.bin_count() != layout_.catalog.size()) {
      throw Error(ErrorKind::Validation, "initial configuration must hold every bin of the catalog");
    }
    for (BinId id = 1; id <= layout_.catalog.size(); ++id) {
      if (!b.stack_of(id)) {
        throw Error(ErrorKind::Validation, "initial configuration misses bin " + std::to_string(id));
      }
    }
    for (int m = 0; m < b.stack_count(); ++m) {
      const auto id = static_cast<StackId>(m);
      if (b.temporary_occupied(id)) {
        throw Error(ErrorKind::Validation, "initial configuration uses a temporary cell");
      }
      const bool allowed = std::find(occupied_.begin(), occupied_.end(), id) != occupied_.end() ||
                           (spec_.buffer_stack && *spec_.buffer_stack == id);
      if (!allowed && !b.stack(id).empty()) {
        throw Error(ErrorKind::Validation,
                    "initial configuration stores bins on stack " + std::to_string(m));
      }
    }
  }

  void check_requests() const {
    double prev = 0.0;
    for (const auto& r : requests_) {
      if (r.bin == kEmptyCell || r.bin > n_bins_) {
        throw Error(ErrorKind::Validation, "request for unknown bin " + std::to_string(r.bin));
      }
      if (r.workstation < 0 || static_cast<std::size_t>(r.workstation) >= spec_.workstations.size()) {
        throw Error(ErrorKind::Validation, "request names an unknown workstation");
      }
      if (r.arrival < prev) throw Error(ErrorKind::Validation, "requests must arrive in order");
      prev = r.arrival;
    }
  }

  void schedule(double time, Priority p, std::uint64_t request, EventKind kind, std::uint64_t ref) {
    events_.push(Event{time, static_cast<int>(p), request, static_cast<int>(kind), event_seq_++, ref});
  }

  void add_job(Job job) {
    job.seq = job_seq_++;
    const auto key = std::make_pair(static_cast<int>(job.priority), job.seq);
    pending_.emplace(key, std::move(job));
  }

  bool locked(StackId m) const { return locks_[m] > 0; }
  void lock(std::vector<StackId>& held, StackId m) {
    if (std::find(held.begin(), held.end(), m) != held.end()) return;
    held.push_back(m);
    ++locks_[m];
  }
  void release(const std::vector<StackId>& held) {
    for (StackId m : held) --locks_[m];
  }

  Coord at(StackId m) const { return spec_.coord(m); }

  double travel(Robot& r, Coord to) {
    const double t = travel_time(r.pos, to, spec_, sc_.kinematics);
    r.stats.delivery += t;
    r.pos = to;
    return t;
  }
  double grip(Robot& r, int cells, int loads, int unloads) {
    const double t = lift_time(cells, spec_, sc_.kinematics) + loads * sc_.kinematics.load +
                     unloads * sc_.kinematics.unload;
    r.stats.gripper += t;
    return t;
  }
  void phase(const Job& job, const char* name, std::optional<std::size_t> request, int robot,
             double start, double end, StackId stack, BinId bin) {
    PhaseRecord p;
    p.job = job.seq;
    p.phase = name;
    if (request) p.request = requests_[*request].id;
    p.robot = robot;
    p.priority = job.priority;
    p.start = start;
    p.end = end;
    p.stack = stack;
    p.bin = bin;
    log_.phases.push_back(std::move(p));
  }

  void push_snapshot(SnapshotRecord s, bool with_matrix) {
    s.k = k_;
    s.time = now_;
    if (with_matrix) s.matrix = logical_.to_matrix();
    if (s.equivalent && !log_.lambda) log_.lambda = k_;
    if (s.quasi_equivalent && !log_.lambda_epsilon) log_.lambda_epsilon = k_;
    log_.snapshots.push_back(std::move(s));
  }

  // Extraction of a bin that may sit below others: lift the bins above out,
  // take the bin, put the others back one cell lower.
  double extract(Robot& r, StackId m, BinId bin) {
    const auto st = physical_.stack(m);
    const auto idx = static_cast<std::size_t>(std::find(st.begin(), st.end(), bin) - st.begin());
    int cells = 2 * physical_.layer_at(idx);
    int above = 0;
    for (std::size_t j = idx + 1; j < st.size(); ++j) {
      const int l = physical_.layer_at(j);
      cells += 2 * l + 2 * (l + 1);
      ++above;
    }
    physical_.remove(bin);
    return grip(r, cells, above + 1, above);
  }

  double place(Robot& r, StackId m, BinId bin) {
    const int layer = physical_.next_layer(m);
    physical_.push(m, bin);
    return grip(r, 2 * layer, 0, 1);
  }

  void handle(const Event& ev) {
    switch (static_cast<EventKind>(ev.kind)) {
      case EventKind::Arrival: on_arrival(static_cast<std::size_t>(ev.ref)); break;
      case EventKind::DiggingEnd: on_digging_end(ev.ref); break;
      case EventKind::Released: on_released(ev.ref); break;
      case EventKind::ProcessingDone: {
        Job job;
        job.kind = JobKind::Return;
        job.priority = Priority::Return;
        job.request = static_cast<std::size_t>(ev.ref);
        add_job(std::move(job));
        break;
      }
      case EventKind::JobEnd: on_job_end(ev.ref); break;
      case EventKind::BufferTimer: {
        if (!buffer_job_pending_) {
          Job job;
          job.kind = JobKind::BufferCheck;
          job.priority = Priority::Reshuffle;
          add_job(std::move(job));
          buffer_job_pending_ = true;
        }
        if (now_ + sc_.check_period <= last_arrival_) {
          schedule(now_ + sc_.check_period, Priority::Reshuffle, 0, EventKind::BufferTimer, 0);
        }
        break;
      }
    }
    if (sc_.check_invariants) check_conservation();
  }

  void on_arrival(std::size_t i) {
    const Request& req = requests_[i];
    RequestRecord& rec = log_.requests[i];
    rec.id = req.id;
    rec.bin = req.bin;
    rec.workstation = req.workstation;
    rec.arrival = req.arrival;
    if (!physical_.stack_of(req.bin) || claimed_[req.bin]) {
      // Already at a workstation or on its way there.
      rec.zero_task = true;
      return;
    }
    claimed_[req.bin] = 1;
    Job job;
    job.kind = JobKind::Retrieval;
    job.priority = Priority::Retrieval;
    job.request = i;
    add_job(std::move(job));
  }

  void dispatch() {
    for (auto it = pending_.begin(); it != pending_.end() && !free_.empty();) {
      const StartResult r = start(it->second, free_.front());
      if (r == StartResult::Blocked) {
        ++it;
        continue;
      }
      if (r == StartResult::Started) {
        const std::uint64_t seq = it->second.seq;
        active_.emplace(seq, std::move(it->second));
        free_.pop_front();
      }
      it = pending_.erase(it);
    }
  }

  StartResult start(Job& job, int robot) {
    switch (job.kind) {
      case JobKind::Retrieval: return start_retrieval(job, robot);
      case JobKind::Restore: return start_restore(job, robot);
      case JobKind::Return: return start_return(job, robot);
      case JobKind::BufferCheck: return start_buffer_check(job, robot);
    }
    return StartResult::Blocked;
  }

  StartResult start_retrieval(Job& job, int robot_id) {
    const Request& req = requests_[job.request];
    const BinId b = req.bin;
    const StackId t = *physical_.stack_of(b);
    if (locked(t)) return StartResult::Blocked;

    const auto st = physical_.stack(t);
    std::vector<BinId> above;
    for (std::size_t i = st.size(); i-- > 0 && st[i] != b;) above.push_back(st[i]);
    std::vector<StackId> candidates;
    for (StackId m : occupied_) {
      if (m != t && !locked(m)) candidates.push_back(m);
    }
    const auto plan = dig_placement_plan(physical_, spec_, t, above, candidates,
                                         [&](StackId m) { return logical_.empty_cells(m) + 1; });
    if (!plan) return StartResult::Blocked;

    job.target = t;
    job.moves = *plan;
    job.temporary.assign(plan->size(), 0);
    {
      std::map<StackId, int> placed;
      for (std::size_t i = 0; i < plan->size(); ++i) {
        const StackId m = (*plan)[i].destination;
        if (++placed[m] > logical_.empty_cells(m)) job.temporary[i] = 1;
      }
    }
    job.robot = robot_id;
    lock(job.locks, t);
    for (const auto& mv : *plan) lock(job.locks, mv.destination);

    Robot& r = robots_[static_cast<std::size_t>(robot_id)];
    ++r.stats.tasks;
    RequestRecord& rec = log_.requests[job.request];
    rec.robot = robot_id;
    rec.stack = t;
    rec.depth = *physical_.layer_of(b);
    rec.bins_above = static_cast<int>(above.size());
    claimed_[b] = 0;

    const double t1 = now_;
    const double d1 = travel(r, at(t));
    double dig = 0.0;
    for (const auto& mv : *plan) {
      dig += grip(r, 2 * *physical_.layer_of(mv.bin), 1, 0);
      physical_.pop(t);
      dig += travel(r, at(mv.destination));
      dig += place(r, mv.destination, mv.bin);
      dig += travel(r, at(t));
    }
    dig += grip(r, 2 * *physical_.layer_of(b), 1, 0);
    physical_.pop(t);
    ++offgrid_;
    const double d2 = travel(r, spec_.workstations[static_cast<std::size_t>(req.workstation)]);

    if (reshuffle_mode(sc_.policy) == RestoreMode::TemporaryOnly) {
      for (std::size_t i = 0; i < plan->size(); ++i) {
        if (job.temporary[i]) continue;
        logical_.remove((*plan)[i].bin);
        logical_.push((*plan)[i].destination, (*plan)[i].bin);
      }
    }

    rec.waiting = t1 - req.arrival;
    rec.delivery1 = d1;
    rec.digging = dig;
    rec.delivery2 = d2;
    rec.retrieval_time = rec.waiting + rec.delivery1 + rec.digging + rec.delivery2;
    const double t2 = t1 + d1;
    const double t3 = t2 + dig;
    const double t4 = t3 + d2;
    phase(job, "Delivery1", job.request, robot_id, t1, t2, t, b);
    phase(job, "Digging", job.request, robot_id, t2, t3, t, b);
    phase(job, "Delivery2", job.request, robot_id, t3, t4, t, b);
    phase(job, "Release", job.request, robot_id, t4, t4, t, b);
    schedule(t3, job.priority, req.id, EventKind::DiggingEnd, job.seq);
    schedule(t4, job.priority, req.id, EventKind::Released, job.seq);
    return StartResult::Started;
  }

  void on_digging_end(std::uint64_t seq) {
    Job& job = active_.at(seq);
    Job restore;
    restore.kind = JobKind::Restore;
    restore.priority = Priority::Reshuffle;
    restore.request = job.request;
    restore.target = job.target;
    const bool all = reshuffle_mode(sc_.policy) == RestoreMode::All;
    for (std::size_t i = 0; i < job.moves.size(); ++i) {
      if (all || job.temporary[i]) restore.moves.push_back(job.moves[i]);
    }
    std::vector<StackId> keep;
    if (!restore.moves.empty()) {
      keep.push_back(job.target);
      for (const auto& mv : restore.moves) {
        if (std::find(keep.begin(), keep.end(), mv.destination) == keep.end()) {
          keep.push_back(mv.destination);
        }
      }
    }
    std::vector<StackId> drop;
    for (StackId m : job.locks) {
      if (std::find(keep.begin(), keep.end(), m) == keep.end()) drop.push_back(m);
    }
    release(drop);
    job.locks.clear();
    if (!restore.moves.empty()) {
      restore.locks = keep;  // ownership moves to the restore job
      restoring_.insert(restore.request);
      add_job(std::move(restore));
    }
  }

  void on_released(std::uint64_t seq) {
    Job job = std::move(active_.at(seq));
    active_.erase(seq);
    free_.push_back(job.robot);
    schedule(now_ + sc_.processing_time, Priority::Return, requests_[job.request].id,
             EventKind::ProcessingDone, job.request);
  }

  void on_job_end(std::uint64_t seq) {
    Job job = std::move(active_.at(seq));
    active_.erase(seq);
    release(job.locks);
    free_.push_back(job.robot);
    if (job.kind == JobKind::Restore) restoring_.erase(job.request);
  }

  StartResult start_restore(Job& job, int robot_id) {
    Robot& r = robots_[static_cast<std::size_t>(robot_id)];
    ++r.stats.tasks;
    job.robot = robot_id;
    const double t0 = now_;
    double t = 0.0;
    for (auto it = job.moves.rbegin(); it != job.moves.rend(); ++it) {
      t += travel(r, at(it->destination));
      const auto st = physical_.stack(it->destination);
      if (st.empty() || st.back() != it->bin) {
        throw Error(ErrorKind::Deadlock, "restore: bin " + std::to_string(it->bin) +
                                             " is no longer on top of stack " +
                                             std::to_string(it->destination));
      }
      t += grip(r, 2 * *physical_.layer_of(it->bin), 1, 0);
      physical_.pop(it->destination);
      t += travel(r, at(job.target));
      t += place(r, job.target, it->bin);
    }
    phase(job, "Restore", job.request, robot_id, t0, t0 + t, job.target, kEmptyCell);
    schedule(t0 + t, job.priority, requests_[job.request].id, EventKind::JobEnd, job.seq);
    return StartResult::Started;
  }

  bool movable(BinId s) const {
    return !claimed_[s] && physical_.stack_of(s).has_value() &&
           physical_.stack_of(s) == logical_.stack_of(s);
  }

  StartResult start_return(Job& job, int robot_id) {
    if (restoring_.count(job.request)) return StartResult::Blocked;
    const Request& req = requests_[job.request];
    const BinId b = req.bin;
    const StackId origin = *logical_.stack_of(b);
    Bgc view = logical_;
    view.remove(b);

    StorageDecision dec;
    if (sc_.policy == PolicyKind::LayerComplete) {
      dec = lcp_select_storage(lcp_, view, b, origin, [&](BinId s) { return movable(s); });
      if (locked(dec.destination)) return StartResult::Blocked;
      if (dec.swap && locked(dec.swap->destination)) return StartResult::Blocked;
    } else {
      const auto pick = baseline_select_storage(view, occupied_, storage_rng_,
                                                [&](StackId m) { return !locked(m); });
      if (!pick) return StartResult::Blocked;
      dec = *pick;
    }

    const long before = distance_to_equivalent_optimal(logical_, groups_);
    logical_ = std::move(view);
    apply_storage(logical_, b, dec);

    job.robot = robot_id;
    lock(job.locks, dec.destination);
    if (dec.swap) lock(job.locks, dec.swap->destination);

    Robot& r = robots_[static_cast<std::size_t>(robot_id)];
    ++r.stats.tasks;
    const Coord ws = spec_.workstations[static_cast<std::size_t>(req.workstation)];
    const double t0 = now_;
    double d3 = 0.0;
    if (dec.swap) {
      d3 += travel(r, at(dec.swap->source));
      d3 += extract(r, dec.swap->source, dec.swap->bin);
      d3 += travel(r, at(dec.swap->destination));
      d3 += place(r, dec.swap->destination, dec.swap->bin);
    }
    d3 += travel(r, ws);
    d3 += travel(r, at(dec.destination));
    const double ins = place(r, dec.destination, b);
    --offgrid_;
    phase(job, "Delivery3", job.request, robot_id, t0, t0 + d3, dec.destination, b);
    phase(job, "Insert", job.request, robot_id, t0 + d3, t0 + d3 + ins, dec.destination, b);
    schedule(t0 + d3 + ins, job.priority, req.id, EventKind::JobEnd, job.seq);

    log_.requests[job.request].storage = to_string(dec.kind);
    ++k_;
    SnapshotRecord s = snapshot_check(logical_, groups_, sc_.epsilon);
    s.cause = "insert";
    s.request = req.id;
    s.storage = to_string(dec.kind);
    s.distance_before = before;
    push_snapshot(std::move(s), sc_.snapshot_cadence > 0 && k_ % static_cast<std::size_t>(sc_.snapshot_cadence) == 0);
    return StartResult::Started;
  }

  StartResult start_buffer_check(Job& job, int robot_id) {
    const StackId buf = lcp_.buffer_stack;
    if (locked(buf)) return StartResult::Blocked;
    const auto moves = buffer_check(
        lcp_, logical_, [&](BinId s) { return movable(s) && *physical_.stack_of(s) == buf; },
        [&](StackId m) { return !locked(m); });
    buffer_job_pending_ = false;
    if (moves.empty()) return StartResult::Dropped;

    job.robot = robot_id;
    lock(job.locks, buf);
    for (const auto& mv : moves) lock(job.locks, mv.destination);
    Robot& r = robots_[static_cast<std::size_t>(robot_id)];
    ++r.stats.tasks;
    const double t0 = now_;
    double t = travel(r, at(buf));
    for (std::size_t i = 0; i < moves.size(); ++i) {
      const auto& mv = moves[i];
      if (i > 0) t += travel(r, at(buf));
      t += extract(r, buf, mv.bin);
      t += travel(r, at(mv.destination));
      t += place(r, mv.destination, mv.bin);
      const long before = distance_to_equivalent_optimal(logical_, groups_);
      logical_.remove(mv.bin);
      logical_.push(mv.destination, mv.bin);
      SnapshotRecord s = snapshot_check(logical_, groups_, sc_.epsilon);
      s.cause = "buffer";
      s.storage = "buffer_check";
      s.distance_before = before;
      push_snapshot(std::move(s), false);
    }
    phase(job, "BufferCheck", std::nullopt, robot_id, t0, t0 + t, buf, kEmptyCell);
    schedule(t0 + t, job.priority, 0, EventKind::JobEnd, job.seq);
    return StartResult::Started;
  }

  void check_conservation() const {
    if (physical_.bin_count() + offgrid_ != n_bins_ || logical_.bin_count() != n_bins_) {
      throw Error(ErrorKind::Deadlock, "bin conservation violated at t=" + std::to_string(now_));
    }
    for (int m = 0; m < physical_.stack_count(); ++m) {
      const auto id = static_cast<StackId>(m);
      if (physical_.temporary_occupied(id) && !locked(id)) {
        throw Error(ErrorKind::Deadlock, "unlocked stack " + std::to_string(m) +
                                             " holds a bin on its temporary cell");
      }
      if (logical_.stack(id).size() > static_cast<std::size_t>(spec_.height)) {
        throw Error(ErrorKind::Deadlock, "logical stack over capacity");
      }
    }
  }

  std::string deadlock_dump() const {
    std::ostringstream os;
    os << "deadlock at t=" << now_ << ": " << pending_.size() << " pending job(s), "
       << active_.size() << " active job(s), " << free_.size() << " free robot(s)\n";
    for (const auto& [key, job] : pending_) {
      os << "  pending seq=" << job.seq << " kind=" << static_cast<int>(job.kind)
         << " priority=" << priority_name(job.priority) << " request=" << job.request << '\n';
    }
    os << "  locked stacks:";
    for (std::size_t m = 0; m < locks_.size(); ++m) {
      if (locks_[m] > 0) os << ' ' << m << 'x' << locks_[m];
    }
    os << '\n';
    return os.str();
  }

  Scenario sc_;
  OptimalLayout layout_;
  GridSpec spec_;
  LayerGroups groups_;
  LcpState lcp_;
  std::vector<StackId> occupied_;
  Bgc physical_;
  Bgc logical_;
  std::size_t n_bins_ = 0;
  std::size_t offgrid_ = 0;
  std::vector<char> claimed_;
  std::vector<int> locks_;
  std::vector<Request> requests_;
  std::vector<Robot> robots_;
  std::deque<int> free_;
  std::map<std::pair<int, std::uint64_t>, Job> pending_;
  std::set<std::size_t> restoring_;  // requests whose restore job has not finished
  std::map<std::uint64_t, Job> active_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t job_seq_ = 0;
  std::uint64_t event_seq_ = 0;
  Rng storage_rng_;
  EventLog log_;
  double now_ = 0.0;
  double last_arrival_ = 0.0;
  std::size_t k_ = 0;
  bool buffer_job_pending_ = false;
};

json opt(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<std::size_t>& v, int) { return v ? json(*v) : json(nullptr); }

}  // namespace

EventLog run(const Scenario& scenario) { return Simulator(scenario).run(); }

std::string EventLog::to_ndjson() const {
  std::string out;
  auto line = [&](const json& j) {
    out += j.dump();
    out += '\n';
  };
  line({{"type", "run"},
        {"policy", policy},
        {"seed", seed},
        {"initial_randomization", initial_randomization},
        {"empty_level", empty_level},
        {"fill_level", fill_level},
        {"epsilon", epsilon},
        {"end_time", end_time},
        {"lambda", opt(lambda, 0)},
        {"lambda_epsilon", opt(lambda_epsilon, 0)}});
  for (const auto& p : phases) {
    line({{"type", "phase"},
          {"job", p.job},
          {"phase", p.phase},
          {"request", opt(p.request)},
          {"robot", p.robot},
          {"priority", priority_name(p.priority)},
          {"start", p.start},
          {"end", p.end},
          {"stack", p.stack},
          {"bin", p.bin}});
  }
  for (const auto& r : requests) {
    line({{"type", "request"},
          {"id", r.id},
          {"bin", r.bin},
          {"workstation", r.workstation},
          {"arrival", r.arrival},
          {"zero_task", r.zero_task},
          {"depth", r.depth},
          {"bins_above", r.bins_above},
          {"robot", r.robot},
          {"stack", r.stack},
          {"waiting", r.waiting},
          {"delivery1", r.delivery1},
          {"digging", r.digging},
          {"delivery2", r.delivery2},
          {"retrieval_time", r.retrieval_time},
          {"storage", r.storage}});
  }
  for (const auto& s : snapshots) {
    json j{{"type", "snapshot"},
           {"k", s.k},
           {"time", s.time},
           {"cause", s.cause},
           {"request", opt(s.request)},
           {"storage", s.storage},
           {"distance_before", s.distance_before},
           {"distance_after", s.distance_after},
           {"equivalent", s.equivalent},
           {"quasi_equivalent", s.quasi_equivalent}};
    if (s.matrix) j["matrix"] = *s.matrix;
    line(j);
  }
  for (const auto& r : robots) {
    line({{"type", "robot"},
          {"id", r.id},
          {"delivery", r.delivery},
          {"gripper", r.gripper},
          {"tasks", r.tasks}});
  }
  return out;
}

EventLog EventLog::from_ndjson(const std::string& text) {
  EventLog log;
  std::istringstream in(text);
  std::string s;
  std::size_t lineno = 0;
  auto get_opt = [](const json& v) -> std::optional<std::uint64_t> {
    if (v.is_null()) return std::nullopt;
    return v.get<std::uint64_t>();
  };
  while (std::getline(in, s)) {
    ++lineno;
    if (s.empty()) continue;
    try {
      const json j = json::parse(s);
      const std::string type = j.at("type").get<std::string>();
      if (type == "run") {
        log.policy = j.at("policy").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.initial_randomization = j.at("initial_randomization").get<int>();
        log.empty_level = j.at("empty_level").get<int>();
        log.fill_level = j.at("fill_level").get<int>();
        log.epsilon = j.at("epsilon").get<double>();
        log.end_time = j.at("end_time").get<double>();
        log.lambda = get_opt(j.at("lambda"));
        log.lambda_epsilon = get_opt(j.at("lambda_epsilon"));
      } else if (type == "phase") {
        PhaseRecord p;
        p.job = j.at("job").get<std::uint64_t>();
        p.phase = j.at("phase").get<std::string>();
        p.request = get_opt(j.at("request"));
        p.robot = j.at("robot").get<int>();
        p.priority = parse_priority(j.at("priority").get<std::string>());
        p.start = j.at("start").get<double>();
        p.end = j.at("end").get<double>();
        p.stack = j.at("stack").get<StackId>();
        p.bin = j.at("bin").get<BinId>();
        log.phases.push_back(std::move(p));
      } else if (type == "request") {
        RequestRecord r;
        r.id = j.at("id").get<std::uint64_t>();
        r.bin = j.at("bin").get<BinId>();
        r.workstation = j.at("workstation").get<int>();
        r.arrival = j.at("arrival").get<double>();
        r.zero_task = j.at("zero_task").get<bool>();
        r.depth = j.at("depth").get<int>();
        r.bins_above = j.at("bins_above").get<int>();
        r.robot = j.at("robot").get<int>();
        r.stack = j.at("stack").get<StackId>();
        r.waiting = j.at("waiting").get<double>();
        r.delivery1 = j.at("delivery1").get<double>();
        r.digging = j.at("digging").get<double>();
        r.delivery2 = j.at("delivery2").get<double>();
        r.retrieval_time = j.at("retrieval_time").get<double>();
        r.storage = j.at("storage").get<std::string>();
        log.requests.push_back(std::move(r));
      } else if (type == "snapshot") {
        SnapshotRecord r;
        r.k = j.at("k").get<std::size_t>();
        r.time = j.at("time").get<double>();
        r.cause = j.at("cause").get<std::string>();
        r.request = get_opt(j.at("request"));
        r.storage = j.at("storage").get<std::string>();
        r.distance_before = j.at("distance_before").get<long>();
        r.distance_after = j.at("distance_after").get<long>();
        r.equivalent = j.at("equivalent").get<bool>();
        r.quasi_equivalent = j.at("quasi_equivalent").get<bool>();
        if (j.contains("matrix")) r.matrix = j.at("matrix").get<Matrix>();
        log.snapshots.push_back(std::move(r));
      } else if (type == "robot") {
        RobotRecord r;
        r.id = j.at("id").get<int>();
        r.delivery = j.at("delivery").get<double>();
        r.gripper = j.at("gripper").get<double>();
        r.tasks = j.at("tasks").get<std::size_t>();
        log.robots.push_back(r);
      } else {
        throw Error(ErrorKind::Parse, "unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "event log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace rcs
