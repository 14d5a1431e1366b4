#pragma once

// Storage-stack selection (Layer Complete Policy and the random-storage
// baselines) and the dig placement rule shared by every policy.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcs/model.hpp"
#include "rcs/rng.hpp"
#include "rcs/solver.hpp"

namespace rcs {

enum class PolicyKind { LayerComplete, DelayedReshuffle, ImmediateReshuffle };

const char* to_string(PolicyKind kind);
/// Accepts "lcp", "layer_complete", "delayed", "immediate".
PolicyKind parse_policy_kind(const std::string& text);

/// Throws Error(Validation) when the buffer stack setting does not match the
/// policy: LCP needs one, the baselines must not have one.
void validate_policy_grid(PolicyKind kind, const GridSpec& spec);

struct LcpState {
  LayerGroups groups;
  StackId buffer_stack = 0;
  double check_period = 300.0;
  double last_check = 0.0;
  double epsilon = 0.2;
};

enum class StorageCase { Case1 = 1, Case2, Case3, Case4, Case5, BufferReturn, BaselineRandom };

const char* to_string(StorageCase c);

struct SwapMove {
  StackId source = 0;
  BinId bin = kEmptyCell;
  StackId destination = 0;  // the target stack
};

struct StorageDecision {
  StorageCase kind = StorageCase::Case1;
  StackId destination = 0;
  std::optional<SwapMove> swap;  // Case 3 only
};

/// Predicate telling whether a bin may be moved right now (default: any).
using BinFilter = std::function<bool(BinId)>;
/// Predicate telling whether a stack may receive a bin right now.
using StackFilter = std::function<bool(StackId)>;

/// Chooses where the returning `target_bin` goes. `bgc` is the state after
/// retrieval, i.e. without the target bin. The cases are tried in order:
///  1. the bin is needed by its own stack -> target stack;
///  2. lowest-ID other occupied stack with an empty cell that gains a group;
///  3. lowest-ID stack m holding a movable bin s such that swapping s into the
///     target stack and the bin into m completes a group in both (smallest
///     group of s, then uppermost s);
///  4. the buffer stack has an empty cell;
///  5. occupied stack with the most empty cells, lowest ID.
/// A bin requested from the buffer stack returns to an occupied stack that
/// gains a group, otherwise back to the buffer (kind BufferReturn).
StorageDecision lcp_select_storage(const LcpState& state, const Bgc& bgc, BinId target_bin,
                                   StackId target_stack, const BinFilter& movable = {});

struct BufferMove {
  BinId bin = kEmptyCell;
  StackId destination = 0;
};

/// Moves from the buffer stack (considered top-down) to the lowest-ID
/// occupied stack with an empty cell that gains a group. Each move lowers the
/// distance to an equivalent optimal configuration by exactly 1.
std::vector<BufferMove> buffer_check(const LcpState& state, const Bgc& bgc,
                                     const BinFilter& movable = {},
                                     const StackFilter& available = {});

/// Uniformly random stack among `stacks` that has an empty cell and passes
/// `available`; nullopt when none qualifies (no draw is consumed then).
std::optional<StorageDecision> baseline_select_storage(const Bgc& bgc,
                                                       std::span<const StackId> stacks, Rng& rng,
                                                       const StackFilter& available = {});

/// Applies a decision for a bin that is currently off the grid.
void apply_storage(Bgc& bgc, BinId bin, const StorageDecision& decision);

struct DigMove {
  BinId bin = kEmptyCell;
  StackId destination = 0;
  int layer = 0;  // layer it lands on; 0 is the temporary cell
};

/// Number of bins a stack can take while digging: its empty cells plus the
/// temporary cell.
using DigCapacity = std::function<int(StackId)>;

/// Assigns the dug-up bins (top-down) to the candidate stacks ordered by
/// Manhattan distance from the target stack, then by stack ID, filling each
/// candidate up to its capacity before moving on. Layers are computed from
/// `bgc`. Returns nullopt when the candidates cannot hold every bin.
std::optional<std::vector<DigMove>> dig_placement_plan(const Bgc& bgc, const GridSpec& spec,
                                                       StackId target_stack,
                                                       std::span<const BinId> dug_top_down,
                                                       std::span<const StackId> candidates,
                                                       const DigCapacity& capacity = {});

/// Convenience form: digs out everything above `target_bin`; candidates are
/// all non-empty stacks except the target and the buffer.
std::optional<std::vector<DigMove>> dig_placement_plan(const Bgc& bgc, const GridSpec& spec,
                                                       BinId target_bin);

enum class RestoreMode {
  All,            // every dug-up bin goes back in reverse dig order
  TemporaryOnly,  // only bins parked on temporary cells go back
};

RestoreMode reshuffle_mode(PolicyKind kind);

/// One request applied atomically: the bin leaves its stack (bins above keep
/// their order), the policy stores it, and under LCP the buffer check runs.
struct SequentialStep {
  StorageDecision decision;
  std::vector<BufferMove> buffer_moves;
  long distance_before = 0;
  long distance_after_storage = 0;
  long distance_after = 0;
};

SequentialStep apply_request_sequential(Bgc& bgc, const LcpState& state, BinId bin);

}  // namespace rcs
