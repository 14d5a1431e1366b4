#include "rcs/policy.hpp"

#include <algorithm>

namespace rcs {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::LayerComplete: return "lcp";
    case PolicyKind::DelayedReshuffle: return "delayed";
    case PolicyKind::ImmediateReshuffle: return "immediate";
  }
  return "?";
}

PolicyKind parse_policy_kind(const std::string& text) {
  if (text == "lcp" || text == "layer_complete") return PolicyKind::LayerComplete;
  if (text == "delayed") return PolicyKind::DelayedReshuffle;
  if (text == "immediate") return PolicyKind::ImmediateReshuffle;
  throw Error(ErrorKind::Validation,
              "unknown policy '" + text + "' (expected lcp, delayed or immediate)");
}

void validate_policy_grid(PolicyKind kind, const GridSpec& spec) {
  if (kind == PolicyKind::LayerComplete && !spec.buffer_stack) {
    throw Error(ErrorKind::Validation, "policy lcp requires grid.buffer_stack");
  }
  if (kind != PolicyKind::LayerComplete && spec.buffer_stack) {
    throw Error(ErrorKind::Validation,
                std::string("policy ") + to_string(kind) + " must not set grid.buffer_stack");
  }
}

const char* to_string(StorageCase c) {
  switch (c) {
    case StorageCase::Case1: return "case1";
    case StorageCase::Case2: return "case2";
    case StorageCase::Case3: return "case3";
    case StorageCase::Case4: return "case4";
    case StorageCase::Case5: return "case5";
    case StorageCase::BufferReturn: return "buffer_return";
    case StorageCase::BaselineRandom: return "random";
  }
  return "?";
}

namespace {

std::vector<BinId> with(std::span<const BinId> bins, BinId extra) {
  std::vector<BinId> out(bins.begin(), bins.end());
  out.push_back(extra);
  return out;
}

std::vector<BinId> replaced(std::span<const BinId> bins, BinId out_bin, BinId in_bin) {
  std::vector<BinId> out(bins.begin(), bins.end());
  std::replace(out.begin(), out.end(), out_bin, in_bin);
  return out;
}

/// Adding `bin` to the stack raises the number of covered groups.
bool gains_group(std::span<const BinId> stack, BinId bin, const LayerGroups& groups) {
  return classified_groups(with(stack, bin), groups) > classified_groups(stack, groups);
}

std::optional<StackId> first_gaining_stack(const LcpState& state, const Bgc& bgc, BinId bin,
                                           std::optional<StackId> skip,
                                           const StackFilter& available) {
  for (StackId m : state.groups.occupied_stacks()) {
    if (skip && m == *skip) continue;
    if (bgc.empty_cells(m) <= 0) continue;
    if (available && !available(m)) continue;
    if (gains_group(bgc.stack(m), bin, state.groups)) return m;
  }
  return std::nullopt;
}

}  // namespace

StorageDecision lcp_select_storage(const LcpState& state, const Bgc& bgc, BinId target_bin,
                                   StackId target_stack, const BinFilter& movable) {
  const LayerGroups& groups = state.groups;
  if (bgc.stack_of(target_bin)) {
    throw Error(ErrorKind::Domain, "lcp: target bin " + std::to_string(target_bin) +
                                       " is still in the grid");
  }

  if (target_stack == state.buffer_stack) {
    if (const auto m = first_gaining_stack(state, bgc, target_bin, std::nullopt, {})) {
      return {StorageCase::BufferReturn, *m, std::nullopt};
    }
    return {StorageCase::BufferReturn, state.buffer_stack, std::nullopt};
  }

  const auto target = bgc.stack(target_stack);
  const int k_target = classified_groups(target, groups);

  // Case 1: the bin is essential to its own stack.
  if (classified_groups(with(target, target_bin), groups) > k_target) {
    return {StorageCase::Case1, target_stack, std::nullopt};
  }

  // Case 2
  if (const auto m = first_gaining_stack(state, bgc, target_bin, target_stack, {})) {
    return {StorageCase::Case2, *m, std::nullopt};
  }

  // Case 3
  for (StackId m : groups.occupied_stacks()) {
    if (m == target_stack) continue;
    const auto stack = bgc.stack(m);
    const int k_m = classified_groups(stack, groups);
    std::optional<BinId> best;
    int best_group = 0;
    for (std::size_t i = stack.size(); i-- > 0;) {  // uppermost first
      const BinId s = stack[i];
      if (movable && !movable(s)) continue;
      const int g = groups.group_of(s);
      if (best && g >= best_group) continue;
      if (classified_groups(replaced(stack, s, target_bin), groups) != k_m + 1) continue;
      if (classified_groups(with(target, s), groups) != k_target + 1) continue;
      best = s;
      best_group = g;
    }
    if (best) {
      return {StorageCase::Case3, m, SwapMove{m, *best, target_stack}};
    }
  }

  // Case 4
  if (bgc.empty_cells(state.buffer_stack) > 0) {
    return {StorageCase::Case4, state.buffer_stack, std::nullopt};
  }

  // Case 5
  std::optional<StackId> roomiest;
  for (StackId m : groups.occupied_stacks()) {
    const int e = bgc.empty_cells(m);
    if (e > 0 && (!roomiest || e > bgc.empty_cells(*roomiest))) roomiest = m;
  }
  if (!roomiest) throw Error(ErrorKind::Capacity, "lcp: no stack has an empty cell");
  return {StorageCase::Case5, *roomiest, std::nullopt};
}

std::vector<BufferMove> buffer_check(const LcpState& state, const Bgc& bgc,
                                     const BinFilter& movable, const StackFilter& available) {
  std::vector<BufferMove> moves;
  const auto buffer = bgc.stack(state.buffer_stack);
  if (buffer.empty()) return moves;
  Bgc work = bgc;
  const std::vector<BinId> top_down(buffer.rbegin(), buffer.rend());
  for (BinId b : top_down) {
    if (movable && !movable(b)) continue;
    const auto m = first_gaining_stack(state, work, b, std::nullopt, available);
    if (!m) continue;
    work.remove(b);
    work.push(*m, b);
    moves.push_back({b, *m});
  }
  return moves;
}

std::optional<StorageDecision> baseline_select_storage(const Bgc& bgc,
                                                       std::span<const StackId> stacks, Rng& rng,
                                                       const StackFilter& available) {
  std::vector<StackId> eligible;
  for (StackId m : stacks) {
    if (bgc.empty_cells(m) > 0 && (!available || available(m))) eligible.push_back(m);
  }
  if (eligible.empty()) return std::nullopt;
  const StackId pick = eligible[rng.index(eligible.size())];
  return StorageDecision{StorageCase::BaselineRandom, pick, std::nullopt};
}

void apply_storage(Bgc& bgc, BinId bin, const StorageDecision& decision) {
  if (decision.swap) {
    bgc.remove(decision.swap->bin);
    bgc.push(decision.swap->destination, decision.swap->bin);
  }
  bgc.push(decision.destination, bin);
}

std::optional<std::vector<DigMove>> dig_placement_plan(const Bgc& bgc, const GridSpec& spec,
                                                       StackId target_stack,
                                                       std::span<const BinId> dug_top_down,
                                                       std::span<const StackId> candidates,
                                                       const DigCapacity& capacity) {
  std::vector<DigMove> plan;
  if (dug_top_down.empty()) return plan;
  std::vector<StackId> order(candidates.begin(), candidates.end());
  const Coord origin = spec.coord(target_stack);
  std::stable_sort(order.begin(), order.end(), [&](StackId a, StackId b) {
    const int da = manhattan(origin, spec.coord(a));
    const int db = manhattan(origin, spec.coord(b));
    return da != db ? da < db : a < b;
  });
  std::size_t next = 0;
  for (StackId m : order) {
    if (m == target_stack) continue;
    int room = capacity ? capacity(m)
                        : bgc.empty_cells(m) + (bgc.temporary_occupied(m) ? 0 : 1);
    int layer = bgc.next_layer(m);
    while (room > 0 && layer >= 0 && next < dug_top_down.size()) {
      plan.push_back({dug_top_down[next++], m, layer});
      --room;
      --layer;
    }
    if (next == dug_top_down.size()) return plan;
  }
  return std::nullopt;
}

std::optional<std::vector<DigMove>> dig_placement_plan(const Bgc& bgc, const GridSpec& spec,
                                                       BinId target_bin) {
  const auto t = bgc.stack_of(target_bin);
  if (!t) throw Error(ErrorKind::Domain, "dig plan: bin is not in the grid");
  const auto stack = bgc.stack(*t);
  std::vector<BinId> above;
  for (std::size_t i = stack.size(); i-- > 0 && stack[i] != target_bin;) above.push_back(stack[i]);
  std::vector<StackId> candidates;
  for (int m = 0; m < bgc.stack_count(); ++m) {
    const auto id = static_cast<StackId>(m);
    if (id == *t || (spec.buffer_stack && id == *spec.buffer_stack)) continue;
    if (bgc.stack(id).empty()) continue;
    candidates.push_back(id);
  }
  return dig_placement_plan(bgc, spec, *t, above, candidates);
}

RestoreMode reshuffle_mode(PolicyKind kind) {
  return kind == PolicyKind::DelayedReshuffle ? RestoreMode::TemporaryOnly : RestoreMode::All;
}

SequentialStep apply_request_sequential(Bgc& bgc, const LcpState& state, BinId bin) {
  SequentialStep step;
  const auto t = bgc.stack_of(bin);
  if (!t) throw Error(ErrorKind::Domain, "request: bin " + std::to_string(bin) + " is not stored");
  step.distance_before = distance_to_equivalent_optimal(bgc, state.groups);
  bgc.remove(bin);
  step.decision = lcp_select_storage(state, bgc, bin, *t);
  apply_storage(bgc, bin, step.decision);
  step.distance_after_storage = distance_to_equivalent_optimal(bgc, state.groups);
  step.buffer_moves = buffer_check(state, bgc);
  for (const auto& mv : step.buffer_moves) {
    bgc.remove(mv.bin);
    bgc.push(mv.destination, mv.bin);
  }
  step.distance_after = distance_to_equivalent_optimal(bgc, state.groups);
  return step;
}

}  // namespace rcs
