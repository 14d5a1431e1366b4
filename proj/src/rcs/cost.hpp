#pragma once

// Gripper-motion cost model. One unit is one cell of gripper travel; loading
// and unloading are free here (the simulator adds them in seconds).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcs/error.hpp"
#include "rcs/model.hpp"

namespace rcs {

using Cost = std::int64_t;

/// Cost of digging out every bin from the surface layer down to and including
/// the target at `layer`: l^2 + l - h_e^2 - h_e.
Cost dig_cost_in_stack(int layer, int empty_level);

/// Lookup table of the placement cost for dug-up bins, rows h_e in 0..H-1 and
/// columns l in 1..2H. Entries with l <= h_e do not exist.
class CostTable {
 public:
  explicit CostTable(int height);

  int height() const noexcept { return height_; }
  int max_layer() const noexcept { return 2 * height_; }
  std::optional<Cost> at(int empty_level, int layer) const;

 private:
  int height_;
  std::vector<std::optional<Cost>> cells_;  // row-major, h_e x l
};

CostTable build_cost_table(int height);

/// Cost of placing the l - h_e - 1 dug-up bins on nearby stacks.
Cost placement_cost(int layer, int empty_level, const CostTable& table);

/// Full gripper cost to bring a bin at `layer` to the top of its stack.
Cost retrieval_cost(int layer, int empty_level, const CostTable& table);

/// Probability that a requested bin sits in each layer; index l-1 holds
/// layer l.
std::vector<double> layer_probabilities(const Bgc& bgc, const BinCatalog& catalog);

/// h_e shared by every non-empty stack. Throws Error(Domain) when fill levels
/// of non-empty stacks differ or the grid is empty.
int uniform_empty_level(const Bgc& bgc);

/// Sum over layers of retrieval_cost(l, h_e) * weight-in-layer, with the
/// weight of bin b at weights[b-1]. Exact for integer weights.
template <class Weight>
Weight weighted_retrieval_cost(const Bgc& bgc, std::span<const Weight> weights,
                               const CostTable& table) {
  const int he = uniform_empty_level(bgc);
  Weight total{};
  for (int l = 1; l <= bgc.height(); ++l) {
    Weight in_layer{};
    for (int m = 0; m < bgc.stack_count(); ++m) {
      const BinId b = bgc.cell(l, static_cast<StackId>(m));
      if (b != kEmptyCell) in_layer += weights[b - 1];
    }
    if (in_layer != Weight{}) total += static_cast<Weight>(retrieval_cost(l, he, table)) * in_layer;
  }
  return total;
}

/// Expected retrieval cost of a single request.
double expected_cost(const Bgc& bgc, const BinCatalog& catalog, const CostTable& table);

/// Table rendered as CSV: header "h_e,1,...,max_layer", "-" for absent
/// entries.
std::string cost_table_csv(const CostTable& table, int max_layer);

}  // namespace rcs
