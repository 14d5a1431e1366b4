#include "rcs/cost.hpp"

#include <sstream>

namespace rcs {

Cost dig_cost_in_stack(int layer, int empty_level) {
  if (empty_level < 0 || layer <= empty_level) {
    throw Error(ErrorKind::Domain, "dig cost: layer " + std::to_string(layer) +
                                       " is not below empty level " + std::to_string(empty_level));
  }
  const Cost l = layer;
  const Cost he = empty_level;
  return l * l + l - he * he - he;
}

CostTable::CostTable(int height) : height_(height) {
  if (height < 1) throw Error(ErrorKind::Domain, "cost table: height must be at least 1");
  const int cols = max_layer();
  cells_.assign(static_cast<std::size_t>(height * cols), std::nullopt);
  for (int he = 0; he < height; ++he) {
    // Cells filled bottom-up in each nearby stack: h_e normal cells plus the
    // temporary cell, costing 2h_e, 2(h_e-1), ..., 0, repeated stack by stack.
    Cost running = 0;
    int placed = 0;
    for (int l = he + 1; l <= cols; ++l) {
      cells_[static_cast<std::size_t>(he * cols + (l - 1))] = running;
      const int slot = placed % (he + 1);
      running += 2 * static_cast<Cost>(he - slot);
      ++placed;
    }
  }
}

std::optional<Cost> CostTable::at(int empty_level, int layer) const {
  if (empty_level < 0 || empty_level >= height_ || layer < 1 || layer > max_layer()) {
    return std::nullopt;
  }
  return cells_[static_cast<std::size_t>(empty_level * max_layer() + (layer - 1))];
}

CostTable build_cost_table(int height) { return CostTable(height); }

Cost placement_cost(int layer, int empty_level, const CostTable& table) {
  const auto v = table.at(empty_level, layer);
  if (!v) {
    throw Error(ErrorKind::Domain, "placement cost: no entry for layer " + std::to_string(layer) +
                                       ", empty level " + std::to_string(empty_level));
  }
  return *v;
}

Cost retrieval_cost(int layer, int empty_level, const CostTable& table) {
  return dig_cost_in_stack(layer, empty_level) + placement_cost(layer, empty_level, table);
}

std::vector<double> layer_probabilities(const Bgc& bgc, const BinCatalog& catalog) {
  std::vector<double> pi(static_cast<std::size_t>(bgc.height()), 0.0);
  for (int l = 1; l <= bgc.height(); ++l) {
    for (int m = 0; m < bgc.stack_count(); ++m) {
      const BinId b = bgc.cell(l, static_cast<StackId>(m));
      if (b != kEmptyCell) pi[l - 1] += catalog.popularity(b);
    }
  }
  return pi;
}

int uniform_empty_level(const Bgc& bgc) {
  int fill = -1;
  for (int m = 0; m < bgc.stack_count(); ++m) {
    const int h = bgc.fill_level(static_cast<StackId>(m));
    if (h == 0) continue;
    if (fill >= 0 && h != fill) {
      throw Error(ErrorKind::Domain, "expected cost: occupied stacks have different fill levels");
    }
    fill = h;
  }
  if (fill < 0) throw Error(ErrorKind::Domain, "expected cost: grid is empty");
  return bgc.height() - fill;
}

double expected_cost(const Bgc& bgc, const BinCatalog& catalog, const CostTable& table) {
  return weighted_retrieval_cost<double>(bgc, catalog.popularities(), table);
}

std::string cost_table_csv(const CostTable& table, int max_layer) {
  std::ostringstream os;
  os << "h_e";
  for (int l = 1; l <= max_layer; ++l) os << ',' << l;
  os << '\n';
  for (int he = 0; he < table.height(); ++he) {
    os << he;
    for (int l = 1; l <= max_layer; ++l) {
      const auto v = table.at(he, l);
      os << ',';
      if (v) {
        os << *v;
      } else {
        os << '-';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rcs
