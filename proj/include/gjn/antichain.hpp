#pragma once

// Maximum-weight antichain in a forest given by parent links.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gjn {

struct Antichain {
  double value = 0.0;
  std::vector<std::size_t> nodes;  // increasing indices
};

/// Bottom-up best(v) = max(w(v), sum of best(children)); a node is taken only
/// when its weight strictly beats its subtree alternative, so all-zero weights
/// give the empty antichain. Nodes with selectable[v] == false are structural
/// only. parent[v] == -1 marks a root.
inline Antichain max_weight_antichain(const std::vector<int>& parent, const std::vector<double>& weight,
                                      const std::vector<bool>& selectable = {}) {
  const std::size_t n = parent.size();
  if (weight.size() != n) throw std::invalid_argument("antichain: weight/parent size mismatch");
  if (!selectable.empty() && selectable.size() != n)
    throw std::invalid_argument("antichain: selectable/parent size mismatch");
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> roots;
  for (std::size_t v = 0; v < n; ++v) {
    if (weight[v] < 0.0) throw std::invalid_argument("antichain: weights must be nonnegative");
    if (parent[v] == -1) {
      roots.push_back(v);
    } else if (parent[v] < 0 || static_cast<std::size_t>(parent[v]) >= n) {
      throw std::invalid_argument("antichain: parent index out of range");
    } else {
      children[static_cast<std::size_t>(parent[v])].push_back(v);
    }
  }

  // iterative post-order; nodes not reached from a root lie on a cycle
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (std::size_t c : children[v]) stack.push_back(c);
  }
  if (order.size() != n) throw std::invalid_argument("antichain: parent links contain a cycle");

  std::vector<double> best(n, 0.0);
  std::vector<bool> take(n, false);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    double below = 0.0;
    for (std::size_t c : children[v]) below += best[c];
    const bool can = selectable.empty() || selectable[v];
    if (can && weight[v] > below) {
      best[v] = weight[v];
      take[v] = true;
    } else {
      best[v] = below;
    }
  }

  Antichain out;
  for (std::size_t r : roots) out.value += best[r];
  std::vector<std::size_t> walk(roots.begin(), roots.end());
  while (!walk.empty()) {
    const std::size_t v = walk.back();
    walk.pop_back();
    if (take[v]) {
      out.nodes.push_back(v);
      continue;
    }
    for (std::size_t c : children[v]) walk.push_back(c);
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  return out;
}

}  // namespace gjn
