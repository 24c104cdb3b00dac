#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <tuple>
#include <utility>
#include <vector>

namespace trajsync {

/// Greedy nearest-stamp matching: candidate pairs ranked by |dt|, each stamp
/// used at most once, |dt| <= tol. Returns index pairs sorted by first index.
inline std::vector<std::pair<size_t, size_t>> associate_stamps(const std::vector<double>& a,
                                                               const std::vector<double>& b,
                                                               double tol) {
  std::vector<std::tuple<double, size_t, size_t>> candidates;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto it = std::lower_bound(b.begin(), b.end(), a[i]);
    for (const auto jt : {it, it == b.begin() ? it : it - 1}) {
      if (jt == b.end()) continue;
      const size_t j = static_cast<size_t>(jt - b.begin());
      const double dt = std::abs(a[i] - b[j]);
      if (dt <= tol) candidates.emplace_back(dt, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  std::vector<std::pair<size_t, size_t>> pairs;
  for (const auto& [dt, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    pairs.emplace_back(i, j);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace trajsync
