#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "paced/env.hpp"

namespace paced {

/// Fractional average ranks, 1-based: ties get the mean of the positions
/// they occupy, e.g. {10, 20, 20, 30} -> {1, 2.5, 2.5, 4}.
inline std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation. Throws on size mismatch, fewer than two points, or a
/// zero-variance input.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: size mismatch");
  if (xs.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation: Pearson on fractional ranks (tie-safe).
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: size mismatch");
  return pearson(fractional_ranks(xs), fractional_ranks(ys));
}

struct DifficultyStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Summary of a selected batch against a per-prompt difficulty map.
/// Throws if any selected id is missing from the map.
inline DifficultyStats batch_difficulty_stats(const std::vector<PromptId>& selected,
                                              const std::map<PromptId, double>& difficulty) {
  if (selected.empty())
    throw std::invalid_argument("batch_difficulty_stats: empty selection");
  DifficultyStats st;
  st.min = std::numeric_limits<double>::infinity();
  st.max = -std::numeric_limits<double>::infinity();
  for (PromptId id : selected) {
    auto it = difficulty.find(id);
    if (it == difficulty.end())
      throw std::invalid_argument("batch_difficulty_stats: no difficulty for prompt " +
                                  std::to_string(id));
    st.mean += it->second;
    st.min = std::min(st.min, it->second);
    st.max = std::max(st.max, it->second);
  }
  st.mean /= static_cast<double>(selected.size());
  return st;
}

/// Exact pass@k when the per-sample success probability is p: 1 - (1-p)^k.
inline double pass_at_k(double p, int k) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pass_at_k: p outside [0, 1]");
  if (k < 1) throw std::invalid_argument("pass_at_k: k must be positive");
  return 1.0 - std::pow(1.0 - p, k);
}

}  // namespace paced
