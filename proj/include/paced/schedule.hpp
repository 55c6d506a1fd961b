#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "paced/env.hpp"
#include "paced/rng.hpp"

namespace paced {

/// Picks the m prompts whose estimated accuracy is nearest the target tau.
/// Output is ordered by (|estimate - tau|, id ascending); ties are stable.
inline std::vector<PromptId> select_paced(const std::map<PromptId, double>& estimates,
                                          int m, double tau) {
  if (m < 1) throw std::invalid_argument("select_paced: m must be positive");
  if (static_cast<std::size_t>(m) > estimates.size())
    throw std::invalid_argument("select_paced: m exceeds number of prompts");
  std::vector<std::pair<double, PromptId>> order;
  order.reserve(estimates.size());
  for (const auto& [id, est] : estimates) order.emplace_back(std::abs(est - tau), id);
  std::sort(order.begin(), order.end());
  std::vector<PromptId> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
  return out;
}

/// m distinct prompts uniformly at random, in draw order (partial
/// Fisher-Yates over a copy of ids).
inline std::vector<PromptId> select_uniform(const std::vector<PromptId>& ids, int m,
                                            RngStream& rng) {
  if (m < 1) throw std::invalid_argument("select_uniform: m must be positive");
  if (static_cast<std::size_t>(m) > ids.size())
    throw std::invalid_argument("select_uniform: m exceeds number of prompts");
  std::vector<PromptId> pool = ids;
  for (int i = 0; i < m; ++i) {
    std::size_t j = static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(rng.next_below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(m));
  return pool;
}

/// Keeps prompts whose observed accuracy is strictly between 0 and 1
/// (gradient-bearing under group-filtered training). Ascending id order.
inline std::vector<PromptId> filter_ds(const std::map<PromptId, double>& observed) {
  std::vector<PromptId> out;
  for (const auto& [id, acc] : observed) {
    if (!(acc >= 0.0 && acc <= 1.0))
      throw std::invalid_argument("filter_ds: observed accuracy outside [0, 1]");
    if (acc > 0.0 && acc < 1.0) out.push_back(id);
  }
  return out;
}

/// From an oversampled pool's observed accuracies, keeps the m prompts
/// nearest 0.5; order (|acc - 0.5|, id ascending).
inline std::vector<PromptId> select_lilo(const std::map<PromptId, double>& observed, int m) {
  if (m < 1) throw std::invalid_argument("select_lilo: m must be positive");
  if (static_cast<std::size_t>(m) > observed.size())
    throw std::invalid_argument("select_lilo: m exceeds pool size");
  std::vector<std::pair<double, PromptId>> order;
  order.reserve(observed.size());
  for (const auto& [id, acc] : observed) order.emplace_back(std::abs(acc - 0.5), id);
  std::sort(order.begin(), order.end());
  std::vector<PromptId> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
  return out;
}

}  // namespace paced
