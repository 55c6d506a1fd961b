#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "paced/loss.hpp"

namespace paced {

/// Replay priority of a prompt: |observed accuracy - estimated accuracy|,
/// i.e. how badly the partition estimate currently misses the Monte Carlo one.
inline double replay_priority(double observed_acc, double estimate) {
  if (!(observed_acc >= 0.0 && observed_acc <= 1.0))
    throw std::invalid_argument("replay_priority: observed accuracy outside [0, 1]");
  if (!(estimate >= 0.0 && estimate <= 1.0))
    throw std::invalid_argument("replay_priority: estimate outside [0, 1]");
  return std::abs(observed_acc - estimate);
}

struct ReplayEntry {
  PromptId prompt_id = 0;
  Sequence seq;
  double behavior_log_prob = 0.0;
  double priority_at_insert = 0.0;
  std::int64_t step_inserted = 0;
};

/**
 * Bounded FIFO buffer of verified-correct pairs.
 *
 * Admission is prioritized: each step offers per-prompt groups of correct
 * (sequence, behavior log-prob) pairs with one priority per prompt; prompts
 * are ranked by descending priority (ties toward the smaller id) and their
 * pairs appended one prompt at a time until the per-step admission budget is
 * exhausted. Eviction is insertion-order FIFO down to capacity. Draining for
 * training returns every entry, oldest first, without consuming anything.
 */
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  using CorrectPairs = std::map<PromptId, std::vector<std::pair<Sequence, double>>>;

  void push_step(const CorrectPairs& pairs, const std::map<PromptId, double>& priorities,
                 std::size_t add_budget, std::int64_t step) {
    std::vector<std::pair<double, PromptId>> order;
    order.reserve(pairs.size());
    for (const auto& [id, group] : pairs) {
      auto it = priorities.find(id);
      if (it == priorities.end())
        throw std::invalid_argument("push_step: missing priority for prompt " +
                                    std::to_string(id));
      (void)group;
      order.emplace_back(-it->second, id);
    }
    std::sort(order.begin(), order.end());

    std::size_t added = 0;
    for (const auto& [neg_priority, id] : order) {
      if (added >= add_budget) break;
      const auto& group = pairs.at(id);
      for (const auto& [seq, lp] : group) {
        if (added >= add_budget) break;
        entries_.push_back(ReplayEntry{id, seq, lp, -neg_priority, step});
        ++added;
      }
    }
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  /// Every stored entry as a training sample (reward bit 1 by construction),
  /// oldest first. Non-destructive: the buffer is unchanged.
  std::vector<TBSample> drain_for_training() const {
    std::vector<TBSample> out;
    out.reserve(entries_.size());
    for (const ReplayEntry& e : entries_)
      out.push_back(TBSample{e.prompt_id, e.seq, e.behavior_log_prob, 1, SampleSource::replay});
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<ReplayEntry>& entries() const { return entries_; }

  double mean_priority() const {
    if (entries_.empty()) return 0.0;
    double s = 0.0;
    for (const ReplayEntry& e : entries_) s += e.priority_at_insert;
    return s / static_cast<double>(entries_.size());
  }

  /// Mean steps-since-insertion relative to current_step.
  double mean_age(std::int64_t current_step) const {
    if (entries_.empty()) return 0.0;
    double s = 0.0;
    for (const ReplayEntry& e : entries_)
      s += static_cast<double>(current_step - e.step_inserted);
    return s / static_cast<double>(entries_.size());
  }

 private:
  std::size_t capacity_;
  std::deque<ReplayEntry> entries_;
};

}  // namespace paced
