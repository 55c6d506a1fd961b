#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "paced/env.hpp"

namespace paced {

/**
 * Per-prompt learned log-partition values (the zeta parameters).
 *
 * Reading a prompt that was never written returns init_value, so the store
 * behaves as a total map over prompt ids; writes materialize the entry.
 */
class PartitionStore {
 public:
  explicit PartitionStore(double init_value = 0.0) : init_(init_value) {}

  static PartitionStore for_dataset(const Dataset& ds, double init_value = 0.0) {
    PartitionStore s(init_value);
    for (const Prompt& p : ds.prompts) s.values_[p.id] = init_value;
    return s;
  }

  double log_z(PromptId id) const {
    auto it = values_.find(id);
    return it == values_.end() ? init_ : it->second;
  }
  void set_log_z(PromptId id, double value) { values_[id] = value; }
  void add_log_z(PromptId id, double delta) { values_[id] = log_z(id) + delta; }

  double init_value() const { return init_; }
  const std::map<PromptId, double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  double init_;
  std::map<PromptId, double> values_;
};

/// Online accuracy estimate for 0/1 rewards: clip(beta * zeta, 0, 1).
inline double accuracy_estimate(const PartitionStore& store, PromptId id, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return std::clamp(beta * store.log_z(id), 0.0, 1.0);
}

/// General two-level rewards (incorrect -> a, correct -> b):
/// clip((beta * zeta - a) / (b - a), 0, 1). Reduces to accuracy_estimate at (0, 1).
inline double accuracy_estimate_general(const PartitionStore& store, PromptId id,
                                        double beta, double a, double b) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(b > a)) throw std::invalid_argument("reward levels must satisfy b > a");
  return std::clamp((beta * store.log_z(id) - a) / (b - a), 0.0, 1.0);
}

}  // namespace paced
