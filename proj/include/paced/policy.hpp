#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "paced/env.hpp"
#include "paced/rng.hpp"

namespace paced {

/// Nodes in the prefix tree of depth L over V tokens: 1 + V + ... + V^(L-1).
inline std::uint64_t prefix_node_count(int vocab_size, int seq_len,
                                       std::uint64_t budget = kDefaultEnumerationBudget) {
  std::uint64_t space = sequence_space_size(vocab_size, seq_len, budget);
  return (space - 1) / static_cast<std::uint64_t>(vocab_size - 1);
}

/// Log-sum-exp over one node's V logits, stable and order-fixed.
inline double log_sum_exp(const double* logits, int count) {
  double m = logits[0];
  for (int v = 1; v < count; ++v)
    if (logits[v] > m) m = logits[v];
  double s = 0.0;
  for (int v = 0; v < count; ++v) s += std::exp(logits[v] - m);
  return m + std::log(s);
}

/**
 * Tabular autoregressive policy over fixed-length sequences.
 *
 * Each prompt owns a V-ary prefix tree of raw logits, flattened node-major:
 * entry [node * V + v] is the logit for emitting token v at that prefix.
 * Node 0 is the root (empty prefix); the child of node n under token t is
 * n * V + 1 + t. Token probabilities are softmax per node, so sequence
 * log-probabilities are exact sums of per-step log-softmax terms and the
 * policy is normalized by construction.
 */
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(int vocab_size, int seq_len)
      : vocab_size_(vocab_size), seq_len_(seq_len),
        nodes_(prefix_node_count(vocab_size, seq_len)) {}

  static PolicyTable uniform(const Dataset& ds) {
    PolicyTable p(ds.vocab_size, ds.seq_len);
    for (const Prompt& pr : ds.prompts) p.add_prompt(pr.id);
    return p;
  }

  /// Logits drawn i.i.d. N(0, stddev^2); stddev 0 reduces to uniform().
  static PolicyTable gaussian_init(const Dataset& ds, double stddev, std::uint64_t seed) {
    if (stddev < 0.0) throw std::invalid_argument("gaussian_init: stddev must be >= 0");
    PolicyTable p = uniform(ds);
    if (stddev == 0.0) return p;
    for (auto& [id, logits] : p.logits_) {
      RngStream rng(derive_key({seed, 0x91, static_cast<std::uint64_t>(id)}));
      for (double& x : logits) x = stddev * rng.next_gaussian();
    }
    return p;
  }

  void add_prompt(PromptId id) {
    logits_.emplace(id, std::vector<double>(nodes_ * static_cast<std::uint64_t>(vocab_size_), 0.0));
  }

  int vocab_size() const { return vocab_size_; }
  int seq_len() const { return seq_len_; }
  std::uint64_t nodes_per_prompt() const { return nodes_; }
  bool has_prompt(PromptId id) const { return logits_.count(id) != 0; }

  std::vector<double>& logits_for(PromptId id) {
    auto it = logits_.find(id);
    if (it == logits_.end())
      throw std::out_of_range("policy has no prompt with id " + std::to_string(id));
    return it->second;
  }
  const std::vector<double>& logits_for(PromptId id) const {
    auto it = logits_.find(id);
    if (it == logits_.end())
      throw std::out_of_range("policy has no prompt with id " + std::to_string(id));
    return it->second;
  }
  const std::map<PromptId, std::vector<double>>& tables() const { return logits_; }

  /// Deep value copy; the snapshot is unaffected by later updates to *this.
  PolicyTable snapshot() const { return *this; }

 private:
  int vocab_size_ = 2;
  int seq_len_ = 1;
  std::uint64_t nodes_ = 1;
  std::map<PromptId, std::vector<double>> logits_;
};

namespace detail {

inline void check_policy_sequence(const PolicyTable& policy, const Sequence& seq) {
  if (static_cast<int>(seq.size()) != policy.seq_len())
    throw std::invalid_argument("sequence length does not match policy");
  for (Token t : seq)
    if (t < 0 || t >= policy.vocab_size())
      throw std::invalid_argument("token out of vocabulary range");
}

inline double log_prob_id(const PolicyTable& policy, PromptId id, const Sequence& seq) {
  check_policy_sequence(policy, seq);
  const std::vector<double>& table = policy.logits_for(id);
  const int v = policy.vocab_size();
  double lp = 0.0;
  std::uint64_t node = 0;
  for (Token t : seq) {
    const double* row = table.data() + node * static_cast<std::uint64_t>(v);
    lp += row[t] - log_sum_exp(row, v);
    node = node * static_cast<std::uint64_t>(v) + 1 + static_cast<std::uint64_t>(t);
  }
  return lp;
}

}  // namespace detail

/// Exact log pi(seq | prompt): sum of per-position log-softmax terms.
inline double log_prob(const PolicyTable& policy, const Prompt& prompt, const Sequence& seq) {
  if (prompt.vocab_size != policy.vocab_size() || prompt.seq_len != policy.seq_len())
    throw std::invalid_argument("prompt shape does not match policy");
  return detail::log_prob_id(policy, prompt.id, seq);
}

/**
 * Ancestral sampling: one token per step by inverse-CDF over the node's
 * softmax. The returned log-probability is computed by the same code path as
 * log_prob(), so the pair (sequence, value) always satisfies
 * value == log_prob(policy, prompt, sequence) bit-for-bit.
 */
inline std::pair<Sequence, double> sample(const PolicyTable& policy, const Prompt& prompt,
                                          RngStream& rng) {
  if (prompt.vocab_size != policy.vocab_size() || prompt.seq_len != policy.seq_len())
    throw std::invalid_argument("prompt shape does not match policy");
  const std::vector<double>& table = policy.logits_for(prompt.id);
  const int v = policy.vocab_size();
  Sequence seq;
  seq.reserve(static_cast<std::size_t>(policy.seq_len()));
  std::uint64_t node = 0;
  for (int step = 0; step < policy.seq_len(); ++step) {
    const double* row = table.data() + node * static_cast<std::uint64_t>(v);
    double lse = log_sum_exp(row, v);
    double u = rng.next_unit();
    double cum = 0.0;
    Token pick = static_cast<Token>(v - 1);
    for (int tok = 0; tok < v; ++tok) {
      cum += std::exp(row[tok] - lse);
      if (u < cum) {
        pick = static_cast<Token>(tok);
        break;
      }
    }
    seq.push_back(pick);
    node = node * static_cast<std::uint64_t>(v) + 1 + static_cast<std::uint64_t>(pick);
  }
  return {seq, detail::log_prob_id(policy, prompt.id, seq)};
}

}  // namespace paced
