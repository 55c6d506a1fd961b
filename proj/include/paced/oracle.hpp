#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "paced/env.hpp"
#include "paced/policy.hpp"

namespace paced {

/// Total variation distance between two distributions given as dense vectors.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

namespace detail {

/// Applies fn(seq, index) to every sequence in the prompt's space, in index order.
template <typename Fn>
void for_each_sequence(const Prompt& prompt, Fn&& fn) {
  const std::uint64_t n = prompt.space_size();
  Sequence seq(static_cast<std::size_t>(prompt.seq_len), 0);
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    fn(const_cast<const Sequence&>(seq), idx);
    for (int t = prompt.seq_len - 1; t >= 0; --t) {  // odometer increment
      if (++seq[static_cast<std::size_t>(t)] < prompt.vocab_size) break;
      seq[static_cast<std::size_t>(t)] = 0;
    }
  }
}

inline bool accepts(const Prompt& prompt, std::uint64_t idx, std::size_t& cursor) {
  // accepting_set is sorted and idx visits 0..n-1 in order, so a moving
  // cursor replaces the per-sequence binary search.
  if (cursor < prompt.accepting_set.size() && prompt.accepting_set[cursor] == idx) {
    ++cursor;
    return true;
  }
  return false;
}

}  // namespace detail

/// Exact log Z(x) = log sum_y pi(y|x) * exp(r(y)/beta) by full enumeration,
/// evaluated with a stable log-sum-exp.
inline double exact_partition(const Prompt& prompt, const PolicyTable& policy, double beta,
                              double a = 0.0, double b = 1.0) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(b != a)) throw std::invalid_argument("reward levels must differ");
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(prompt.space_size()));
  std::size_t cursor = 0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    int bit = detail::accepts(prompt, idx, cursor) ? 1 : 0;
    terms.push_back(log_prob(policy, prompt, seq) + reward_value(bit, a, b) / beta);
  });
  double m = terms[0];
  for (double t : terms)
    if (t > m) m = t;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

/// Exact accuracy: probability mass the policy puts on the accepting set.
inline double exact_accuracy(const Prompt& prompt, const PolicyTable& policy) {
  double acc = 0.0;
  std::size_t cursor = 0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    if (detail::accepts(prompt, idx, cursor)) acc += std::exp(log_prob(policy, prompt, seq));
  });
  return acc;
}

/// Exact KL(p || q) for one prompt, both policies fully enumerated.
inline double exact_kl(const PolicyTable& p, const PolicyTable& q, const Prompt& prompt) {
  double kl = 0.0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t) {
    double lp = log_prob(p, prompt, seq);
    kl += std::exp(lp) * (lp - log_prob(q, prompt, seq));
  });
  return kl;
}

/// The zeta value minimizing the expected trajectory-balance loss under
/// rollouts from old_policy:
///   E_{y~old}[ r(y)/beta + log old(y) - log theta(y) ].
/// Equals exact_partition(prompt, old_policy, ...) exactly when theta is the
/// reward-tilted target of old_policy; for other theta the two differ.
inline double optimal_log_z(const Prompt& prompt, const PolicyTable& old_policy,
                            const PolicyTable& theta, double beta,
                            double a = 0.0, double b = 1.0) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  double z = 0.0;
  std::size_t cursor = 0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    int bit = detail::accepts(prompt, idx, cursor) ? 1 : 0;
    double lp_old = log_prob(old_policy, prompt, seq);
    z += std::exp(lp_old) *
         (reward_value(bit, a, b) / beta + lp_old - log_prob(theta, prompt, seq));
  });
  return z;
}

/// Dense target distribution pi*(y) proportional to pi(y) * exp(r(y)/beta),
/// indexed by sequence index. Sums to 1 up to rounding.
inline std::vector<double> target_policy(const Prompt& prompt, const PolicyTable& policy,
                                         double beta, double a = 0.0, double b = 1.0) {
  double log_z = exact_partition(prompt, policy, beta, a, b);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(prompt.space_size()));
  std::size_t cursor = 0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    int bit = detail::accepts(prompt, idx, cursor) ? 1 : 0;
    out.push_back(std::exp(log_prob(policy, prompt, seq) +
                           reward_value(bit, a, b) / beta - log_z));
  });
  return out;
}

/// A PolicyTable that realizes the reward-tilted target of `policy` exactly:
/// each edge logit is the log of the tilted mass routed through that edge, so
/// per-node softmaxes reproduce the target's autoregressive conditionals.
inline PolicyTable tilted_policy_table(const Prompt& prompt, const PolicyTable& policy,
                                       double beta, double a = 0.0, double b = 1.0) {
  PolicyTable out(prompt.vocab_size, prompt.seq_len);
  out.add_prompt(prompt.id);
  std::vector<double>& table = out.logits_for(prompt.id);
  const int v = prompt.vocab_size;

  std::vector<double> exponents;
  exponents.reserve(static_cast<std::size_t>(prompt.space_size()));
  std::size_t cursor = 0;
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    int bit = detail::accepts(prompt, idx, cursor) ? 1 : 0;
    exponents.push_back(log_prob(policy, prompt, seq) + reward_value(bit, a, b) / beta);
  });
  double shift = exponents[0];
  for (double e : exponents)
    if (e > shift) shift = e;

  std::vector<double> edge_mass(table.size(), 0.0);
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t idx) {
    double w = std::exp(exponents[idx] - shift);
    std::uint64_t node = 0;
    for (Token t : seq) {
      edge_mass[node * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(t)] += w;
      node = node * static_cast<std::uint64_t>(v) + 1 + static_cast<std::uint64_t>(t);
    }
  });
  for (std::size_t i = 0; i < table.size(); ++i)
    table[i] = edge_mass[i] > 0.0 ? std::log(edge_mass[i])
                                  : -std::numeric_limits<double>::infinity();
  return out;
}

/// Dense policy distribution over sequence indices, for TV comparisons.
inline std::vector<double> dense_policy(const Prompt& prompt, const PolicyTable& policy) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(prompt.space_size()));
  detail::for_each_sequence(prompt, [&](const Sequence& seq, std::uint64_t) {
    out.push_back(std::exp(log_prob(policy, prompt, seq)));
  });
  return out;
}

}  // namespace paced
