#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "paced/env.hpp"
#include "paced/partition.hpp"
#include "paced/policy.hpp"

namespace paced {

enum class SampleSource { fresh, replay };

/// One training sample: a completed sequence for a prompt, the log-probability
/// it had under the policy that generated it, and its verifier bit.
struct TBSample {
  PromptId prompt_id = 0;
  Sequence seq;
  double behavior_log_prob = 0.0;
  int reward_bit = 0;
  SampleSource source = SampleSource::fresh;
};

/// Trajectory-balance residual
///   delta = zeta + log pi_theta(y) - log pi_behavior(y) - r(y)/beta;
/// the squared-loss contribution of one sample is delta^2.
inline double tb_residual(double zeta, double log_pi_theta, double behavior_log_prob,
                          int reward_bit, double beta, double a = 0.0, double b = 1.0) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return zeta + log_pi_theta - behavior_log_prob - reward_value(reward_bit, a, b) / beta;
}

inline std::vector<double> batch_residuals(const std::vector<TBSample>& batch,
                                           const PolicyTable& policy,
                                           const PartitionStore& store, double beta,
                                           double a = 0.0, double b = 1.0) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const TBSample& s : batch)
    out.push_back(tb_residual(store.log_z(s.prompt_id),
                              detail::log_prob_id(policy, s.prompt_id, s.seq),
                              s.behavior_log_prob, s.reward_bit, beta, a, b));
  return out;
}

/// Gradients of a scalar loss with respect to every touched parameter.
/// Logit gradients are dense per prompt (same layout as PolicyTable tables);
/// prompts never touched by the batch have no entry.
struct GradientSet {
  std::map<PromptId, std::vector<double>> logit_grads;
  std::map<PromptId, double> zeta_grads;
  double global_norm = 0.0;  // over all components, zeta included

  double norm(bool include_zeta = true) const {
    double sq = 0.0;
    for (const auto& [id, g] : logit_grads)
      for (double x : g) sq += x * x;
    if (include_zeta)
      for (const auto& [id, g] : zeta_grads) sq += g * g;
    return std::sqrt(sq);
  }

  bool finite() const {
    for (const auto& [id, g] : logit_grads)
      for (double x : g)
        if (!std::isfinite(x)) return false;
    for (const auto& [id, g] : zeta_grads)
      if (!std::isfinite(g)) return false;
    return true;
  }
};

namespace detail {

/// Adds weight * d(delta_i)/d(params) driven by coef = weight * delta for one
/// sample: log-softmax gradient (indicator - softmax) at each visited node,
/// and 1 for the sample's zeta.
inline void accumulate_sample_grad(const PolicyTable& policy, const TBSample& s, double coef,
                                   GradientSet& grads) {
  const std::vector<double>& table = policy.logits_for(s.prompt_id);
  const int v = policy.vocab_size();
  auto it = grads.logit_grads.find(s.prompt_id);
  if (it == grads.logit_grads.end())
    it = grads.logit_grads.emplace(s.prompt_id, std::vector<double>(table.size(), 0.0)).first;
  std::vector<double>& g = it->second;
  std::uint64_t node = 0;
  for (Token t : s.seq) {
    const double* row = table.data() + node * static_cast<std::uint64_t>(v);
    double lse = log_sum_exp(row, v);
    double* grow = g.data() + node * static_cast<std::uint64_t>(v);
    for (int tok = 0; tok < v; ++tok) {
      double p = std::exp(row[tok] - lse);
      grow[tok] += coef * ((tok == t ? 1.0 : 0.0) - p);
    }
    node = node * static_cast<std::uint64_t>(v) + 1 + static_cast<std::uint64_t>(t);
  }
  grads.zeta_grads[s.prompt_id] += coef;
}

inline GradientSet tb_grad_impl(const std::vector<TBSample>& batch,
                                const std::vector<double>& weights,
                                const PolicyTable& policy, const PartitionStore& store,
                                double beta, double a, double b) {
  if (batch.empty()) throw std::invalid_argument("tb_grad: batch must be non-empty");
  GradientSet grads;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TBSample& s = batch[i];
    detail::check_policy_sequence(policy, s.seq);
    double delta = tb_residual(store.log_z(s.prompt_id),
                               detail::log_prob_id(policy, s.prompt_id, s.seq),
                               s.behavior_log_prob, s.reward_bit, beta, a, b);
    accumulate_sample_grad(policy, s, 2.0 * weights[i] * delta, grads);
  }
  grads.global_norm = grads.norm(true);
  return grads;
}

}  // namespace detail

/// Gradient of the batch-mean squared residual (1/B) sum_i delta_i^2 with
/// respect to the policy logits and the per-prompt zeta values.
inline GradientSet tb_grad(const std::vector<TBSample>& batch, const PolicyTable& policy,
                           const PartitionStore& store, double beta,
                           double a = 0.0, double b = 1.0) {
  std::vector<double> w(batch.size(), batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size()));
  return detail::tb_grad_impl(batch, w, policy, store, beta, a, b);
}

/// Gradient of sum_i w_i delta_i^2 for caller-chosen weights; with w_i the
/// behavior probabilities over an enumerated space this is the gradient of the
/// exact expected loss.
inline GradientSet tb_grad_weighted(const std::vector<TBSample>& batch,
                                    const std::vector<double>& weights,
                                    const PolicyTable& policy, const PartitionStore& store,
                                    double beta, double a = 0.0, double b = 1.0) {
  if (weights.size() != batch.size())
    throw std::invalid_argument("tb_grad_weighted: weights size must match batch");
  return detail::tb_grad_impl(batch, weights, policy, store, beta, a, b);
}

/// Batch estimate of log Z from rollouts of one prompt (no zeta parameter):
///   (1/N) sum_j [ log pi_behavior(y_j) + r_j/beta - log pi_theta(y_j) ];
/// the minimizer over zeta of the batch TB loss with pi_theta held fixed.
inline double vargrad_log_z(const std::vector<TBSample>& rollouts, const PolicyTable& policy,
                            double beta, double a = 0.0, double b = 1.0) {
  if (rollouts.empty()) throw std::invalid_argument("vargrad_log_z: need at least one rollout");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  PromptId id = rollouts.front().prompt_id;
  double s = 0.0;
  for (const TBSample& r : rollouts) {
    if (r.prompt_id != id)
      throw std::invalid_argument("vargrad_log_z: rollouts must share one prompt");
    s += r.behavior_log_prob + reward_value(r.reward_bit, a, b) / beta -
         detail::log_prob_id(policy, id, r.seq);
  }
  return s / static_cast<double>(rollouts.size());
}

struct SgdResult {
  bool applied = false;
  double grad_norm = 0.0;  // pre-clip norm over the updated parameter groups
  double scale = 1.0;      // clip_norm / grad_norm when clipping fired, else 1
};

/**
 * One plain SGD step with global-norm clipping. The norm is taken jointly
 * over every parameter the step will update; if it exceeds clip_norm all
 * gradients are rescaled by clip_norm / norm before the per-group learning
 * rates are applied. Nonfinite gradients leave the parameters untouched and
 * report applied = false.
 */
inline SgdResult sgd_step(PolicyTable& policy, PartitionStore& store, const GradientSet& grads,
                          double lr_theta, double lr_zeta, double clip_norm,
                          bool update_zeta = true) {
  if (!(lr_theta > 0.0)) throw std::invalid_argument("lr_theta must be positive");
  if (!(lr_zeta > 0.0)) throw std::invalid_argument("lr_zeta must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");

  SgdResult res;
  if (!grads.finite()) return res;
  res.grad_norm = grads.norm(update_zeta);
  res.scale = res.grad_norm > clip_norm ? clip_norm / res.grad_norm : 1.0;
  for (const auto& [id, g] : grads.logit_grads) {
    std::vector<double>& w = policy.logits_for(id);
    if (w.size() != g.size()) throw std::invalid_argument("gradient shape does not match policy");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr_theta * res.scale * g[i];
  }
  if (update_zeta)
    for (const auto& [id, g] : grads.zeta_grads)
      store.add_log_z(id, -lr_zeta * res.scale * g);
  res.applied = true;
  return res;
}

}  // namespace paced
