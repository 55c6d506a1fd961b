#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "paced/env.hpp"
#include "paced/loss.hpp"
#include "paced/oracle.hpp"
#include "paced/policy.hpp"
#include "paced/rng.hpp"

namespace paced {

/// A self-contained random problem instance for identity checks: one prompt
/// with a random accepting set plus two independently random policies over it.
struct RandomInstance {
  Prompt prompt;
  PolicyTable old_policy;
  PolicyTable theta;
};

inline RandomInstance random_instance(RngStream& rng, int vocab_min = 2, int vocab_max = 3,
                                      int len_min = 1, int len_max = 4,
                                      double logit_scale = 1.5) {
  RandomInstance inst;
  int v = vocab_min + static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(vocab_max - vocab_min + 1)));
  int l = len_min + static_cast<int>(rng.next_below(
                        static_cast<std::uint64_t>(len_max - len_min + 1)));
  std::uint64_t n = sequence_space_size(v, l);
  inst.prompt.id = 0;
  inst.prompt.vocab_size = v;
  inst.prompt.seq_len = l;
  inst.prompt.accepting_set = sample_without_replacement(n, rng.next_below(n + 1), rng);

  auto random_policy = [&]() {
    PolicyTable p(v, l);
    p.add_prompt(0);
    for (double& x : p.logits_for(0)) x = logit_scale * rng.next_gaussian();
    return p;
  };
  inst.old_policy = random_policy();
  inst.theta = random_policy();
  return inst;
}

/// Random rollout batch from the instance's old policy, for estimator checks.
inline std::vector<TBSample> random_batch(const RandomInstance& inst, RngStream& rng,
                                          int max_size = 16) {
  int size = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_size)));
  std::vector<TBSample> batch;
  batch.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    auto [seq, lp] = sample(inst.old_policy, inst.prompt, rng);
    int bit = verify(inst.prompt, seq);
    batch.push_back(TBSample{0, std::move(seq), lp, bit, SampleSource::fresh});
  }
  return batch;
}

struct IdentityCheck {
  std::string name;
  int instances = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/**
 * The oracle identity suite behind the `verify` subcommand.
 *
 * Each check sweeps randomized instances and records the worst residual of an
 * identity that must hold exactly (up to float rounding):
 *   accuracy_identity     p(x) = beta * logZ* - beta * KL(old || theta)
 *   general_rewards       p(x) = (beta * logZ* - beta * KL - a) / (b - a)
 *   vargrad_minimizer     batch logZ estimate minimizes the batch TB loss
 *   optimal_z_at_target   logZ* equals exact logZ when theta is the tilted target
 *   partition_bounds      exact logZ within [a/beta, b/beta]
 *   target_normalization  tilted target sums to one
 *   policy_normalization  policy mass over the full space sums to one
 *   kl_properties         KL(p||p) = 0 and KL(p||q) >= 0
 */
inline std::vector<IdentityCheck> run_oracle_suite(std::uint64_t seed = 12345,
                                                   int instances = 120) {
  std::vector<IdentityCheck> checks;
  const double betas[] = {0.05, 0.5, 1.0};

  {
    IdentityCheck c{"accuracy_identity", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 1}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      double p = exact_accuracy(inst.prompt, inst.old_policy);
      double z = optimal_log_z(inst.prompt, inst.old_policy, inst.theta, beta);
      double kl = exact_kl(inst.old_policy, inst.theta, inst.prompt);
      c.max_residual = std::max(c.max_residual, std::abs(p - (beta * z - beta * kl)));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"general_rewards", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 2}));
    const double levels[][2] = {{-1.0, 1.0}, {0.0, 2.0}};
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      double a = levels[i % 2][0], b = levels[i % 2][1];
      double p = exact_accuracy(inst.prompt, inst.old_policy);
      double z = optimal_log_z(inst.prompt, inst.old_policy, inst.theta, beta, a, b);
      double kl = exact_kl(inst.old_policy, inst.theta, inst.prompt);
      c.max_residual =
          std::max(c.max_residual, std::abs(p - (beta * z - beta * kl - a) / (b - a)));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"vargrad_minimizer", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 3}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      std::vector<TBSample> batch = random_batch(inst, rng);
      double zv = vargrad_log_z(batch, inst.theta, beta);
      // closed-form minimizer of the batch loss over zeta
      double opt = 0.0;
      for (const TBSample& s : batch)
        opt -= tb_residual(0.0, detail::log_prob_id(inst.theta, 0, s.seq),
                           s.behavior_log_prob, s.reward_bit, beta);
      opt /= static_cast<double>(batch.size());
      c.max_residual = std::max(c.max_residual, std::abs(zv - opt));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"optimal_z_at_target", instances, 0.0, 1e-10, false};
    RngStream rng(derive_key({seed, 4}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      PolicyTable target = tilted_policy_table(inst.prompt, inst.old_policy, beta);
      double z_star = optimal_log_z(inst.prompt, inst.old_policy, target, beta);
      double z_exact = exact_partition(inst.prompt, inst.old_policy, beta);
      c.max_residual = std::max(c.max_residual, std::abs(z_star - z_exact));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"partition_bounds", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 5}));
    const double levels[][2] = {{0.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}};
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      double a = levels[i % 3][0], b = levels[i % 3][1];
      double z = exact_partition(inst.prompt, inst.old_policy, beta, a, b);
      double viol = std::max(a / beta - z, z - b / beta);
      c.max_residual = std::max(c.max_residual, std::max(0.0, viol));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"target_normalization", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 6}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double beta = betas[i % 3];
      std::vector<double> t = target_policy(inst.prompt, inst.old_policy, beta);
      double s = 0.0;
      for (double x : t) s += x;
      c.max_residual = std::max(c.max_residual, std::abs(s - 1.0));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"policy_normalization", instances, 0.0, 1e-9, false};
    RngStream rng(derive_key({seed, 7}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      std::vector<double> d = dense_policy(inst.prompt, inst.theta);
      double s = 0.0;
      for (double x : d) s += x;
      c.max_residual = std::max(c.max_residual, std::abs(s - 1.0));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"kl_properties", instances, 0.0, 1e-12, false};
    RngStream rng(derive_key({seed, 8}));
    for (int i = 0; i < instances; ++i) {
      RandomInstance inst = random_instance(rng);
      double self_kl = std::abs(exact_kl(inst.old_policy, inst.old_policy, inst.prompt));
      double cross_kl = exact_kl(inst.old_policy, inst.theta, inst.prompt);
      c.max_residual = std::max(c.max_residual, std::max(self_kl, std::max(0.0, -cross_kl)));
    }
    c.pass = c.max_residual < c.tolerance;
    checks.push_back(c);
  }
  return checks;
}

inline bool all_pass(const std::vector<IdentityCheck>& checks) {
  for (const IdentityCheck& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace paced
