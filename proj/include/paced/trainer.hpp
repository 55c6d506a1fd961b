#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "paced/env.hpp"
#include "paced/loss.hpp"
#include "paced/metrics.hpp"
#include "paced/oracle.hpp"
#include "paced/partition.hpp"
#include "paced/policy.hpp"
#include "paced/replay.hpp"
#include "paced/rng.hpp"
#include "paced/schedule.hpp"

namespace paced {

enum class SchedulerKind { paced, uniform, ds, lilo, oracle_paced };
enum class LossAnchor { pi_old, pi_ref };
enum class ZMode { learned, vargrad };

inline std::string to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::paced: return "paced";
    case SchedulerKind::uniform: return "uniform";
    case SchedulerKind::ds: return "ds";
    case SchedulerKind::lilo: return "lilo";
    case SchedulerKind::oracle_paced: return "oracle_paced";
  }
  throw std::logic_error("unknown scheduler kind");
}
inline std::string to_string(LossAnchor a) {
  return a == LossAnchor::pi_old ? "pi_old" : "pi_ref";
}
inline std::string to_string(ZMode z) { return z == ZMode::learned ? "learned" : "vargrad"; }

inline SchedulerKind scheduler_from_string(const std::string& s) {
  if (s == "paced") return SchedulerKind::paced;
  if (s == "uniform") return SchedulerKind::uniform;
  if (s == "ds") return SchedulerKind::ds;
  if (s == "lilo") return SchedulerKind::lilo;
  if (s == "oracle_paced") return SchedulerKind::oracle_paced;
  throw std::invalid_argument("scheduler: unknown value '" + s +
                              "' (expected paced|uniform|ds|lilo|oracle_paced)");
}
inline LossAnchor anchor_from_string(const std::string& s) {
  if (s == "pi_old") return LossAnchor::pi_old;
  if (s == "pi_ref") return LossAnchor::pi_ref;
  throw std::invalid_argument("loss_anchor: unknown value '" + s + "' (expected pi_old|pi_ref)");
}
inline ZMode zmode_from_string(const std::string& s) {
  if (s == "learned") return ZMode::learned;
  if (s == "vargrad") return ZMode::vargrad;
  throw std::invalid_argument("z_mode: unknown value '" + s + "' (expected learned|vargrad)");
}

/**
 * Full training configuration. Every run parameter lives here so that one
 * (config, dataset) pair pins a run exactly; all randomness anywhere in a run
 * derives from `seed`.
 */
struct TrainConfig {
  double beta = 0.05;            // reward temperature
  double tau = 0.5;              // target batch accuracy for paced selection
  int steps = 300;               // outer training steps
  int batch_size = 8;            // prompts selected per step (m)
  int rollouts = 8;              // rollouts per selected prompt (N)
  int buffer_capacity = 128;     // replay capacity (entries)
  int buffer_add = 64;           // replay admissions per step (0 disables replay)
  double lr_theta = 0.02;        // policy logits learning rate
  double lr_zeta = 5.0;          // partition parameter learning rate
  double clip_norm = 1.0;        // global gradient norm clip
  int inner_updates = 1;         // SGD steps per batch
  SchedulerKind scheduler = SchedulerKind::paced;
  LossAnchor loss_anchor = LossAnchor::pi_old;
  ZMode z_mode = ZMode::learned;
  double reward_incorrect = 0.0;  // a
  double reward_correct = 1.0;    // b
  std::uint64_t seed = 1;
  int eval_every = 10;
  std::vector<int> eval_ks = {8};
  std::optional<double> zeta_init;  // default: value making the initial estimate equal tau
  double policy_init_stddev = 0.0;  // 0 = uniform policy init
  int lilo_oversample = 0;          // pool size for lilo; 0 = 4 * batch_size
  int ds_max_redraws = 4;           // extra pools ds may draw when all prompts filter out
  int workers = 1;                  // rollout worker threads; never affects results

  double resolved_zeta_init() const {
    if (zeta_init) return *zeta_init;
    return (reward_incorrect + (reward_correct - reward_incorrect) * tau) / beta;
  }
  int resolved_lilo_pool(std::size_t dataset_size) const {
    int pool = lilo_oversample > 0 ? lilo_oversample : 4 * batch_size;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(pool), dataset_size));
  }

  void validate(std::size_t dataset_size) const {
    auto bad = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(beta > 0.0)) bad("beta: must be positive");
    if (!(tau >= 0.0 && tau <= 1.0)) bad("tau: must lie in [0, 1]");
    if (steps < 1) bad("steps: must be at least 1");
    if (batch_size < 1) bad("batch_size: must be at least 1");
    if (static_cast<std::size_t>(batch_size) > dataset_size)
      bad("batch_size: exceeds number of prompts in the dataset (" +
          std::to_string(batch_size) + " > " + std::to_string(dataset_size) + ")");
    if (rollouts < 1) bad("rollouts: must be at least 1");
    if (buffer_capacity < 1) bad("buffer_capacity: must be at least 1");
    if (buffer_add < 0) bad("buffer_add: must be non-negative");
    if (!(lr_theta > 0.0)) bad("lr_theta: must be positive");
    if (!(lr_zeta > 0.0)) bad("lr_zeta: must be positive");
    if (!(clip_norm > 0.0)) bad("clip_norm: must be positive");
    if (inner_updates < 1) bad("inner_updates: must be at least 1");
    if (!(reward_correct > reward_incorrect))
      bad("reward_correct: must exceed reward_incorrect");
    if (eval_every < 1) bad("eval_every: must be at least 1");
    if (eval_ks.empty()) bad("eval_ks: must be non-empty");
    for (int k : eval_ks)
      if (k < 1) bad("eval_ks: entries must be at least 1");
    if (zeta_init && !std::isfinite(*zeta_init)) bad("zeta_init: must be finite");
    if (policy_init_stddev < 0.0) bad("policy_init_stddev: must be non-negative");
    if (lilo_oversample < 0) bad("lilo_oversample: must be non-negative");
    if (lilo_oversample > 0 && lilo_oversample < batch_size)
      bad("lilo_oversample: must be at least batch_size");
    if (ds_max_redraws < 0) bad("ds_max_redraws: must be non-negative");
    if (workers < 1) bad("workers: must be at least 1");
  }
};

/// Everything logged for one training step. Arrays are aligned with
/// `selected`; a skipped step (ds scheduler found nothing trainable) has
/// empty arrays and no update.
struct StepLog {
  int step = 0;  // 1-based
  std::vector<PromptId> selected;
  std::vector<double> estimates;      // selection-time accuracy estimates
  std::vector<double> observed;       // Monte Carlo accuracy from fresh rollouts
  std::vector<double> zeta;           // post-update partition values
  int pool_attempts = 1;              // pools drawn (ds re-draws; 1 otherwise)
  bool skipped = false;
  int rollouts_used = 0;
  int fresh_samples = 0;
  int replay_samples = 0;
  double mean_loss = 0.0;
  double residual_mean = 0.0;
  double residual_min = 0.0;
  double residual_max = 0.0;
  double grad_norm = 0.0;   // pre-clip, last inner update
  double clip_scale = 1.0;  // rescale factor applied by clipping
  bool update_applied = false;
  double beta_kl_max = 0.0;            // max_x beta * KL(pi_old || pi_theta)
  double beta_kl_mean_selected = 0.0;  // same, averaged over the step's batch
  std::size_t buffer_size = 0;
  double buffer_mean_priority = 0.0;
  double buffer_mean_age = 0.0;
  DifficultyStats difficulty;  // of the selected batch, under the initial policy
};

struct PromptEval {
  PromptId prompt_id = 0;
  double pass1 = 0.0;
  std::vector<double> pass_at;  // aligned with the config's eval_ks
};

struct EvalRecord {
  int step = 0;
  std::vector<PromptEval> prompts;
  double mean_pass1 = 0.0;
};

struct CorrelationRecord {
  int step = 0;
  double spearman_rho = 0.0;  // NaN if degenerate (zero-variance input)
  double pearson_r = 0.0;
};

/// Exact per-prompt evaluation by enumeration: pass@1 is the policy's mass on
/// the accepting set, pass@k = 1 - (1 - pass@1)^k.
inline EvalRecord evaluate(const Dataset& ds, const PolicyTable& policy,
                           const std::vector<int>& ks, int step = 0) {
  EvalRecord rec;
  rec.step = step;
  double sum = 0.0;
  for (const Prompt& p : ds.prompts) {
    PromptEval pe;
    pe.prompt_id = p.id;
    pe.pass1 = exact_accuracy(p, policy);
    for (int k : ks) pe.pass_at.push_back(pass_at_k(pe.pass1, k));
    sum += pe.pass1;
    rec.prompts.push_back(std::move(pe));
  }
  rec.mean_pass1 = ds.prompts.empty() ? 0.0 : sum / static_cast<double>(ds.prompts.size());
  return rec;
}

struct RunArtifact {
  TrainConfig config;
  std::vector<StepLog> steps;
  std::vector<EvalRecord> evals;
  std::vector<CorrelationRecord> correlations;
  std::map<int, std::pair<PolicyTable, PartitionStore>> checkpoints;  // keyed by step
  PolicyTable initial_policy;
  PolicyTable policy;    // final
  PartitionStore store;  // final
  std::map<PromptId, double> difficulty;  // 1 - exact accuracy under the initial policy
  std::uint64_t total_rollouts = 0;
};

namespace detail {

inline constexpr std::uint64_t kTagRollout = 0xA1;
inline constexpr std::uint64_t kTagSelect = 0xB2;
inline constexpr std::uint64_t kTagPolicyInit = 0xC3;

struct RolloutSet {
  std::vector<PromptId> ids;                         // pool order
  std::map<PromptId, std::vector<TBSample>> samples; // rollouts per prompt
  std::map<PromptId, double> observed;               // fraction of reward bit 1
};

/// N rollouts from `policy` for each id. Each rollout owns an RNG stream
/// keyed by (seed, step, attempt, prompt, rollout index), so results are a
/// pure function of those values: independent of pool order, of scheduler
/// choice, and of how the flat (prompt, rollout) space is sharded below.
inline RolloutSet roll_prompts(const Dataset& ds, const PolicyTable& policy,
                               const std::vector<PromptId>& ids, int n_rollouts,
                               std::uint64_t seed, int step, int attempt, int workers) {
  RolloutSet rs;
  rs.ids = ids;
  const std::size_t total = ids.size() * static_cast<std::size_t>(n_rollouts);
  std::vector<TBSample> flat(total);
  auto fill_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t f = lo; f < hi; ++f) {
      std::size_t pi = f / static_cast<std::size_t>(n_rollouts);
      std::size_t j = f % static_cast<std::size_t>(n_rollouts);
      const Prompt& prompt = ds.prompt_by_id(ids[pi]);
      RngStream rng(derive_key({seed, kTagRollout, static_cast<std::uint64_t>(step),
                                static_cast<std::uint64_t>(attempt),
                                static_cast<std::uint64_t>(prompt.id),
                                static_cast<std::uint64_t>(j)}));
      auto [seq, lp] = sample(policy, prompt, rng);
      int bit = verify(prompt, seq);
      flat[f] = TBSample{prompt.id, std::move(seq), lp, bit, SampleSource::fresh};
    }
  };
  int threads = std::min<int>(workers, static_cast<int>(total ? total : 1));
  if (threads <= 1) {
    fill_range(0, total);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::size_t chunk = (total + static_cast<std::size_t>(threads) - 1) /
                        static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      std::size_t lo = static_cast<std::size_t>(t) * chunk;
      std::size_t hi = std::min(total, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(fill_range, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }
  for (PromptId id : ids) rs.samples[id] = {};
  for (TBSample& s : flat) rs.samples[s.prompt_id].push_back(std::move(s));
  for (PromptId id : ids) {
    const auto& group = rs.samples[id];
    double c = 0.0;
    for (const TBSample& s : group) c += s.reward_bit;
    rs.observed[id] = group.empty() ? 0.0 : c / static_cast<double>(group.size());
  }
  return rs;
}

}  // namespace detail

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * One full training run.
 *
 * Per step: estimate accuracy for every prompt from the partition store,
 * select a batch (scheduler-dependent), roll fresh completions from the
 * frozen behavior policy, append the entire replay buffer, take SGD steps on
 * the trajectory-balance loss, refresh the behavior snapshot, then admit the
 * step's verified-correct pairs into replay with error-based priorities.
 *
 * Nonfinite loss aborts the run (TrainingError); nonfinite gradients abort
 * only the step and are visible as update_applied = false in the log.
 */
inline RunArtifact run(const TrainConfig& cfg, const Dataset& ds) {
  cfg.validate(ds.prompts.size());
  const double a = cfg.reward_incorrect;
  const double b = cfg.reward_correct;
  const std::vector<PromptId> all_ids = ds.ids();

  RunArtifact art;
  art.config = cfg;
  art.initial_policy = cfg.policy_init_stddev > 0.0
                           ? PolicyTable::gaussian_init(ds, cfg.policy_init_stddev,
                                                        derive_key({cfg.seed,
                                                                    detail::kTagPolicyInit}))
                           : PolicyTable::uniform(ds);
  PolicyTable theta = art.initial_policy.snapshot();
  PolicyTable pi_old = theta.snapshot();
  const PolicyTable pi_ref = theta.snapshot();
  PartitionStore store = PartitionStore::for_dataset(ds, cfg.resolved_zeta_init());
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity));
  for (const Prompt& p : ds.prompts)
    art.difficulty[p.id] = 1.0 - exact_accuracy(p, art.initial_policy);

  for (int step = 1; step <= cfg.steps; ++step) {
    StepLog log;
    log.step = step;

    std::map<PromptId, double> estimates;
    for (PromptId id : all_ids)
      estimates[id] = accuracy_estimate_general(store, id, cfg.beta, a, b);

    // Selection plus fresh rollouts. Pool-based schedulers (ds, lilo) roll
    // for the whole pool and keep a subset; the discarded rollouts still
    // count toward rollout cost.
    std::vector<PromptId> selected;
    detail::RolloutSet rolls;
    switch (cfg.scheduler) {
      case SchedulerKind::paced: {
        selected = select_paced(estimates, cfg.batch_size, cfg.tau);
        rolls = detail::roll_prompts(ds, pi_old, selected, cfg.rollouts, cfg.seed, step, 0,
                                     cfg.workers);
        log.rollouts_used = static_cast<int>(selected.size()) * cfg.rollouts;
        break;
      }
      case SchedulerKind::oracle_paced: {
        std::map<PromptId, double> oracle_est;
        for (const Prompt& p : ds.prompts) oracle_est[p.id] = exact_accuracy(p, pi_old);
        selected = select_paced(oracle_est, cfg.batch_size, cfg.tau);
        rolls = detail::roll_prompts(ds, pi_old, selected, cfg.rollouts, cfg.seed, step, 0,
                                     cfg.workers);
        log.rollouts_used = static_cast<int>(selected.size()) * cfg.rollouts;
        break;
      }
      case SchedulerKind::uniform: {
        RngStream sel(derive_key({cfg.seed, detail::kTagSelect,
                                  static_cast<std::uint64_t>(step), 0}));
        selected = select_uniform(all_ids, cfg.batch_size, sel);
        rolls = detail::roll_prompts(ds, pi_old, selected, cfg.rollouts, cfg.seed, step, 0,
                                     cfg.workers);
        log.rollouts_used = static_cast<int>(selected.size()) * cfg.rollouts;
        break;
      }
      case SchedulerKind::ds: {
        for (int attempt = 0; attempt <= cfg.ds_max_redraws; ++attempt) {
          log.pool_attempts = attempt + 1;
          RngStream sel(derive_key({cfg.seed, detail::kTagSelect,
                                    static_cast<std::uint64_t>(step),
                                    static_cast<std::uint64_t>(attempt)}));
          std::vector<PromptId> pool = select_uniform(all_ids, cfg.batch_size, sel);
          rolls = detail::roll_prompts(ds, pi_old, pool, cfg.rollouts, cfg.seed, step,
                                       attempt, cfg.workers);
          log.rollouts_used += static_cast<int>(pool.size()) * cfg.rollouts;
          selected = filter_ds(rolls.observed);
          if (!selected.empty()) break;
        }
        break;
      }
      case SchedulerKind::lilo: {
        RngStream sel(derive_key({cfg.seed, detail::kTagSelect,
                                  static_cast<std::uint64_t>(step), 0}));
        std::vector<PromptId> pool =
            select_uniform(all_ids, cfg.resolved_lilo_pool(all_ids.size()), sel);
        rolls = detail::roll_prompts(ds, pi_old, pool, cfg.rollouts, cfg.seed, step, 0,
                                     cfg.workers);
        log.rollouts_used = static_cast<int>(pool.size()) * cfg.rollouts;
        selected = select_lilo(rolls.observed, cfg.batch_size);
        break;
      }
    }
    art.total_rollouts += static_cast<std::uint64_t>(log.rollouts_used);

    if (selected.empty()) {  // ds exhausted its re-draws: nothing trainable
      log.skipped = true;
      log.buffer_size = buffer.size();
      log.buffer_mean_priority = buffer.mean_priority();
      log.buffer_mean_age = buffer.mean_age(step);
      art.steps.push_back(std::move(log));
      continue;
    }

    log.selected = selected;
    for (PromptId id : selected) {
      log.estimates.push_back(estimates[id]);
      log.observed.push_back(rolls.observed[id]);
    }
    log.difficulty = batch_difficulty_stats(selected, art.difficulty);

    std::vector<TBSample> batch;
    batch.reserve(selected.size() * static_cast<std::size_t>(cfg.rollouts) + buffer.size());
    for (PromptId id : selected)
      for (const TBSample& s : rolls.samples[id]) batch.push_back(s);
    log.fresh_samples = static_cast<int>(batch.size());
    if (cfg.buffer_add > 0) {
      std::vector<TBSample> replayed = buffer.drain_for_training();
      log.replay_samples = static_cast<int>(replayed.size());
      for (TBSample& s : replayed) batch.push_back(std::move(s));
    }

    // The loss anchors the importance correction at pi_old (the sample's true
    // behavior policy) by default; the pi_ref variant re-anchors every sample
    // at the frozen reference instead.
    if (cfg.loss_anchor == LossAnchor::pi_ref)
      for (TBSample& s : batch)
        s.behavior_log_prob = detail::log_prob_id(pi_ref, s.prompt_id, s.seq);

    {
      std::vector<double> res = batch_residuals(batch, theta, store, cfg.beta, a, b);
      double sum = 0.0, sq = 0.0, mn = res[0], mx = res[0];
      for (double d : res) {
        sum += d;
        sq += d * d;
        mn = std::min(mn, d);
        mx = std::max(mx, d);
      }
      log.mean_loss = sq / static_cast<double>(res.size());
      log.residual_mean = sum / static_cast<double>(res.size());
      log.residual_min = mn;
      log.residual_max = mx;
      if (!std::isfinite(log.mean_loss))
        throw TrainingError("nonfinite loss at step " + std::to_string(step));
    }

    std::map<PromptId, std::vector<const TBSample*>> by_prompt;
    if (cfg.z_mode == ZMode::vargrad)
      for (const TBSample& s : batch) by_prompt[s.prompt_id].push_back(&s);

    log.update_applied = true;
    for (int u = 0; u < cfg.inner_updates && log.update_applied; ++u) {
      if (cfg.z_mode == ZMode::vargrad) {
        for (const auto& [id, slice] : by_prompt) {
          std::vector<TBSample> group;
          group.reserve(slice.size());
          for (const TBSample* s : slice) group.push_back(*s);
          store.set_log_z(id, vargrad_log_z(group, theta, cfg.beta, a, b));
        }
      }
      GradientSet grads = tb_grad(batch, theta, store, cfg.beta, a, b);
      SgdResult res = sgd_step(theta, store, grads, cfg.lr_theta, cfg.lr_zeta, cfg.clip_norm,
                               cfg.z_mode == ZMode::learned);
      log.grad_norm = res.grad_norm;
      log.clip_scale = res.scale;
      log.update_applied = res.applied;
    }

    log.beta_kl_max = 0.0;
    double kl_sel_sum = 0.0;
    for (const Prompt& p : ds.prompts) {
      double bkl = cfg.beta * exact_kl(pi_old, theta, p);
      log.beta_kl_max = std::max(log.beta_kl_max, bkl);
      if (std::find(selected.begin(), selected.end(), p.id) != selected.end())
        kl_sel_sum += bkl;
    }
    log.beta_kl_mean_selected = kl_sel_sum / static_cast<double>(selected.size());

    pi_old = theta.snapshot();

    if (cfg.buffer_add > 0) {
      ReplayBuffer::CorrectPairs pairs;
      std::map<PromptId, double> priorities;
      for (PromptId id : selected) {
        double est_now = accuracy_estimate_general(store, id, cfg.beta, a, b);
        priorities[id] = replay_priority(rolls.observed[id], est_now);
        for (const TBSample& s : rolls.samples[id])
          if (s.reward_bit == 1) pairs[id].emplace_back(s.seq, s.behavior_log_prob);
      }
      for (auto it = pairs.begin(); it != pairs.end();)
        it = it->second.empty() ? pairs.erase(it) : std::next(it);
      buffer.push_step(pairs, priorities, static_cast<std::size_t>(cfg.buffer_add), step);
    }

    for (PromptId id : selected) log.zeta.push_back(store.log_z(id));
    log.buffer_size = buffer.size();
    log.buffer_mean_priority = buffer.mean_priority();
    log.buffer_mean_age = buffer.mean_age(step);
    art.steps.push_back(std::move(log));

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      EvalRecord ev = evaluate(ds, theta, cfg.eval_ks, step);
      CorrelationRecord corr;
      corr.step = step;
      std::vector<double> est_now, exact_now;
      for (const PromptEval& pe : ev.prompts) {
        est_now.push_back(accuracy_estimate_general(store, pe.prompt_id, cfg.beta, a, b));
        exact_now.push_back(pe.pass1);
      }
      try {
        corr.spearman_rho = spearman(est_now, exact_now);
        corr.pearson_r = pearson(est_now, exact_now);
      } catch (const std::invalid_argument&) {
        corr.spearman_rho = std::nan("");
        corr.pearson_r = std::nan("");
      }
      if (art.evals.empty() || art.evals.back().step != step) {
        art.evals.push_back(std::move(ev));
        art.correlations.push_back(corr);
        art.checkpoints.emplace(step, std::make_pair(theta.snapshot(), store));
      }
    }
  }

  art.policy = std::move(theta);
  art.store = std::move(store);
  return art;
}

}  // namespace paced
