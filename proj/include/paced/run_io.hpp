#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paced/serialize.hpp"
#include "paced/trainer.hpp"

namespace paced {

using ordered_json = nlohmann::ordered_json;

/// Every config key, explicit, with derived defaults resolved to their final
/// values; feeding the result back into config_from_json reproduces the run.
inline ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["beta"] = cfg.beta;
  j["tau"] = cfg.tau;
  j["steps"] = cfg.steps;
  j["batch_size"] = cfg.batch_size;
  j["rollouts"] = cfg.rollouts;
  j["buffer_capacity"] = cfg.buffer_capacity;
  j["buffer_add"] = cfg.buffer_add;
  j["lr_theta"] = cfg.lr_theta;
  j["lr_zeta"] = cfg.lr_zeta;
  j["clip_norm"] = cfg.clip_norm;
  j["inner_updates"] = cfg.inner_updates;
  j["scheduler"] = to_string(cfg.scheduler);
  j["loss_anchor"] = to_string(cfg.loss_anchor);
  j["z_mode"] = to_string(cfg.z_mode);
  j["reward_incorrect"] = cfg.reward_incorrect;
  j["reward_correct"] = cfg.reward_correct;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  j["eval_ks"] = cfg.eval_ks;
  j["zeta_init"] = cfg.resolved_zeta_init();
  j["policy_init_stddev"] = cfg.policy_init_stddev;
  j["lilo_oversample"] = cfg.lilo_oversample > 0 ? cfg.lilo_oversample : 4 * cfg.batch_size;
  j["ds_max_redraws"] = cfg.ds_max_redraws;
  j["workers"] = cfg.workers;
  return j;
}

inline TrainConfig config_from_json(const ordered_json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  TrainConfig cfg;
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string(key) + ": wrong JSON type");
    }
  };
  static const std::vector<std::string> known = {
      "beta", "tau", "steps", "batch_size", "rollouts", "buffer_capacity", "buffer_add",
      "lr_theta", "lr_zeta", "clip_norm", "inner_updates", "scheduler", "loss_anchor",
      "z_mode", "reward_incorrect", "reward_correct", "seed", "eval_every", "eval_ks",
      "zeta_init", "policy_init_stddev", "lilo_oversample", "ds_max_redraws", "workers"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");

  read("beta", cfg.beta);
  read("tau", cfg.tau);
  read("steps", cfg.steps);
  read("batch_size", cfg.batch_size);
  read("rollouts", cfg.rollouts);
  read("buffer_capacity", cfg.buffer_capacity);
  read("buffer_add", cfg.buffer_add);
  read("lr_theta", cfg.lr_theta);
  read("lr_zeta", cfg.lr_zeta);
  read("clip_norm", cfg.clip_norm);
  read("inner_updates", cfg.inner_updates);
  if (j.contains("scheduler")) cfg.scheduler = scheduler_from_string(j.at("scheduler").get<std::string>());
  if (j.contains("loss_anchor")) cfg.loss_anchor = anchor_from_string(j.at("loss_anchor").get<std::string>());
  if (j.contains("z_mode")) cfg.z_mode = zmode_from_string(j.at("z_mode").get<std::string>());
  read("reward_incorrect", cfg.reward_incorrect);
  read("reward_correct", cfg.reward_correct);
  read("seed", cfg.seed);
  read("eval_every", cfg.eval_every);
  read("eval_ks", cfg.eval_ks);
  if (j.contains("zeta_init") && !j.at("zeta_init").is_null()) {
    try {
      cfg.zeta_init = j.at("zeta_init").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("zeta_init: wrong JSON type");
    }
  }
  read("policy_init_stddev", cfg.policy_init_stddev);
  read("lilo_oversample", cfg.lilo_oversample);
  read("ds_max_redraws", cfg.ds_max_redraws);
  read("workers", cfg.workers);
  return cfg;
}

inline TrainConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

inline ordered_json step_to_json(const StepLog& s) {
  ordered_json j;
  j["step"] = s.step;
  j["selected"] = s.selected;
  j["estimates"] = s.estimates;
  j["observed"] = s.observed;
  j["zeta"] = s.zeta;
  j["pool_attempts"] = s.pool_attempts;
  j["skipped"] = s.skipped;
  j["rollouts_used"] = s.rollouts_used;
  j["fresh_samples"] = s.fresh_samples;
  j["replay_samples"] = s.replay_samples;
  if (s.skipped) {
    j["mean_loss"] = nullptr;
    j["residual_mean"] = nullptr;
    j["residual_min"] = nullptr;
    j["residual_max"] = nullptr;
    j["grad_norm"] = nullptr;
    j["clip_scale"] = nullptr;
    j["beta_kl_max"] = nullptr;
    j["beta_kl_mean_selected"] = nullptr;
    j["difficulty_mean"] = nullptr;
    j["difficulty_min"] = nullptr;
    j["difficulty_max"] = nullptr;
  } else {
    j["mean_loss"] = s.mean_loss;
    j["residual_mean"] = s.residual_mean;
    j["residual_min"] = s.residual_min;
    j["residual_max"] = s.residual_max;
    j["grad_norm"] = s.grad_norm;
    j["clip_scale"] = s.clip_scale;
    j["beta_kl_max"] = s.beta_kl_max;
    j["beta_kl_mean_selected"] = s.beta_kl_mean_selected;
    j["difficulty_mean"] = s.difficulty.mean;
    j["difficulty_min"] = s.difficulty.min;
    j["difficulty_max"] = s.difficulty.max;
  }
  j["update_applied"] = s.update_applied;
  j["buffer_size"] = s.buffer_size;
  j["buffer_mean_priority"] = s.buffer_mean_priority;
  j["buffer_mean_age"] = s.buffer_mean_age;
  return j;
}

inline void write_steps_jsonl(const std::string& path, const RunArtifact& art) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const StepLog& s : art.steps) out << step_to_json(s).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_eval_csv(const std::string& path, const RunArtifact& art) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "step,prompt_id,pass@1";
  for (int k : art.config.eval_ks) out << ",pass@" << k;
  out << "\n";
  for (const EvalRecord& ev : art.evals)
    for (const PromptEval& pe : ev.prompts) {
      out << ev.step << "," << pe.prompt_id << "," << fmt_double(pe.pass1);
      for (double v : pe.pass_at) out << "," << fmt_double(v);
      out << "\n";
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_correlations_csv(const std::string& path,
                                   const std::vector<CorrelationRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "step,spearman,pearson\n";
  for (const CorrelationRecord& c : rows)
    out << c.step << "," << fmt_double(c.spearman_rho) << "," << fmt_double(c.pearson_r)
        << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string checkpoint_filename(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06d.txt", step);
  return buf;
}

/// Lays out a self-contained run directory:
///   resolved_config.json, dataset.txt, steps.jsonl, eval.csv,
///   correlations.csv, checkpoints/step_NNNNNN.txt
inline void write_run_dir(const std::string& dir, const RunArtifact& art, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "checkpoints");
  {
    std::ofstream out(fs::path(dir) / "resolved_config.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + dir + "/resolved_config.json");
    out << config_to_json(art.config).dump(2) << "\n";
  }
  write_dataset(ds, (fs::path(dir) / "dataset.txt").string());
  write_steps_jsonl((fs::path(dir) / "steps.jsonl").string(), art);
  write_eval_csv((fs::path(dir) / "eval.csv").string(), art);
  write_correlations_csv((fs::path(dir) / "correlations.csv").string(), art.correlations);
  for (const auto& [step, state] : art.checkpoints)
    write_checkpoint((fs::path(dir) / "checkpoints" / checkpoint_filename(step)).string(),
                     state.first, state.second);
}

struct PartitionReportRow {
  int step = 0;
  PromptId prompt_id = 0;
  double zeta = 0.0;
  double estimate = 0.0;
  double exact_acc = 0.0;
};

struct RunReport {
  std::vector<PartitionReportRow> partition_rows;
  std::vector<CorrelationRecord> correlations;
};

/// Rebuilds partition diagnostics and estimate-vs-exact correlations from a
/// run directory's checkpoints alone (no training state needed): for each
/// checkpointed step, the stored zeta gives the estimate and the stored
/// policy gives the exact accuracy.
inline RunReport build_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  TrainConfig cfg = read_config_file((fs::path(run_dir) / "resolved_config.json").string());
  Dataset ds = read_dataset((fs::path(run_dir) / "dataset.txt").string());

  std::vector<fs::path> files;
  fs::path ckpt_dir = fs::path(run_dir) / "checkpoints";
  if (!fs::is_directory(ckpt_dir))
    throw std::runtime_error("no checkpoints directory under " + run_dir);
  for (const auto& entry : fs::directory_iterator(ckpt_dir))
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no checkpoints found under " + run_dir);

  RunReport report;
  for (const fs::path& f : files) {
    std::string stem = f.stem().string();  // step_NNNNNN
    int step = std::stoi(stem.substr(stem.find('_') + 1));
    auto [policy, store] = read_checkpoint(f.string());
    std::vector<double> est, exact;
    for (const Prompt& p : ds.prompts) {
      PartitionReportRow row;
      row.step = step;
      row.prompt_id = p.id;
      row.zeta = store.log_z(p.id);
      row.estimate = accuracy_estimate_general(store, p.id, cfg.beta, cfg.reward_incorrect,
                                               cfg.reward_correct);
      row.exact_acc = exact_accuracy(p, policy);
      est.push_back(row.estimate);
      exact.push_back(row.exact_acc);
      report.partition_rows.push_back(row);
    }
    CorrelationRecord corr;
    corr.step = step;
    try {
      corr.spearman_rho = spearman(est, exact);
      corr.pearson_r = pearson(est, exact);
    } catch (const std::invalid_argument&) {
      corr.spearman_rho = std::nan("");
      corr.pearson_r = std::nan("");
    }
    report.correlations.push_back(corr);
  }
  return report;
}

inline void write_report(const std::string& run_dir, const RunReport& report) {
  namespace fs = std::filesystem;
  {
    std::ofstream out(fs::path(run_dir) / "partition.csv");
    if (!out) throw std::runtime_error("cannot open for writing: " + run_dir + "/partition.csv");
    out << "step,prompt_id,zeta,estimate,exact_accuracy,abs_error\n";
    for (const PartitionReportRow& r : report.partition_rows)
      out << r.step << "," << r.prompt_id << "," << fmt_double(r.zeta) << ","
          << fmt_double(r.estimate) << "," << fmt_double(r.exact_acc) << ","
          << fmt_double(std::abs(r.estimate - r.exact_acc)) << "\n";
  }
  write_correlations_csv((fs::path(run_dir) / "correlations_recomputed.csv").string(),
                         report.correlations);
}

}  // namespace paced
