#pragma once

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "paced/env.hpp"
#include "paced/run_io.hpp"
#include "paced/trainer.hpp"
#include "paced/verify.hpp"

namespace paced {

namespace detail {

struct GenerateArgs {
  int vocab_size = 2;
  int seq_len = 1;
  int num_prompts = 1;
  std::vector<double> profile;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultEnumerationBudget;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> workers;
  std::optional<std::string> scheduler;
};

inline int run_generate(const GenerateArgs& args) {
  Dataset ds;
  try {
    TaskSpec spec;
    spec.vocab_size = args.vocab_size;
    spec.seq_len = args.seq_len;
    spec.num_prompts = args.num_prompts;
    spec.difficulty_profile = args.profile;
    spec.seed = args.seed;
    spec.enumeration_budget = args.budget;
    ds = generate_dataset(spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    write_dataset(ds, args.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  std::cout << "wrote " << ds.prompts.size() << " prompts (vocab " << ds.vocab_size
            << ", length " << ds.seq_len << ") to " << args.out << "\n";
  return 0;
}

inline int run_train(const TrainArgs& args) {
  TrainConfig cfg;
  Dataset ds;
  try {
    if (!args.config_path.empty()) cfg = read_config_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.steps) cfg.steps = *args.steps;
    if (args.workers) cfg.workers = *args.workers;
    if (args.scheduler) cfg.scheduler = scheduler_from_string(*args.scheduler);
    ds = read_dataset(args.data);
    cfg.validate(ds.prompts.size());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    RunArtifact art = run(cfg, ds);
    write_run_dir(args.out, art, ds);
    double final_pass1 = art.evals.empty() ? 0.0 : art.evals.back().mean_pass1;
    std::cout << "trained " << cfg.steps << " steps (" << to_string(cfg.scheduler)
              << " scheduler, seed " << cfg.seed << "); final mean pass@1 "
              << fmt_double(final_pass1) << "; run dir " << args.out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

inline int run_verify(std::uint64_t seed, int instances) {
  std::vector<IdentityCheck> checks;
  try {
    checks = run_oracle_suite(seed, instances);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  std::printf("%-24s %10s %14s %10s  %s\n", "check", "instances", "max residual", "tolerance",
              "result");
  for (const IdentityCheck& c : checks)
    std::printf("%-24s %10d %14.3e %10.0e  %s\n", c.name.c_str(), c.instances, c.max_residual,
                c.tolerance, c.pass ? "pass" : "FAIL");
  if (!all_pass(checks)) {
    std::cerr << "verification failed\n";
    return 2;
  }
  return 0;
}

inline int run_report(const std::string& run_dir) {
  RunReport report;
  try {
    report = build_report(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    write_report(run_dir, report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  const CorrelationRecord& last = report.correlations.back();
  std::cout << "report over " << report.correlations.size() << " checkpoints; step "
            << last.step << " spearman " << fmt_double(last.spearman_rho) << ", pearson "
            << fmt_double(last.pearson_r) << "; wrote partition.csv and"
            << " correlations_recomputed.csv under " << run_dir << "\n";
  return 0;
}

}  // namespace detail

/// Entry point behind main(): parses argv and dispatches one subcommand.
/// Exit codes: 0 success, 1 usage or input error, 2 verification failure,
/// 3 runtime abort.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Desk-scale lab for partition-guided curriculum post-training"};
  app.require_subcommand(1);

  detail::GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Create a synthetic prompt dataset with controlled difficulties");
  generate->add_option("--vocab-size", gen.vocab_size, "Tokens per position (>= 2)");
  generate->add_option("--seq-len", gen.seq_len, "Sequence length (>= 1)");
  generate->add_option("--num-prompts", gen.num_prompts, "Number of prompts");
  generate->add_option("--profile", gen.profile,
                       "Accepting fractions, cycled over prompts (comma separated)")
      ->required()
      ->delimiter(',');
  generate->add_option("--seed", gen.seed, "Dataset seed");
  generate->add_option("--budget", gen.budget, "Enumeration budget on the sequence space");
  generate->add_option("--out", gen.out, "Output dataset file")->required();

  detail::TrainArgs tr;
  std::uint64_t tr_seed = 0;
  int tr_steps = 0, tr_workers = 0;
  std::string tr_sched;
  CLI::App* train = app.add_subcommand("train", "Run one training configuration");
  train->add_option("--data", tr.data, "Dataset file from `generate`")->required();
  train->add_option("--out", tr.out, "Run directory to create")->required();
  train->add_option("--config", tr.config_path, "JSON config; omitted keys use defaults");
  CLI::Option* opt_seed = train->add_option("--seed", tr_seed, "Override the config seed");
  CLI::Option* opt_steps = train->add_option("--steps", tr_steps, "Override training steps");
  CLI::Option* opt_workers =
      train->add_option("--workers", tr_workers, "Rollout threads (results are identical)");
  CLI::Option* opt_sched =
      train->add_option("--scheduler", tr_sched, "paced|uniform|ds|lilo|oracle_paced");

  std::uint64_t verify_seed = 12345;
  int verify_instances = 120;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Run the oracle identity suite and print residuals");
  verify_cmd->add_option("--seed", verify_seed, "Suite seed");
  verify_cmd->add_option("--instances", verify_instances, "Instances per check");

  std::string report_dir;
  CLI::App* report =
      app.add_subcommand("report", "Recompute partition diagnostics from a run directory");
  report->add_option("--run", report_dir, "Run directory produced by `train`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (generate->parsed()) return detail::run_generate(gen);
  if (train->parsed()) {
    if (opt_seed->count()) tr.seed = tr_seed;
    if (opt_steps->count()) tr.steps = tr_steps;
    if (opt_workers->count()) tr.workers = tr_workers;
    if (opt_sched->count()) tr.scheduler = tr_sched;
    return detail::run_train(tr);
  }
  if (verify_cmd->parsed()) {
    if (verify_instances < 1) {
      std::cerr << "error: instances: must be at least 1\n";
      return 1;
    }
    return detail::run_verify(verify_seed, verify_instances);
  }
  if (report->parsed()) return detail::run_report(report_dir);
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace paced
