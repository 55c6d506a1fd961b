#include "paced/serialize.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "paced/run_io.hpp"

namespace {

using namespace paced;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(FmtDouble, RoundTripsExactly) {
  const double values[] = {0.0,
                           -0.0,
                           0.1,
                           1.0 / 3.0,
                           3.141592653589793,
                           -2.2250738585072014e-308,
                           1.7976931348623157e308,
                           5e-324,
                           -123456.789,
                           0x1.fffffffffffffp-1};
  for (double v : values) {
    double back = parse_double(fmt_double(v));
    EXPECT_EQ(back, v) << fmt_double(v);
  }
}

TEST(ParseDouble, RejectsTrailingGarbage) {
  EXPECT_THROW(parse_double("1.5x"), std::runtime_error);
  EXPECT_THROW(parse_double(""), std::runtime_error);
  EXPECT_THROW(parse_double("abc"), std::runtime_error);
  EXPECT_EQ(parse_double("-2.5e3"), -2500.0);
}

TEST(Checkpoint, RoundTripsPolicyAndStoreBitExactly) {
  TaskSpec spec;
  spec.vocab_size = 3;
  spec.seq_len = 3;
  spec.num_prompts = 4;
  spec.difficulty_profile = {9.0 / 27.0};
  spec.seed = 3;
  Dataset ds = generate_dataset(spec);
  PolicyTable pol = PolicyTable::gaussian_init(ds, 1.7, 99);
  PartitionStore store = PartitionStore::for_dataset(ds, 10.0);
  store.set_log_z(1, 0.1);
  store.set_log_z(2, -17.25);

  std::string path = temp_path("paced_ckpt_roundtrip.txt");
  write_checkpoint(path, pol, store);
  auto [pol2, store2] = read_checkpoint(path);
  std::remove(path.c_str());

  EXPECT_EQ(pol2.vocab_size(), 3);
  EXPECT_EQ(pol2.seq_len(), 3);
  EXPECT_EQ(store2.init_value(), 10.0);
  for (const Prompt& p : ds.prompts) {
    EXPECT_EQ(pol2.logits_for(p.id), pol.logits_for(p.id));  // element-wise bitwise
    EXPECT_EQ(store2.log_z(p.id), store.log_z(p.id));
  }
}

TEST(Checkpoint, RejectsMalformedFiles) {
  auto try_read = [&](const std::string& body) {
    std::string path = temp_path("paced_ckpt_malformed.txt");
    std::ofstream out(path);
    out << body;
    out.close();
    auto result = read_checkpoint(path);
    std::remove(path.c_str());
    return result;
  };
  EXPECT_THROW(try_read("bogus 1\n"), std::runtime_error);
  EXPECT_THROW(try_read("paced_checkpoint 1\nvocab_size 2\nseq_len 1\nzeta_init 0\n"
                        "num_prompts 1\nprompt 0 0.5 3 0 0\n"),  // wrong logit count
               std::runtime_error);
  EXPECT_THROW(try_read("paced_checkpoint 1\nvocab_size 2\nseq_len 1\nzeta_init 0\n"
                        "num_prompts 1\nprompt 0 0.5 2 0\n"),  // short row
               std::runtime_error);
  EXPECT_THROW(read_checkpoint(temp_path("paced_ckpt_missing.txt")), std::runtime_error);
}

TEST(ConfigJson, RoundTripsThroughResolvedForm) {
  TrainConfig cfg;
  cfg.beta = 0.1;
  cfg.tau = 0.7;
  cfg.steps = 42;
  cfg.scheduler = SchedulerKind::lilo;
  cfg.z_mode = ZMode::vargrad;
  cfg.loss_anchor = LossAnchor::pi_ref;
  cfg.eval_ks = {4, 16};
  cfg.seed = 777;
  ordered_json j = config_to_json(cfg);
  TrainConfig back = config_from_json(j);
  EXPECT_EQ(back.beta, cfg.beta);
  EXPECT_EQ(back.tau, cfg.tau);
  EXPECT_EQ(back.steps, cfg.steps);
  EXPECT_EQ(back.scheduler, cfg.scheduler);
  EXPECT_EQ(back.z_mode, cfg.z_mode);
  EXPECT_EQ(back.loss_anchor, cfg.loss_anchor);
  EXPECT_EQ(back.eval_ks, cfg.eval_ks);
  EXPECT_EQ(back.seed, cfg.seed);
  // the echo resolves zeta_init to a concrete number
  ASSERT_TRUE(back.zeta_init.has_value());
  EXPECT_EQ(*back.zeta_init, cfg.resolved_zeta_init());
  EXPECT_EQ(back.resolved_zeta_init(), cfg.resolved_zeta_init());
}

TEST(ConfigJson, DefaultZetaInitTracksTargetAccuracy) {
  TrainConfig cfg;  // tau 0.5, beta 0.05, rewards (0, 1)
  EXPECT_DOUBLE_EQ(cfg.resolved_zeta_init(), 10.0);
  cfg.tau = 0.3;
  EXPECT_DOUBLE_EQ(cfg.resolved_zeta_init(), 6.0);
  cfg.reward_incorrect = -1.0;
  cfg.reward_correct = 1.0;
  cfg.tau = 0.5;
  EXPECT_DOUBLE_EQ(cfg.resolved_zeta_init(), 0.0);  // (a + (b-a) tau) / beta
  cfg.zeta_init = 4.0;
  EXPECT_DOUBLE_EQ(cfg.resolved_zeta_init(), 4.0);
}

TEST(ConfigJson, RejectsUnknownKeysByName) {
  ordered_json j;
  j["beta"] = 0.05;
  j["learning_rate"] = 0.1;
  try {
    config_from_json(j);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(ConfigJson, RejectsWrongTypesByName) {
  ordered_json j;
  j["steps"] = "three hundred";
  try {
    config_from_json(j);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("steps"), std::string::npos);
  }
  ordered_json bad_sched;
  bad_sched["scheduler"] = "alphabetical";
  EXPECT_THROW(config_from_json(bad_sched), std::invalid_argument);
}

TEST(ConfigJson, ZetaInitAcceptsNullAndNumbers) {
  ordered_json j;
  j["zeta_init"] = nullptr;
  EXPECT_FALSE(config_from_json(j).zeta_init.has_value());
  j["zeta_init"] = -3.5;
  EXPECT_EQ(config_from_json(j).zeta_init, std::optional<double>(-3.5));
}

TEST(ConfigValidation, NamesTheOffendingKey) {
  TrainConfig cfg;
  cfg.batch_size = 50;
  try {
    cfg.validate(32);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
  }
  cfg.batch_size = 8;
  cfg.lr_zeta = 0.0;
  try {
    cfg.validate(32);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("lr_zeta"), std::string::npos);
  }
  cfg.lr_zeta = 0.5;
  cfg.reward_correct = -2.0;
  EXPECT_THROW(cfg.validate(32), std::invalid_argument);
  cfg.reward_correct = 1.0;
  cfg.eval_ks = {};
  EXPECT_THROW(cfg.validate(32), std::invalid_argument);
  cfg.eval_ks = {8};
  EXPECT_NO_THROW(cfg.validate(32));
}

}  // namespace
