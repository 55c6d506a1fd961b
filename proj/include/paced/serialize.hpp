#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "paced/partition.hpp"
#include "paced/policy.hpp"

namespace paced {

/// %.17g: enough digits that strtod round-trips any finite double exactly.
inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::runtime_error("malformed floating-point value: '" + s + "'");
  return v;
}

/// Text checkpoint of the full training state that evolves: policy logits and
/// per-prompt zeta values. Schema version 1, one prompt per line.
inline void write_checkpoint(const std::string& path, const PolicyTable& policy,
                             const PartitionStore& store) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "paced_checkpoint 1\n";
  out << "vocab_size " << policy.vocab_size() << "\n";
  out << "seq_len " << policy.seq_len() << "\n";
  out << "zeta_init " << fmt_double(store.init_value()) << "\n";
  out << "num_prompts " << policy.tables().size() << "\n";
  for (const auto& [id, logits] : policy.tables()) {
    out << "prompt " << id << " " << fmt_double(store.log_z(id)) << " " << logits.size();
    for (double v : logits) out << " " << fmt_double(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::pair<PolicyTable, PartitionStore> read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path + ": " + what);
  };
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) fail("unexpected end of file");
    return std::istringstream(line);
  };
  {
    auto ls = next_line();
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "paced_checkpoint" || version != 1)
      fail("expected header 'paced_checkpoint 1'");
  }
  int vocab_size = 0, seq_len = 0;
  std::string zeta_init_str;
  std::size_t num_prompts = 0;
  auto read_kv = [&](const char* key, auto& value) {
    auto ls = next_line();
    std::string k;
    ls >> k >> value;
    if (k != key || ls.fail()) fail(std::string("expected '") + key + " <value>'");
  };
  read_kv("vocab_size", vocab_size);
  read_kv("seq_len", seq_len);
  read_kv("zeta_init", zeta_init_str);
  read_kv("num_prompts", num_prompts);

  PolicyTable policy(vocab_size, seq_len);
  PartitionStore store(parse_double(zeta_init_str));
  for (std::size_t i = 0; i < num_prompts; ++i) {
    auto ls = next_line();
    std::string tag, zeta_str, value_str;
    PromptId id = 0;
    std::size_t count = 0;
    ls >> tag >> id >> zeta_str >> count;
    if (tag != "prompt" || ls.fail())
      fail("expected 'prompt <id> <zeta> <count> <logits...>'");
    policy.add_prompt(id);
    std::vector<double>& logits = policy.logits_for(id);
    if (count != logits.size()) fail("logit count does not match policy shape");
    for (std::size_t j = 0; j < count; ++j) {
      if (!(ls >> value_str)) fail("logit row shorter than declared count");
      logits[j] = parse_double(value_str);
    }
    if (ls >> value_str) fail("logit row longer than declared count");
    store.set_log_z(id, parse_double(zeta_str));
  }
  return {std::move(policy), std::move(store)};
}

}  // namespace paced
