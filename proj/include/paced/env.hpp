#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "paced/rng.hpp"

namespace paced {

using Token = std::int32_t;
using Sequence = std::vector<Token>;
using PromptId = std::int64_t;
using SeqIndex = std::uint64_t;

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1ULL << 20;

/// V^L with overflow guard; throws if the space exceeds the enumeration budget.
inline std::uint64_t sequence_space_size(int vocab_size, int seq_len,
                                         std::uint64_t budget = kDefaultEnumerationBudget) {
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be at least 2");
  if (seq_len < 1) throw std::invalid_argument("seq_len must be at least 1");
  std::uint64_t n = 1;
  for (int i = 0; i < seq_len; ++i) {
    if (n > budget / static_cast<std::uint64_t>(vocab_size) + 1)
      throw std::invalid_argument("sequence space exceeds enumeration budget");
    n *= static_cast<std::uint64_t>(vocab_size);
  }
  if (n > budget) throw std::invalid_argument("sequence space exceeds enumeration budget");
  return n;
}

/// Big-endian mixed-radix encoding: index = sum_t y_t * V^(L-1-t).
inline SeqIndex sequence_index(const Sequence& seq, int vocab_size) {
  SeqIndex idx = 0;
  for (Token t : seq) {
    if (t < 0 || t >= vocab_size) throw std::invalid_argument("token out of vocabulary range");
    idx = idx * static_cast<SeqIndex>(vocab_size) + static_cast<SeqIndex>(t);
  }
  return idx;
}

inline Sequence sequence_from_index(SeqIndex idx, int vocab_size, int seq_len) {
  Sequence seq(static_cast<std::size_t>(seq_len));
  for (int t = seq_len - 1; t >= 0; --t) {
    seq[static_cast<std::size_t>(t)] = static_cast<Token>(idx % static_cast<SeqIndex>(vocab_size));
    idx /= static_cast<SeqIndex>(vocab_size);
  }
  if (idx != 0) throw std::invalid_argument("sequence index out of range for given space");
  return seq;
}

/// One synthetic task: the verifier accepts exactly the sequences whose
/// big-endian index is in accepting_set (sorted, unique).
struct Prompt {
  PromptId id = 0;
  int vocab_size = 2;
  int seq_len = 1;
  std::vector<SeqIndex> accepting_set;

  std::uint64_t space_size(std::uint64_t budget = kDefaultEnumerationBudget) const {
    return sequence_space_size(vocab_size, seq_len, budget);
  }
  double accepting_fraction() const {
    return static_cast<double>(accepting_set.size()) /
           static_cast<double>(space_size());
  }
};

/// Binary verifier. Total, deterministic, O(log |accepting_set|).
inline int verify(const Prompt& prompt, const Sequence& seq) {
  if (static_cast<int>(seq.size()) != prompt.seq_len)
    throw std::invalid_argument("verify: sequence length does not match prompt");
  SeqIndex idx = sequence_index(seq, prompt.vocab_size);
  return std::binary_search(prompt.accepting_set.begin(), prompt.accepting_set.end(), idx) ? 1 : 0;
}

/// Maps the verifier bit to a scalar reward: 0 -> a, 1 -> b.
inline double reward_value(int bit, double a, double b) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("reward_value: bit must be 0 or 1");
  if (!(b != a)) throw std::invalid_argument("reward_value: reward levels must differ");
  return bit == 1 ? b : a;
}

struct TaskSpec {
  int vocab_size = 2;
  int seq_len = 1;
  int num_prompts = 1;
  std::vector<double> difficulty_profile;  // accepting fractions, cycled over prompts
  std::uint64_t seed = 0;
  std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
};

struct Dataset {
  int vocab_size = 2;
  int seq_len = 1;
  std::uint64_t seed = 0;
  std::vector<Prompt> prompts;

  const Prompt& prompt_by_id(PromptId id) const {
    for (const Prompt& p : prompts)
      if (p.id == id) return p;
    throw std::out_of_range("no prompt with id " + std::to_string(id));
  }
  std::vector<PromptId> ids() const {
    std::vector<PromptId> out;
    out.reserve(prompts.size());
    for (const Prompt& p : prompts) out.push_back(p.id);
    return out;
  }
};

namespace detail {
inline constexpr std::uint64_t kTagDatasetGen = 0xD5;
}

/**
 * Builds num_prompts tasks. Prompt i gets accepting fraction
 * difficulty_profile[i mod len] realized as round(f * V^L) uniformly random
 * distinct indices. A fraction whose rounded count is further than 1e-6 from
 * f * V^L is unachievable at this resolution and rejected, so round() only
 * absorbs float representation error, never silent re-targeting.
 */
inline Dataset generate_dataset(const TaskSpec& spec) {
  if (spec.vocab_size < 2) throw std::invalid_argument("vocab_size must be at least 2");
  if (spec.seq_len < 1) throw std::invalid_argument("seq_len must be at least 1");
  if (spec.num_prompts < 1) throw std::invalid_argument("num_prompts must be at least 1");
  if (spec.difficulty_profile.empty())
    throw std::invalid_argument("difficulty_profile must be non-empty");
  const std::uint64_t n = sequence_space_size(spec.vocab_size, spec.seq_len,
                                              spec.enumeration_budget);
  for (double f : spec.difficulty_profile) {
    if (!(f >= 0.0 && f <= 1.0))
      throw std::invalid_argument("difficulty_profile entries must lie in [0, 1]");
    double target = f * static_cast<double>(n);
    if (std::abs(target - std::round(target)) > 1e-6) {
      std::ostringstream msg;
      msg << "difficulty " << f << " is unachievable: " << f << " * " << n
          << " is not an integer count of sequences";
      throw std::invalid_argument(msg.str());
    }
  }

  Dataset ds;
  ds.vocab_size = spec.vocab_size;
  ds.seq_len = spec.seq_len;
  ds.seed = spec.seed;
  ds.prompts.reserve(static_cast<std::size_t>(spec.num_prompts));
  for (int i = 0; i < spec.num_prompts; ++i) {
    double f = spec.difficulty_profile[static_cast<std::size_t>(i) %
                                       spec.difficulty_profile.size()];
    auto k = static_cast<std::uint64_t>(std::llround(f * static_cast<double>(n)));
    RngStream rng(derive_key({spec.seed, detail::kTagDatasetGen,
                              static_cast<std::uint64_t>(i)}));
    Prompt p;
    p.id = i;
    p.vocab_size = spec.vocab_size;
    p.seq_len = spec.seq_len;
    p.accepting_set = sample_without_replacement(n, k, rng);
    ds.prompts.push_back(std::move(p));
  }
  return ds;
}

/// Plain-text dataset format, schema version 1. Integer-only payload, so a
/// round trip is bit-exact on any platform.
inline void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "paced_dataset 1\n";
  out << "vocab_size " << ds.vocab_size << "\n";
  out << "seq_len " << ds.seq_len << "\n";
  out << "seed " << ds.seed << "\n";
  out << "num_prompts " << ds.prompts.size() << "\n";
  for (const Prompt& p : ds.prompts) {
    out << "prompt " << p.id << " " << p.accepting_set.size();
    for (SeqIndex s : p.accepting_set) out << " " << s;
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  auto fail = [&](int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) fail(lineno, "unexpected end of file");
    ++lineno;
    return std::istringstream(line);
  };

  {
    auto ls = next_line();
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "paced_dataset" || version != 1)
      fail(lineno, "expected header 'paced_dataset 1'");
  }
  Dataset ds;
  std::size_t num_prompts = 0;
  auto read_kv = [&](const char* key, auto& value) {
    auto ls = next_line();
    std::string k;
    ls >> k >> value;
    if (k != key || ls.fail()) fail(lineno, std::string("expected '") + key + " <value>'");
  };
  read_kv("vocab_size", ds.vocab_size);
  read_kv("seq_len", ds.seq_len);
  read_kv("seed", ds.seed);
  read_kv("num_prompts", num_prompts);
  const std::uint64_t space = sequence_space_size(ds.vocab_size, ds.seq_len);

  for (std::size_t i = 0; i < num_prompts; ++i) {
    auto ls = next_line();
    std::string tag;
    PromptId id = 0;
    std::size_t count = 0;
    ls >> tag >> id >> count;
    if (tag != "prompt" || ls.fail()) fail(lineno, "expected 'prompt <id> <count> <indices...>'");
    Prompt p;
    p.id = id;
    p.vocab_size = ds.vocab_size;
    p.seq_len = ds.seq_len;
    p.accepting_set.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      SeqIndex s = 0;
      ls >> s;
      if (ls.fail()) fail(lineno, "accepting set shorter than declared count");
      if (s >= space) fail(lineno, "accepting index out of range");
      p.accepting_set.push_back(s);
    }
    SeqIndex extra = 0;
    if (ls >> extra) fail(lineno, "accepting set longer than declared count");
    if (!std::is_sorted(p.accepting_set.begin(), p.accepting_set.end()) ||
        std::adjacent_find(p.accepting_set.begin(), p.accepting_set.end()) !=
            p.accepting_set.end())
      fail(lineno, "accepting set must be sorted and duplicate-free");
    for (const Prompt& q : ds.prompts)
      if (q.id == p.id) fail(lineno, "duplicate prompt id " + std::to_string(p.id));
    ds.prompts.push_back(std::move(p));
  }
  return ds;
}

}  // namespace paced
