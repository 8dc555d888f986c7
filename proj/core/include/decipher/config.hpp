#pragma once

// Run configuration: flat key=value files, two built-in profiles, and
// explicit override application. Precedence is defaults < profile < config
// file < --set overrides < dedicated CLI flags; the CLI enforces it by
// applying layers in that order.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "decipher/corpus.hpp"
#include "decipher/errors.hpp"

namespace decipher {

struct RunConfig {
  std::string model = "seq2seq";  // seq2seq | vd
  int hidden_size = 64;
  int word_emb = 200;
  int char_emb = 100;
  int latent_dim = 64;
  int mlp_hidden = 128;
  int max_len = 50;  // generation budget per definition
  int epochs = 50;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::string feeding = "greedy";  // greedy | teacher
  int tweet_words = 32;
  int symbol_words = 4;
  int symbol_chars = 16;
  int def_words = 24;
  int kl_warmup_epochs = 0;  // 0 = full KL weight from the first epoch
  double rouge_beta = 1.2;
  int min_count = 1;
  double max_grad_norm = 0.0;  // <= 0 disables clipping
  double init_range = 0.08;    // uniform(-r, r) parameter init
};

// Built-in profiles: "default" (alias "full") restores the full-scale
// configuration above; "desk" shrinks dimensions and lengths for fast runs
// (embeddings 16, hidden 32) and raises epochs/lr accordingly. Unknown name:
// ContractError.
void apply_profile(RunConfig& cfg, const std::string& name);

// Parses `key = value` lines ('#' comments, blank lines ignored) into cfg.
// Unknown keys or unparseable values throw ContractError naming the line.
void load_config_file(RunConfig& cfg, const std::string& path);

// Applies one "key=value" override.
void apply_override(RunConfig& cfg, const std::string& key_value);

// Dimension/range sanity; throws ContractError on violation.
void validate(const RunConfig& cfg);

// Stable (key, value) snapshot of every field, for manifests and headers.
std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& cfg);

inline SequenceCaps seq_caps(const RunConfig& cfg) {
  return SequenceCaps{cfg.tweet_words, cfg.symbol_words, cfg.symbol_chars, cfg.def_words};
}

}  // namespace decipher
