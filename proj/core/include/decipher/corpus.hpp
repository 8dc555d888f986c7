#pragma once

// Corpus data model and pipeline: JSONL ingest, canonical-definition
// selection by vote ratio, a linear SVM tweet filter, leakage-controlled
// train/test splitting with audits, vocabulary building, and a deterministic
// synthetic corpus generator.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "decipher/errors.hpp"
#include "decipher/rng.hpp"

namespace decipher {

// One (tweet, symbol, definition) tuple. family_id groups surface-form
// variants of the same symbol; vote counts drive canonical-definition
// selection. label carries SVM training supervision ("hate" | "none").
struct Example {
  std::string tweet;
  std::string symbol;
  std::string definition;
  std::optional<std::string> family_id;
  std::optional<std::int64_t> upvotes;
  std::optional<std::int64_t> downvotes;
  std::optional<std::string> label;
};

struct IngestResult {
  std::vector<Example> examples;     // file order
  std::vector<std::string> errors;   // only populated when fail_fast is off
  std::vector<std::string> warnings; // tweet does not contain the symbol, etc.
};

// Parses one JSON object per line; blank lines are skipped. With fail_fast a
// malformed line throws SchemaError naming the line; otherwise errors are
// collected and good lines kept.
IngestResult ingest_jsonl(const std::string& path, bool fail_fast = true);

// Lowercased whitespace tokens with non-alphanumeric characters stripped from
// token edges (interior punctuation kept). Empty tokens are dropped.
std::vector<std::string> tokenize(const std::string& text);

// Character sequence of the raw string, lowercased, spaces and punctuation
// included (spacing is a meaningful surface-form mutation).
std::vector<std::string> char_tokens(const std::string& text);

// Vote ratio used for canonical-definition selection: upvotes / max(1,
// downvotes); missing counts score 0.
double vote_ratio(const Example& ex);

// Definition with the maximal vote ratio; ties break to earliest input order.
// Throws ContractError on an empty family.
std::string select_canonical_definition(const std::vector<Example>& family);

// Rewrites every member's definition to its family's canonical one. Examples
// without family_id are left untouched.
void canonicalize_definitions(std::vector<Example>& xs);

// Binary bag-of-words linear SVM over tokenized text.
struct SvmModel {
  std::vector<double> w;
  double b = 0.0;
  std::unordered_map<std::string, int> features;  // frozen after training

  double decision(const std::string& text) const;
};

// Subgradient descent on hinge loss + L2, per-epoch shuffling with a fixed
// seed. Labels must include both "hate" and "none"; anything else is a
// DataError.
SvmModel svm_train(const std::vector<std::pair<std::string, std::string>>& labeled,
                   int epochs, double lr, double l2, std::uint64_t seed);

// Keeps examples whose tweet scores positive; order preserved.
std::vector<Example> svm_filter(const SvmModel& model, const std::vector<Example>& xs);

struct SplitAudit {
  std::size_t train = 0, test_seen = 0, test_unseen = 0;
  std::size_t families_total = 0, families_held_out = 0, families_form_split = 0;
  std::size_t symbol_overlap = 0;        // exact surface strings in both train and test
  std::size_t seen_def_violations = 0;   // test-seen definitions absent from train
  std::size_t unseen_def_overlap = 0;    // test-unseen definitions present in train
  bool covers_all = false;

  bool ok() const {
    return symbol_overlap == 0 && seen_def_violations == 0 && unseen_def_overlap == 0 &&
           covers_all;
  }
};

struct SplitResult {
  std::vector<Example> train;
  std::vector<Example> test_seen;    // definition occurs in train
  std::vector<Example> test_unseen;  // definition absent from train
  SplitAudit audit;
};

// Leakage-controlled split. Families come from family_id (identical
// definition text as fallback); families sharing a definition move together.
// Whole families are held out to build the unseen-definition partition;
// remaining families with several surface forms are split form-wise so the
// definition stays in train while the held-out forms do not. Final partition
// labels are assigned by the predicate "definition text occurs in train".
// test_fraction outside (0,1) is a ContractError; corpora too small to
// populate train and both test partitions raise DataError.
SplitResult split_dataset(const std::vector<Example>& xs, double test_fraction,
                          std::uint64_t seed, double seen_fraction = 0.69);

// Token <-> id maps. Ids 0..3 are reserved: PAD, UNK, SOS, EOS.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;

  std::vector<std::string> id_to_word;
  std::vector<std::string> id_to_char;
  std::unordered_map<std::string, int> word_to_id;
  std::unordered_map<std::string, int> char_to_id;

  int word_id(const std::string& w) const {
    auto it = word_to_id.find(w);
    return it == word_to_id.end() ? kUnk : it->second;
  }
  int char_id(const std::string& c) const {
    auto it = char_to_id.find(c);
    return it == char_to_id.end() ? kUnk : it->second;
  }
  int word_count() const { return static_cast<int>(id_to_word.size()); }
  int char_count() const { return static_cast<int>(id_to_char.size()); }
};

// Word vocabulary from tweets, symbols, and definitions of the given (train)
// examples only; char vocabulary from symbol strings. Tokens below min_count
// are dropped and map to UNK at encode time. Insertion order is first
// occurrence, so identical input yields a byte-identical vocabulary.
Vocab build_vocab(const std::vector<Example>& train, int min_count = 1);

// Fixed-width id encodings of one example, ready for the models.
struct SequenceCaps {
  int tweet_words = 32;   // S_u
  int symbol_words = 4;   // S_w
  int symbol_chars = 16;  // S_c
  int def_words = 24;     // S_def
};

struct EncodedExample {
  std::vector<int> tweet_ids;     // tweet cap, PAD-padded
  std::vector<int> sym_word_ids;  // symbol word cap
  std::vector<int> sym_char_ids;  // symbol char cap
  std::vector<int> def_ids;       // truncated definition then EOS (decoder target)
  std::vector<int> def_enc_ids;   // definition cap, PAD-padded (definition encoder input)
  std::vector<char> attn_keep;    // word cap + char cap, 1 at non-PAD positions
};

EncodedExample encode_example(const Vocab& vocab, const Example& ex, const SequenceCaps& caps);

// Ids back to text; reserved ids other than UNK are dropped, UNK renders as
// "<unk>" so metric computation sees every generated position.
std::string detokenize(const Vocab& vocab, const std::vector<int>& ids);

// Deterministic synthetic corpus: `families` symbol families, each with one
// definition, `forms` surface-form variants (casing/spacing/abbreviation),
// and `templates` tweet contexts sharing family-specific content words.
// Output size is exactly families * forms * templates.
std::vector<Example> synth_generate(int families, int forms, int templates,
                                    std::uint64_t seed);

}  // namespace decipher
