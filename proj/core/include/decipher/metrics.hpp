#pragma once

// Text-generation metrics implemented from scratch: equally weighted BLEU up
// to 4-grams (corpus-pooled primary, add-one-smoothed sentence variant),
// ROUGE-L, and METEOR-lite (exact-match alignment only, no stemming or
// synonymy), plus corpus-level aggregation and JSON report serialization.

#include <cstddef>
#include <string>
#include <vector>

#include "decipher/errors.hpp"

namespace decipher {

using Tokens = std::vector<std::string>;

// Longest common subsequence length, dynamic programming.
std::size_t lcs_length(const Tokens& a, const Tokens& b);

// Corpus BLEU: clipped n-gram matches pooled over all pairs, geometric mean
// with equal weights, brevity penalty exp(1 - r/c) when c < r. Orders with no
// candidate n-grams anywhere in the corpus (possible only when every
// candidate is shorter than n) are excluded from the mean so that the
// identity corpus scores 1; any included order with zero pooled matches
// makes the score 0.
double bleu4(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

// Sentence BLEU with add-one smoothing on orders >= 2 (unigram precision
// unsmoothed, so zero unigram overlap scores 0).
double bleu4_sentence(const Tokens& candidate, const Tokens& reference);

// LCS F-measure: P = LCS/|cand|, R = LCS/|ref|, F = (1+b^2)PR / (R + b^2 P).
// 0 when either side is empty or the LCS is empty.
double rouge_l(const Tokens& candidate, const Tokens& reference, double beta = 1.2);

// Exact-match METEOR: unigram matches m via greedy longest-run alignment
// (fewest chunks), P = m/|cand|, R = m/|ref|, Fmean = 10PR/(R+9P),
// penalty = 0.5 * (chunks/m)^3, score = Fmean * (1 - penalty); 0 when m = 0.
double meteor_lite(const Tokens& candidate, const Tokens& reference);

struct PerExampleScores {
  std::string id;
  double bleu = 0.0;  // sentence-level, smoothed
  double rouge_l = 0.0;
  double meteor = 0.0;
};

struct MetricReport {
  double corpus_bleu = 0.0;
  double mean_sentence_bleu = 0.0;
  double mean_rouge_l = 0.0;
  double mean_meteor = 0.0;
  std::size_t examples = 0;
  double rouge_beta = 1.2;
  std::vector<PerExampleScores> per_example;
};

// Aligned candidate/reference/id lists; length mismatch or empty input is a
// ContractError.
MetricReport corpus_evaluate(const std::vector<Tokens>& candidates,
                             const std::vector<Tokens>& references,
                             const std::vector<std::string>& ids,
                             double rouge_beta = 1.2);

// Stable JSON rendering of a report (fixed key order, raw [0,1] scores).
std::string report_to_json(const MetricReport& report);

}  // namespace decipher
