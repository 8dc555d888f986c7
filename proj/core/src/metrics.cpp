#include "decipher/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

namespace decipher {

namespace {

constexpr int kMaxOrder = 4;

// n-gram key: tokens joined with a separator that cannot appear inside a
// whitespace-split token.
std::string ngram_key(const Tokens& toks, std::size_t start, int n) {
  std::string key;
  for (int i = 0; i < n; ++i) {
    if (i) key += '\x1f';
    key += toks[start + i];
  }
  return key;
}

std::map<std::string, std::size_t> ngram_counts(const Tokens& toks, int n) {
  std::map<std::string, std::size_t> counts;
  if (static_cast<int>(toks.size()) >= n)
    for (std::size_t s = 0; s + n <= toks.size(); ++s) ++counts[ngram_key(toks, s, n)];
  return counts;
}

struct OrderTally {
  std::size_t matches = 0;
  std::size_t total = 0;
};

void tally_pair(const Tokens& cand, const Tokens& ref, OrderTally (&tally)[kMaxOrder]) {
  for (int n = 1; n <= kMaxOrder; ++n) {
    auto cc = ngram_counts(cand, n);
    auto rc = ngram_counts(ref, n);
    auto& t = tally[n - 1];
    for (const auto& [key, count] : cc) {
      t.total += count;
      auto it = rc.find(key);
      if (it != rc.end()) t.matches += std::min(count, it->second);
    }
  }
}

double brevity_penalty(std::size_t cand_len, std::size_t ref_len) {
  if (cand_len >= ref_len) return 1.0;
  if (cand_len == 0) return 0.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

}  // namespace

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double bleu4(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  if (candidates.empty()) throw ContractError("bleu4: empty candidate set");
  if (candidates.size() != references.size())
    throw ContractError("bleu4: " + std::to_string(candidates.size()) + " candidates vs " +
                        std::to_string(references.size()) + " references");
  OrderTally tally[kMaxOrder];
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    tally_pair(candidates[i], references[i], tally);
    cand_len += candidates[i].size();
    ref_len += references[i].size();
  }
  double log_sum = 0.0;
  int orders = 0;
  for (const auto& t : tally) {
    if (t.total == 0) continue;  // no candidate is long enough for this order
    if (t.matches == 0) return 0.0;
    log_sum += std::log(static_cast<double>(t.matches) / static_cast<double>(t.total));
    ++orders;
  }
  if (orders == 0) return 0.0;  // all candidates empty
  return brevity_penalty(cand_len, ref_len) * std::exp(log_sum / orders);
}

double bleu4_sentence(const Tokens& candidate, const Tokens& reference) {
  OrderTally tally[kMaxOrder];
  tally_pair(candidate, reference, tally);
  if (tally[0].total == 0 || tally[0].matches == 0) return 0.0;
  double log_sum =
      std::log(static_cast<double>(tally[0].matches) / static_cast<double>(tally[0].total));
  for (int n = 2; n <= kMaxOrder; ++n) {
    const auto& t = tally[n - 1];
    log_sum += std::log(static_cast<double>(t.matches + 1) / static_cast<double>(t.total + 1));
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum / kMaxOrder);
}

double rouge_l(const Tokens& candidate, const Tokens& reference, double beta) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double meteor_lite(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  std::vector<char> cand_used(candidate.size(), 0), ref_used(reference.size(), 0);
  std::size_t matches = 0, chunks = 0;
  // Greedy alignment: repeatedly take the longest contiguous run of tokens
  // common to the unmatched parts; each run is one chunk.
  for (;;) {
    std::size_t best_len = 0, best_c = 0, best_r = 0;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_used[i]) continue;
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (ref_used[j]) continue;
        std::size_t len = 0;
        while (i + len < candidate.size() && j + len < reference.size() &&
               !cand_used[i + len] && !ref_used[j + len] &&
               candidate[i + len] == reference[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_c = i;
          best_r = j;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      cand_used[best_c + k] = 1;
      ref_used[best_r + k] = 1;
    }
    matches += best_len;
    ++chunks;
  }
  if (matches == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

MetricReport corpus_evaluate(const std::vector<Tokens>& candidates,
                             const std::vector<Tokens>& references,
                             const std::vector<std::string>& ids, double rouge_beta) {
  if (candidates.size() != references.size() || candidates.size() != ids.size())
    throw ContractError("corpus_evaluate: misaligned inputs (" +
                        std::to_string(candidates.size()) + " candidates, " +
                        std::to_string(references.size()) + " references, " +
                        std::to_string(ids.size()) + " ids)");
  if (candidates.empty()) throw ContractError("corpus_evaluate: empty evaluation set");
  MetricReport report;
  report.examples = candidates.size();
  report.rouge_beta = rouge_beta;
  report.corpus_bleu = bleu4(candidates, references);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    PerExampleScores row;
    row.id = ids[i];
    row.bleu = bleu4_sentence(candidates[i], references[i]);
    row.rouge_l = rouge_l(candidates[i], references[i], rouge_beta);
    row.meteor = meteor_lite(candidates[i], references[i]);
    report.mean_sentence_bleu += row.bleu;
    report.mean_rouge_l += row.rouge_l;
    report.mean_meteor += row.meteor;
    report.per_example.push_back(std::move(row));
  }
  const auto n = static_cast<double>(report.examples);
  report.mean_sentence_bleu /= n;
  report.mean_rouge_l /= n;
  report.mean_meteor /= n;
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["config"]["rouge_beta"] = report.rouge_beta;
  j["config"]["bleu_smoothing"] = "sentence level: add-one on orders >= 2";
  j["config"]["bleu_order_rule"] =
      "corpus level: orders with no candidate n-grams are excluded from the geometric mean";
  j["corpus"]["examples"] = report.examples;
  j["corpus"]["bleu"] = report.corpus_bleu;
  j["corpus"]["sentence_bleu_mean"] = report.mean_sentence_bleu;
  j["corpus"]["rouge_l_mean"] = report.mean_rouge_l;
  j["corpus"]["meteor_lite_mean"] = report.mean_meteor;
  j["per_example"] = nlohmann::ordered_json::array();
  for (const auto& row : report.per_example) {
    nlohmann::ordered_json r;
    r["id"] = row.id;
    r["bleu"] = row.bleu;
    r["rouge_l"] = row.rouge_l;
    r["meteor"] = row.meteor;
    j["per_example"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

}  // namespace decipher
