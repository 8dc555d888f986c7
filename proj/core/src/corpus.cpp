#include "decipher/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace decipher {

namespace {

using nlohmann::json;

std::optional<std::string> opt_string(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw SchemaError("line " + std::to_string(line) + ": field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

std::optional<std::int64_t> opt_count(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer())
    throw SchemaError("line " + std::to_string(line) + ": field \"" + key + "\" must be an integer");
  auto v = it->get<std::int64_t>();
  if (v < 0)
    throw SchemaError("line " + std::to_string(line) + ": field \"" + key + "\" must be nonnegative");
  return v;
}

Example parse_example(const std::string& text, int line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object())
    throw SchemaError("line " + std::to_string(line) + ": expected a JSON object");
  Example ex;
  for (const char* key : {"tweet", "symbol", "definition"}) {
    auto v = opt_string(obj, key, line);
    if (!v)
      throw SchemaError("line " + std::to_string(line) + ": missing required field \"" +
                        key + "\"");
    if (key[0] == 't')
      ex.tweet = *v;
    else if (key[0] == 's')
      ex.symbol = *v;
    else
      ex.definition = *v;
  }
  if (ex.definition.empty())
    throw SchemaError("line " + std::to_string(line) + ": field \"definition\" must be nonempty");
  ex.family_id = opt_string(obj, "family_id", line);
  ex.upvotes = opt_count(obj, "upvotes", line);
  ex.downvotes = opt_count(obj, "downvotes", line);
  ex.label = opt_string(obj, "label", line);
  return ex;
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_token_char(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

IngestResult ingest_jsonl(const std::string& path, bool fail_fast) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  IngestResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      Example ex = parse_example(line, line_no);
      if (ex.tweet.find(ex.symbol) == std::string::npos)
        result.warnings.push_back("line " + std::to_string(line_no) +
                                  ": tweet does not contain symbol \"" + ex.symbol + "\"");
      result.examples.push_back(std::move(ex));
    } catch (const SchemaError& e) {
      if (fail_fast) throw;
      result.errors.push_back(e.what());
    }
  }
  return result;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  const std::string lower = lowercase(text);
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t j = i;
    while (j < lower.size() && !std::isspace(static_cast<unsigned char>(lower[j]))) ++j;
    std::size_t a = i, b = j;
    while (a < b && !is_token_char(static_cast<unsigned char>(lower[a]))) ++a;
    while (b > a && !is_token_char(static_cast<unsigned char>(lower[b - 1]))) --b;
    if (b > a) out.push_back(lower.substr(a, b - a));
    i = j;
  }
  return out;
}

std::vector<std::string> char_tokens(const std::string& text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  for (char c : text)
    out.emplace_back(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

double vote_ratio(const Example& ex) {
  if (!ex.upvotes) return 0.0;
  const double down = ex.downvotes ? static_cast<double>(*ex.downvotes) : 0.0;
  return static_cast<double>(*ex.upvotes) / std::max(1.0, down);
}

std::string select_canonical_definition(const std::vector<Example>& family) {
  if (family.empty()) throw ContractError("select_canonical_definition: empty family");
  std::size_t best = 0;
  double best_ratio = vote_ratio(family[0]);
  for (std::size_t i = 1; i < family.size(); ++i) {
    const double r = vote_ratio(family[i]);
    if (r > best_ratio) {
      best = i;
      best_ratio = r;
    }
  }
  return family[best].definition;
}

void canonicalize_definitions(std::vector<Example>& xs) {
  std::map<std::string, std::vector<Example>> families;
  for (const auto& ex : xs)
    if (ex.family_id) families[*ex.family_id].push_back(ex);
  std::map<std::string, std::string> canonical;
  for (const auto& [id, members] : families)
    canonical[id] = select_canonical_definition(members);
  for (auto& ex : xs)
    if (ex.family_id) ex.definition = canonical[*ex.family_id];
}

double SvmModel::decision(const std::string& text) const {
  double score = b;
  std::unordered_set<std::string> seen;
  for (const auto& tok : tokenize(text)) {
    if (!seen.insert(tok).second) continue;  // binary features
    auto it = features.find(tok);
    if (it != features.end()) score += w[it->second];
  }
  return score;
}

SvmModel svm_train(const std::vector<std::pair<std::string, std::string>>& labeled,
                   int epochs, double lr, double l2, std::uint64_t seed) {
  SvmModel model;
  std::vector<std::vector<int>> feats(labeled.size());
  std::vector<double> ys(labeled.size());
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& [text, label] = labeled[i];
    if (label == "hate") {
      ys[i] = 1.0;
      has_pos = true;
    } else if (label == "none") {
      ys[i] = -1.0;
      has_neg = true;
    } else {
      throw DataError("svm_train: unknown label \"" + label + "\" (want hate|none)");
    }
    std::unordered_set<std::string> seen;
    for (const auto& tok : tokenize(text)) {
      if (!seen.insert(tok).second) continue;
      auto [it, inserted] =
          model.features.emplace(tok, static_cast<int>(model.features.size()));
      feats[i].push_back(it->second);
      (void)inserted;
    }
  }
  if (!has_pos || !has_neg)
    throw DataError("svm_train: need both hate and none labels");

  model.w.assign(model.features.size(), 0.0);
  Rng rng(Rng::derive(seed, 0x53564d));
  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      double margin = model.b;
      for (int f : feats[i]) margin += model.w[f];
      margin *= ys[i];
      const double shrink = 1.0 - lr * l2;
      for (double& wj : model.w) wj *= shrink;
      if (margin < 1.0) {
        for (int f : feats[i]) model.w[f] += lr * ys[i];
        model.b += lr * ys[i];
      }
    }
  }
  return model;
}

std::vector<Example> svm_filter(const SvmModel& model, const std::vector<Example>& xs) {
  std::vector<Example> kept;
  for (const auto& ex : xs)
    if (model.decision(ex.tweet) > 0.0) kept.push_back(ex);
  return kept;
}

namespace {

// Families sharing a definition must move between partitions together; a
// definition group is the union of such families. Surface forms are tracked
// per group so the overlap audits can be guaranteed by construction.
struct DefGroup {
  std::vector<std::size_t> members;          // example indices
  std::vector<std::string> forms;            // distinct symbol strings, first occurrence
  bool forms_exclusive = true;               // no form shared with another group
};

}  // namespace

SplitResult split_dataset(const std::vector<Example>& xs, double test_fraction,
                          std::uint64_t seed, double seen_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ContractError("split_dataset: test_fraction must be in (0,1), got " +
                        std::to_string(test_fraction));
  if (!(seen_fraction > 0.0 && seen_fraction < 1.0))
    throw ContractError("split_dataset: seen_fraction must be in (0,1), got " +
                        std::to_string(seen_fraction));
  if (xs.empty()) throw DataError("split_dataset: empty corpus");

  // Family key: explicit id, else inferred by identical definition text.
  std::map<std::string, std::vector<std::size_t>> families;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::string k =
        xs[i].family_id ? "f:" + *xs[i].family_id : "d:" + xs[i].definition;
    families[k].push_back(i);
  }

  std::map<std::string, std::size_t> def_to_group;
  std::vector<DefGroup> groups;
  std::vector<std::string> group_order;  // deterministic: first definition seen
  for (const auto& [key, members] : families) {
    // All members of one family may still carry multiple definition texts if
    // canonicalization was skipped; each text routes to its group.
    for (std::size_t idx : members) {
      const std::string& d = xs[idx].definition;
      auto it = def_to_group.find(d);
      if (it == def_to_group.end()) {
        it = def_to_group.emplace(d, groups.size()).first;
        groups.emplace_back();
      }
      groups[it->second].members.push_back(idx);
    }
  }

  std::map<std::string, std::set<std::size_t>> form_groups;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::set<std::string> seen;
    for (std::size_t idx : groups[g].members) {
      const std::string& s = xs[idx].symbol;
      if (seen.insert(s).second) groups[g].forms.push_back(s);
      form_groups[s].insert(g);
    }
  }
  for (auto& g : groups)
    for (const auto& f : g.forms)
      if (form_groups[f].size() > 1) g.forms_exclusive = false;

  const std::size_t n = xs.size();
  const auto test_target = std::max<std::size_t>(2, std::llround(test_fraction * n));
  const auto unseen_target =
      std::max<std::size_t>(1, std::llround((1.0 - seen_fraction) * test_target));
  const auto seen_target = std::max<std::size_t>(
      1, test_target > unseen_target ? test_target - unseen_target : 1);

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::derive(seed, 0x5354));
  rng.shuffle(order);

  enum class Dest { Train, TestWhole, TestForm };
  std::vector<Dest> dest(groups.size(), Dest::Train);
  std::vector<char> example_to_test(n, 0);

  SplitAudit audit;
  audit.families_total = families.size();

  // Whole-group holdout builds the unseen-definition side. A group is
  // eligible only when its forms appear nowhere else, which keeps the symbol
  // overlap audit exact.
  std::size_t unseen_count = 0, assigned = 0;
  for (std::size_t g : order) {
    if (unseen_count >= unseen_target) break;
    const auto& grp = groups[g];
    if (!grp.forms_exclusive) continue;
    if (assigned + grp.members.size() + seen_target >= n) continue;  // keep train populated
    dest[g] = Dest::TestWhole;
    for (std::size_t idx : grp.members) example_to_test[idx] = 1;
    unseen_count += grp.members.size();
    assigned += grp.members.size();
    ++audit.families_held_out;
  }

  // Form-wise split of remaining groups builds the seen-definition side: some
  // surface forms move to test while at least one stays in train with the
  // shared definition.
  std::size_t seen_count = 0;
  for (std::size_t g : order) {
    if (seen_count >= seen_target) break;
    if (dest[g] != Dest::Train) continue;
    auto& grp = groups[g];
    if (grp.forms.size() < 2) continue;
    std::vector<std::string> movable;
    for (const auto& f : grp.forms)
      if (form_groups[f].size() == 1) movable.push_back(f);
    if (movable.empty()) continue;
    std::size_t max_move = movable.size();
    if (movable.size() == grp.forms.size()) --max_move;  // leave one form in train
    if (max_move == 0) continue;
    std::size_t k = std::clamp<std::size_t>((grp.forms.size() + 1) / 2, 1, max_move);
    Rng form_rng(Rng::derive(seed, 0x464f524d + g));
    form_rng.shuffle(movable);
    std::set<std::string> moved(movable.begin(), movable.begin() + k);
    std::size_t moved_examples = 0;
    for (std::size_t idx : grp.members)
      if (moved.count(xs[idx].symbol)) {
        example_to_test[idx] = 1;
        ++moved_examples;
      }
    if (moved_examples == 0 || moved_examples == grp.members.size()) {
      for (std::size_t idx : grp.members) example_to_test[idx] = 0;
      continue;
    }
    dest[g] = Dest::TestForm;
    seen_count += moved_examples;
    assigned += moved_examples;
    ++audit.families_form_split;
  }

  SplitResult result;
  std::unordered_set<std::string> train_defs;
  for (std::size_t i = 0; i < n; ++i)
    if (!example_to_test[i]) {
      result.train.push_back(xs[i]);
      train_defs.insert(xs[i].definition);
    }
  // Partition labels come from the definition-in-train predicate, not from
  // the construction above; the audit then verifies the predicate held.
  for (std::size_t i = 0; i < n; ++i)
    if (example_to_test[i]) {
      if (train_defs.count(xs[i].definition))
        result.test_seen.push_back(xs[i]);
      else
        result.test_unseen.push_back(xs[i]);
    }

  if (result.train.empty() || result.test_seen.empty() || result.test_unseen.empty())
    throw DataError(
        "split_dataset: infeasible split; need more definition families or more "
        "surface forms per family (train " +
        std::to_string(result.train.size()) + ", seen " +
        std::to_string(result.test_seen.size()) + ", unseen " +
        std::to_string(result.test_unseen.size()) + ")");

  std::unordered_set<std::string> train_forms;
  for (const auto& ex : result.train) train_forms.insert(ex.symbol);
  std::unordered_set<std::string> counted;
  for (const auto* part : {&result.test_seen, &result.test_unseen})
    for (const auto& ex : *part)
      if (train_forms.count(ex.symbol) && counted.insert(ex.symbol).second)
        ++audit.symbol_overlap;
  for (const auto& ex : result.test_seen)
    if (!train_defs.count(ex.definition)) ++audit.seen_def_violations;
  for (const auto& ex : result.test_unseen)
    if (train_defs.count(ex.definition)) ++audit.unseen_def_overlap;
  audit.train = result.train.size();
  audit.test_seen = result.test_seen.size();
  audit.test_unseen = result.test_unseen.size();
  audit.covers_all = audit.train + audit.test_seen + audit.test_unseen == n;
  result.audit = audit;
  return result;
}

Vocab build_vocab(const std::vector<Example>& train, int min_count) {
  if (train.empty()) throw ContractError("build_vocab: empty train split");
  Vocab v;
  for (const char* r : {"<pad>", "<unk>", "<sos>", "<eos>"}) {
    v.word_to_id.emplace(r, static_cast<int>(v.id_to_word.size()));
    v.id_to_word.emplace_back(r);
    v.char_to_id.emplace(r, static_cast<int>(v.id_to_char.size()));
    v.id_to_char.emplace_back(r);
  }

  std::vector<std::string> word_order, char_order;
  std::unordered_map<std::string, int> word_count, char_count;
  auto note_word = [&](const std::string& t) {
    if (++word_count[t] == 1) word_order.push_back(t);
  };
  for (const auto& ex : train) {
    for (const auto& t : tokenize(ex.tweet)) note_word(t);
    for (const auto& t : tokenize(ex.symbol)) note_word(t);
    for (const auto& t : tokenize(ex.definition)) note_word(t);
    for (const auto& c : char_tokens(ex.symbol))
      if (++char_count[c] == 1) char_order.push_back(c);
  }
  for (const auto& t : word_order)
    if (word_count[t] >= min_count) {
      v.word_to_id.emplace(t, static_cast<int>(v.id_to_word.size()));
      v.id_to_word.push_back(t);
    }
  for (const auto& c : char_order)
    if (char_count[c] >= min_count) {
      v.char_to_id.emplace(c, static_cast<int>(v.id_to_char.size()));
      v.id_to_char.push_back(c);
    }
  return v;
}

namespace {

void pad_to(std::vector<int>& ids, int cap) {
  if (static_cast<int>(ids.size()) > cap) ids.resize(cap);
  while (static_cast<int>(ids.size()) < cap) ids.push_back(Vocab::kPad);
}

}  // namespace

EncodedExample encode_example(const Vocab& vocab, const Example& ex,
                              const SequenceCaps& caps) {
  EncodedExample enc;
  for (const auto& t : tokenize(ex.tweet)) enc.tweet_ids.push_back(vocab.word_id(t));
  for (const auto& t : tokenize(ex.symbol)) enc.sym_word_ids.push_back(vocab.word_id(t));
  for (const auto& c : char_tokens(ex.symbol)) enc.sym_char_ids.push_back(vocab.char_id(c));
  pad_to(enc.tweet_ids, caps.tweet_words);
  pad_to(enc.sym_word_ids, caps.symbol_words);
  pad_to(enc.sym_char_ids, caps.symbol_chars);
  for (const auto& t : tokenize(ex.definition)) {
    if (static_cast<int>(enc.def_ids.size()) >= caps.def_words) break;
    enc.def_ids.push_back(vocab.word_id(t));
  }
  enc.def_enc_ids = enc.def_ids;
  pad_to(enc.def_enc_ids, caps.def_words);
  enc.def_ids.push_back(Vocab::kEos);
  enc.attn_keep.reserve(enc.sym_word_ids.size() + enc.sym_char_ids.size());
  for (int id : enc.sym_word_ids) enc.attn_keep.push_back(id != Vocab::kPad ? 1 : 0);
  for (int id : enc.sym_char_ids) enc.attn_keep.push_back(id != Vocab::kPad ? 1 : 0);
  return enc;
}

std::string detokenize(const Vocab& vocab, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id == Vocab::kPad || id == Vocab::kSos || id == Vocab::kEos) continue;
    if (!out.empty()) out += ' ';
    out += id >= 0 && id < vocab.word_count() ? vocab.id_to_word[id] : "<unk>";
  }
  return out;
}

namespace {

const char* kAdjectives[] = {
    "grim",   "hollow", "iron",   "pale",   "broken", "silent", "bitter", "frozen",
    "crooked", "ashen", "savage", "dull",   "harsh",  "jagged", "sour",   "murky",
    "rigid",  "stark",  "bleak",  "feral",  "crude",  "shrill", "numb",   "vile",
    "stale"};
const char* kNouns[] = {
    "wolf",   "raven", "serpent", "anvil",  "ember",  "thorn",  "cinder", "lantern",
    "gallows", "briar", "falcon", "hammer", "talon",  "shard",  "spire",  "moth",
    "boulder", "creek", "antler", "furnace", "willow", "marrow", "vulture", "nettle",
    "pike"};

std::string synth_definition(int family, const std::string& adj, const std::string& noun) {
  switch (family % 4) {
    case 0: return "coded reference to the " + adj + " " + noun + " movement";
    case 1: return "slang name for a " + adj + " " + noun + " group";
    case 2: return "abbreviation used by the " + adj + " " + noun + " network";
    default: return "insider term praising the " + adj + " " + noun + " cause";
  }
}

std::string synth_form(int k, const std::string& base) {
  switch (k) {
    case 0:
      return base;
    case 1: {
      std::string up = base;
      for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return up;
    }
    case 2:
      return base.substr(0, 2) + " " + base.substr(2);
    case 3: {
      std::string abbr;
      for (char c : base)
        if (c != 'a' && c != 'e' && c != 'i' && c != 'o' && c != 'u') abbr += c;
      return abbr.empty() ? base + "x" : abbr;
    }
    default:
      return base + "_" + std::to_string(k);
  }
}

std::string synth_tweet(int t, const std::string& sym, const std::string& adj,
                        const std::string& noun) {
  std::string text;
  switch (t % 6) {
    case 0: text = "just saw " + sym + " sprayed on the wall near the " + noun + " bar"; break;
    case 1: text = "these " + adj + " accounts keep spamming " + sym + " under every post"; break;
    case 2:
      text = "what does " + sym + " mean, the " + adj + " " + noun + " crowd keeps using it";
      break;
    case 3:
      text = "reported another profile with " + sym + " in the bio pushing " + adj + " " +
             noun + " talk";
      break;
    case 4: text = "the " + sym + " tag showed up again in that " + adj + " " + noun + " forum"; break;
    default:
      text = "my feed is full of " + sym + " dogwhistles from " + adj + " " + noun + " pages";
  }
  if (t >= 6) text += " round " + std::to_string(t);
  return text;
}

}  // namespace

std::vector<Example> synth_generate(int families, int forms, int templates,
                                    std::uint64_t seed) {
  if (families < 1 || forms < 1 || templates < 1)
    throw ContractError("synth_generate: counts must be >= 1");
  constexpr int kA = static_cast<int>(std::size(kAdjectives));
  constexpr int kN = static_cast<int>(std::size(kNouns));
  Rng rng(Rng::derive(seed, 0x53594e));
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(families) * forms * templates);
  for (int f = 0; f < families; ++f) {
    const std::string adj = kAdjectives[f % kA];
    const std::string noun = kNouns[(f / kA) % kN];
    std::string definition = synth_definition(f, adj, noun);
    if (f >= kA * kN) definition += " " + std::to_string(f);  // keep definitions distinct
    const std::string base = adj.substr(0, 2) + noun.substr(0, 2) + std::to_string(f);
    for (int k = 0; k < forms; ++k) {
      const std::string sym = synth_form(k, base);
      for (int t = 0; t < templates; ++t) {
        Example ex;
        ex.symbol = sym;
        ex.tweet = synth_tweet(t, sym, adj, noun);
        ex.definition = definition;
        ex.family_id = "fam" + std::to_string(f);
        ex.upvotes = static_cast<std::int64_t>(1 + rng.below(50));
        ex.downvotes = static_cast<std::int64_t>(rng.below(5));
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

}  // namespace decipher
