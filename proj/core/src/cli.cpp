#include "decipher/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "decipher/checkpoint.hpp"
#include "decipher/config.hpp"
#include "decipher/corpus.hpp"
#include "decipher/fsutil.hpp"
#include "decipher/gradchecks.hpp"
#include "decipher/metrics.hpp"
#include "decipher/seq2seq.hpp"
#include "decipher/variational.hpp"

namespace decipher {

namespace {

using nlohmann::ordered_json;

std::string example_to_json_line(const Example& ex) {
  ordered_json j;
  j["tweet"] = ex.tweet;
  j["symbol"] = ex.symbol;
  j["definition"] = ex.definition;
  if (ex.family_id) j["family_id"] = *ex.family_id;
  if (ex.upvotes) j["upvotes"] = *ex.upvotes;
  if (ex.downvotes) j["downvotes"] = *ex.downvotes;
  if (ex.label) j["label"] = *ex.label;
  return j.dump();
}

void write_jsonl(const std::string& path, const std::vector<Example>& xs) {
  std::string out;
  for (const auto& ex : xs) {
    out += example_to_json_line(ex);
    out += '\n';
  }
  write_text_atomic(path, out);
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path))
    throw CLI::ValidationError("no such file: " + path);
}

void print_warnings(const IngestResult& ingest) {
  const std::size_t cap = 10;
  for (std::size_t i = 0; i < ingest.warnings.size() && i < cap; ++i)
    std::cerr << "warning: " << ingest.warnings[i] << "\n";
  if (ingest.warnings.size() > cap)
    std::cerr << "warning: " << (ingest.warnings.size() - cap) << " more suppressed\n";
}

// Seed fallback chain: DECIPHER_SEED applies before config files and flags,
// so anything explicit wins over the environment.
void apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("DECIPHER_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw ContractError("DECIPHER_SEED is not an unsigned integer: \"" + std::string(env) +
                        "\"");
  cfg.seed = static_cast<std::uint64_t>(v);
}

std::uint64_t resolve_plain_seed(const CLI::Option* seed_opt, std::uint64_t flag_value,
                                 std::uint64_t fallback) {
  if (seed_opt->count() > 0) return flag_value;
  RunConfig tmp;
  tmp.seed = fallback;
  apply_env_seed(tmp);
  return tmp.seed;
}

void write_manifest(const std::string& path, const std::string& command,
                    const RunConfig* cfg, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_sec) {
  ordered_json j;
  j["command"] = command;
  if (cfg) {
    ordered_json c;
    for (const auto& [k, v] : config_snapshot(*cfg)) c[k] = v;
    j["config"] = std::move(c);
  }
  j["inputs"] = ordered_json::object();
  for (const auto& p : inputs) j["inputs"][p] = file_checksum(p);
  j["outputs"] = ordered_json::object();
  for (const auto& p : outputs) j["outputs"][p] = file_checksum(p);
  j["wall_clock_sec"] = wall_sec;
  write_text_atomic(path, j.dump(2) + "\n");
}

ModelDims dims_from(const RunConfig& cfg, const Vocab& vocab) {
  ModelDims d;
  d.hidden = cfg.hidden_size;
  d.word_dim = cfg.word_emb;
  d.char_dim = cfg.char_emb;
  d.latent = cfg.latent_dim;
  d.mlp_hidden = cfg.mlp_hidden;
  d.tweet_len = cfg.tweet_words;
  d.sym_word_len = cfg.symbol_words;
  d.sym_char_len = cfg.symbol_chars;
  d.def_len = cfg.def_words;
  d.max_len = cfg.max_len;
  d.word_vocab = vocab.word_count();
  d.char_vocab = vocab.char_count();
  return d;
}

EncodedExample encode_query(const Vocab& vocab, const std::string& tweet,
                            const std::string& symbol, const SequenceCaps& caps) {
  Example ex;
  ex.tweet = tweet;
  ex.symbol = symbol;
  ex.definition = "-";  // placeholder; query paths never read it
  return encode_example(vocab, ex, caps);
}

Tokens ids_to_tokens(const Vocab& vocab, const std::vector<int>& ids) {
  Tokens toks;
  toks.reserve(ids.size());
  for (int id : ids)
    toks.push_back(id >= 0 && id < vocab.word_count() ? vocab.id_to_word[id] : "<unk>");
  return toks;
}

struct SynthArgs {
  int families = 50, forms = 4, templates = 3;
  std::uint64_t seed = 1;
  std::string output = "corpus.jsonl";
};

struct SplitArgs {
  std::string input;
  std::string outdir = ".";
  double test_frac = 0.13;
  double seen_frac = 0.69;
  std::uint64_t seed = 1;
};

struct FilterArgs {
  std::string labeled, input, output = "filtered.jsonl";
  int epochs = 30;
  double lr = 0.1, l2 = 1e-3;
  std::uint64_t seed = 1;
};

struct TrainArgs {
  std::string train_path, config_path, profile, model;
  std::vector<std::string> sets;
  std::string checkpoint = "model.hsdc";
  std::uint64_t seed = 1;
  int epochs = -1;
};

struct EvalArgs {
  std::string checkpoint, split, report = "report.json";
  bool sample = false;
  std::uint64_t seed = 1;
  double rouge_beta = 1.2;
};

struct DecipherArgs {
  std::string checkpoint, tweet, symbol;
  bool sample = false;
  std::uint64_t seed = 1;
};

struct GradcheckArgs {
  double tol = 1e-4;
  std::uint64_t seed = 1234;
  bool full = false;
};

int cmd_synth(const SynthArgs& a) {
  auto xs = synth_generate(a.families, a.forms, a.templates, a.seed);
  write_jsonl(a.output, xs);
  std::cout << "wrote " << xs.size() << " examples to " << a.output << "\n";
  return 0;
}

int cmd_split(const SplitArgs& a) {
  require_file(a.input);
  auto ingest = ingest_jsonl(a.input);
  print_warnings(ingest);
  canonicalize_definitions(ingest.examples);
  auto split = split_dataset(ingest.examples, a.test_frac, a.seed, a.seen_frac);

  std::filesystem::create_directories(a.outdir);
  const auto out = [&](const char* name) {
    return (std::filesystem::path(a.outdir) / name).string();
  };
  write_jsonl(out("train.jsonl"), split.train);
  write_jsonl(out("test_seen.jsonl"), split.test_seen);
  write_jsonl(out("test_unseen.jsonl"), split.test_unseen);

  const auto& audit = split.audit;
  ordered_json j;
  j["train"] = audit.train;
  j["test_seen"] = audit.test_seen;
  j["test_unseen"] = audit.test_unseen;
  j["families_total"] = audit.families_total;
  j["families_held_out"] = audit.families_held_out;
  j["families_form_split"] = audit.families_form_split;
  j["symbol_overlap"] = audit.symbol_overlap;
  j["seen_def_violations"] = audit.seen_def_violations;
  j["unseen_def_overlap"] = audit.unseen_def_overlap;
  j["covers_all"] = audit.covers_all;
  j["ok"] = audit.ok();
  write_text_atomic(out("audit.json"), j.dump(2) + "\n");

  std::cout << "train " << audit.train << "  test_seen " << audit.test_seen
            << "  test_unseen " << audit.test_unseen << "  audit "
            << (audit.ok() ? "ok" : "FAILED") << "\n";
  if (!audit.ok()) {
    std::cerr << "error: split audit failed, see " << out("audit.json") << "\n";
    return 1;
  }
  return 0;
}

int cmd_filter(const FilterArgs& a) {
  require_file(a.labeled);
  require_file(a.input);
  auto labeled = ingest_jsonl(a.labeled);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& ex : labeled.examples) {
    if (!ex.label)
      throw DataError("filter: labeled corpus has an example without a label field");
    pairs.emplace_back(ex.tweet, *ex.label);
  }
  auto model = svm_train(pairs, a.epochs, a.lr, a.l2, a.seed);
  auto input = ingest_jsonl(a.input);
  print_warnings(input);
  auto kept = svm_filter(model, input.examples);
  write_jsonl(a.output, kept);
  std::cout << "kept " << kept.size() << " of " << input.examples.size() << " examples\n";
  return 0;
}

RunConfig build_config(const TrainArgs& a, const CLI::Option* seed_opt,
                       const CLI::Option* epochs_opt, const CLI::Option* model_opt) {
  RunConfig cfg;
  if (!a.profile.empty()) apply_profile(cfg, a.profile);
  apply_env_seed(cfg);
  if (!a.config_path.empty()) {
    require_file(a.config_path);
    load_config_file(cfg, a.config_path);
  }
  for (const auto& kv : a.sets) apply_override(cfg, kv);
  if (model_opt->count() > 0) cfg.model = a.model;
  if (seed_opt->count() > 0) cfg.seed = a.seed;
  if (epochs_opt->count() > 0) cfg.epochs = a.epochs;
  validate(cfg);
  return cfg;
}

int cmd_train(const TrainArgs& a, const RunConfig& cfg) {
  require_file(a.train_path);
  const auto t0 = std::chrono::steady_clock::now();
  auto ingest = ingest_jsonl(a.train_path);
  print_warnings(ingest);
  if (ingest.examples.empty()) throw DataError("train: corpus is empty");

  auto vocab = build_vocab(ingest.examples, cfg.min_count);
  const auto caps = seq_caps(cfg);
  std::vector<EncodedExample> data;
  data.reserve(ingest.examples.size());
  for (const auto& ex : ingest.examples) data.push_back(encode_example(vocab, ex, caps));

  const auto dims = dims_from(cfg, vocab);
  Rng init_rng(Rng::derive(cfg.seed, cfg.model == "vd" ? 0x7664 : 0x737173));
  EpochHook hook = [](int epoch, double loss) {
    std::printf("epoch %3d  loss %.6f\n", epoch + 1, loss);
    std::fflush(stdout);
    return false;
  };
  ParamListT<float> params;
  if (cfg.model == "seq2seq") {
    Seq2SeqModel model(dims, init_rng, cfg.init_range);
    train_seq2seq(model, data, cfg, hook);
    params = model.params();
  } else {
    VdModel model(dims, init_rng, cfg.init_range);
    train_vd(model, data, cfg, hook);
    params = model.params();
  }
  save_checkpoint(a.checkpoint, cfg.model, dims, vocab, params);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(a.checkpoint + ".manifest.json", "train", &cfg, {a.train_path},
                 {a.checkpoint}, wall);
  std::cout << "checkpoint written: " << a.checkpoint << "\n";
  return 0;
}

int cmd_evaluate(const EvalArgs& a) {
  require_file(a.checkpoint);
  require_file(a.split);
  const auto t0 = std::chrono::steady_clock::now();
  auto loaded = load_checkpoint(a.checkpoint);
  auto ingest = ingest_jsonl(a.split);
  if (ingest.examples.empty()) throw DataError("evaluate: split is empty");
  const SequenceCaps caps{loaded.dims.tweet_len, loaded.dims.sym_word_len,
                          loaded.dims.sym_char_len, loaded.dims.def_len};

  // Generation first, references after: decode paths only ever see the
  // query side of each example.
  std::vector<Tokens> candidates;
  candidates.reserve(ingest.examples.size());
  for (std::size_t i = 0; i < ingest.examples.size(); ++i) {
    const auto& ex = ingest.examples[i];
    const auto q =
        query_of(encode_query(loaded.vocab, ex.tweet, ex.symbol, caps));
    std::vector<int> ids;
    if (loaded.kind == "seq2seq") {
      ids = greedy_decode(loaded.seq2seq, q);
    } else {
      std::vector<float> noise(loaded.dims.latent, 0.0f);
      if (a.sample) {
        Rng rng(Rng::derive(a.seed, i));
        for (auto& n : noise) n = static_cast<float>(rng.normal());
      }
      ids = vd_test_decode(loaded.vd, q, noise);
    }
    candidates.push_back(ids_to_tokens(loaded.vocab, ids));
  }
  std::vector<Tokens> references;
  std::vector<std::string> ids;
  references.reserve(ingest.examples.size());
  for (std::size_t i = 0; i < ingest.examples.size(); ++i) {
    references.push_back(tokenize(ingest.examples[i].definition));
    ids.push_back(std::to_string(i));
  }

  auto report = corpus_evaluate(candidates, references, ids, a.rouge_beta);
  write_text_atomic(a.report, report_to_json(report));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(a.report + ".manifest.json", "evaluate", nullptr,
                 {a.checkpoint, a.split}, {a.report}, wall);
  std::printf("examples %zu  bleu %.2f  rouge_l %.2f  meteor_lite %.2f\n", report.examples,
              100.0 * report.corpus_bleu, 100.0 * report.mean_rouge_l,
              100.0 * report.mean_meteor);
  return 0;
}

int cmd_decipher(const DecipherArgs& a) {
  require_file(a.checkpoint);
  auto loaded = load_checkpoint(a.checkpoint);
  if (a.tweet.find(a.symbol) == std::string::npos)
    std::cerr << "warning: tweet does not contain symbol \"" << a.symbol << "\"\n";
  const SequenceCaps caps{loaded.dims.tweet_len, loaded.dims.sym_word_len,
                          loaded.dims.sym_char_len, loaded.dims.def_len};
  const auto q = query_of(encode_query(loaded.vocab, a.tweet, a.symbol, caps));
  std::vector<int> ids;
  if (loaded.kind == "seq2seq") {
    ids = greedy_decode(loaded.seq2seq, q);
  } else {
    std::vector<float> noise(loaded.dims.latent, 0.0f);
    if (a.sample) {
      Rng rng(Rng::derive(a.seed, 0));
      for (auto& n : noise) n = static_cast<float>(rng.normal());
    }
    ids = vd_test_decode(loaded.vd, q, noise);
  }
  std::cout << detokenize(loaded.vocab, ids) << "\n";
  return 0;
}

int cmd_gradcheck(const GradcheckArgs& a) {
  auto reports = gradcheck_suite(a.seed, a.tol);
  if (a.full) {
    auto more = gradcheck_end_to_end(a.seed, a.tol);
    reports.insert(reports.end(), more.begin(), more.end());
  }
  bool all_ok = true;
  for (const auto& r : reports) {
    std::printf("%-24s max rel err %.3e  %s\n", r.name.c_str(), r.worst,
                r.ok ? "pass" : "FAIL");
    if (!r.ok) {
      all_ok = false;
      std::cerr << "  " << r.message << "\n";
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hate-symbol decipherment models, corpus tooling, and evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--families", synth.families, "symbol families")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--forms", synth.forms, "surface forms per family")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--templates", synth.templates, "tweet templates per form")
      ->check(CLI::PositiveNumber);
  auto* synth_seed = synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--output", synth.output, "output JSONL path");

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "leakage-controlled train/test split");
  split_cmd->add_option("--input", split.input, "corpus JSONL")->required();
  split_cmd->add_option("--outdir", split.outdir, "output directory");
  split_cmd->add_option("--test-frac", split.test_frac, "test fraction (0,1)");
  split_cmd->add_option("--seen-frac", split.seen_frac,
                        "share of test with definitions kept in train");
  auto* split_seed = split_cmd->add_option("--seed", split.seed, "random seed");

  FilterArgs filter;
  auto* filter_cmd = app.add_subcommand("filter", "SVM-filter a corpus");
  filter_cmd->add_option("--labeled", filter.labeled, "labeled training JSONL (label: hate|none)")
      ->required();
  filter_cmd->add_option("--input", filter.input, "corpus JSONL to filter")->required();
  filter_cmd->add_option("--output", filter.output, "output JSONL path");
  filter_cmd->add_option("--epochs", filter.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  filter_cmd->add_option("--lr", filter.lr, "learning rate");
  filter_cmd->add_option("--l2", filter.l2, "L2 regularization");
  auto* filter_seed = filter_cmd->add_option("--seed", filter.seed, "random seed");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--train", train.train_path, "training JSONL")->required();
  auto* train_model = train_cmd->add_option("--model", train.model, "seq2seq | vd");
  train_cmd->add_option("--config", train.config_path, "key=value config file");
  train_cmd->add_option("--profile", train.profile, "config profile: default | desk");
  train_cmd->add_option("--set", train.sets, "config override key=value (repeatable)");
  auto* train_seed = train_cmd->add_option("--seed", train.seed, "random seed");
  auto* train_epochs = train_cmd->add_option("--epochs", train.epochs, "training epochs");
  train_cmd->add_option("--checkpoint", train.checkpoint, "output checkpoint path");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "decode a split and score it");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--split", eval.split, "evaluation JSONL")->required();
  eval_cmd->add_option("--report", eval.report, "output report JSON path");
  eval_cmd->add_flag("--sample", eval.sample, "draw stochastic latents instead of zeros");
  auto* eval_seed = eval_cmd->add_option("--seed", eval.seed, "sampling seed");
  eval_cmd->add_option("--rouge-beta", eval.rouge_beta, "recall weight");

  DecipherArgs dec;
  auto* dec_cmd = app.add_subcommand("decipher", "generate one definition");
  dec_cmd->add_option("--checkpoint", dec.checkpoint, "model checkpoint")->required();
  dec_cmd->add_option("--tweet", dec.tweet, "tweet text")->required();
  dec_cmd->add_option("--symbol", dec.symbol, "symbol surface form")->required();
  dec_cmd->add_flag("--sample", dec.sample, "draw a stochastic latent instead of zeros");
  auto* dec_seed = dec_cmd->add_option("--seed", dec.seed, "sampling seed");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc_cmd->add_option("--tol", gc.tol, "max relative error tolerance");
  gc_cmd->add_option("--seed", gc.seed, "random seed");
  gc_cmd->add_flag("--full", gc.full, "also check full-model losses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) {
      synth.seed = resolve_plain_seed(synth_seed, synth.seed, synth.seed);
      return cmd_synth(synth);
    }
    if (split_cmd->parsed()) {
      split.seed = resolve_plain_seed(split_seed, split.seed, split.seed);
      return cmd_split(split);
    }
    if (filter_cmd->parsed()) {
      filter.seed = resolve_plain_seed(filter_seed, filter.seed, filter.seed);
      return cmd_filter(filter);
    }
    if (train_cmd->parsed()) {
      const RunConfig cfg = build_config(train, train_seed, train_epochs, train_model);
      return cmd_train(train, cfg);
    }
    if (eval_cmd->parsed()) {
      eval.seed = resolve_plain_seed(eval_seed, eval.seed, eval.seed);
      return cmd_evaluate(eval);
    }
    if (dec_cmd->parsed()) {
      dec.seed = resolve_plain_seed(dec_seed, dec.seed, dec.seed);
      return cmd_decipher(dec);
    }
    if (gc_cmd->parsed()) return cmd_gradcheck(gc);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("decipher");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace decipher
