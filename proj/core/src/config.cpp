#include "decipher/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace decipher {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (in.fail() || !in.eof())
    throw ContractError("config: bad value for " + key + ": \"" + value + "\"");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  auto num_int = [](int RunConfig::*field) {
    return [field](RunConfig& c, const std::string& v) {
      c.*field = parse_number<int>("int", v);
    };
  };
  auto num_real = [](double RunConfig::*field) {
    return [field](RunConfig& c, const std::string& v) {
      c.*field = parse_number<double>("real", v);
    };
  };
  static const std::map<std::string, Setter> map = {
      {"model", [](RunConfig& c, const std::string& v) { c.model = v; }},
      {"hidden_size", num_int(&RunConfig::hidden_size)},
      {"word_emb", num_int(&RunConfig::word_emb)},
      {"char_emb", num_int(&RunConfig::char_emb)},
      {"latent_dim", num_int(&RunConfig::latent_dim)},
      {"mlp_hidden", num_int(&RunConfig::mlp_hidden)},
      {"max_len", num_int(&RunConfig::max_len)},
      {"epochs", num_int(&RunConfig::epochs)},
      {"lr", num_real(&RunConfig::lr)},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         c.seed = parse_number<std::uint64_t>("seed", v);
       }},
      {"feeding", [](RunConfig& c, const std::string& v) { c.feeding = v; }},
      {"tweet_words", num_int(&RunConfig::tweet_words)},
      {"symbol_words", num_int(&RunConfig::symbol_words)},
      {"symbol_chars", num_int(&RunConfig::symbol_chars)},
      {"def_words", num_int(&RunConfig::def_words)},
      {"kl_warmup_epochs", num_int(&RunConfig::kl_warmup_epochs)},
      {"rouge_beta", num_real(&RunConfig::rouge_beta)},
      {"min_count", num_int(&RunConfig::min_count)},
      {"max_grad_norm", num_real(&RunConfig::max_grad_norm)},
      {"init_range", num_real(&RunConfig::init_range)},
  };
  return map;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value,
             const std::string& where) {
  auto it = setters().find(key);
  if (it == setters().end())
    throw ContractError("config: unknown key \"" + key + "\"" + where);
  try {
    it->second(cfg, value);
  } catch (const ContractError&) {
    throw ContractError("config: bad value for " + key + ": \"" + value + "\"" + where);
  }
}

}  // namespace

void apply_profile(RunConfig& cfg, const std::string& name) {
  if (name == "default" || name == "full") {
    cfg = RunConfig{};
    return;
  }
  if (name == "desk") {
    cfg = RunConfig{};
    cfg.hidden_size = 32;
    cfg.word_emb = 16;
    cfg.char_emb = 16;
    cfg.latent_dim = 32;
    cfg.mlp_hidden = 64;
    cfg.max_len = 16;
    cfg.epochs = 200;
    cfg.lr = 3e-3;
    cfg.tweet_words = 12;
    cfg.symbol_words = 4;
    cfg.symbol_chars = 12;
    cfg.def_words = 10;
    return;
  }
  throw ContractError("config: unknown profile \"" + name + "\" (want default|desk)");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("config: cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ContractError("config: " + path + ":" + std::to_string(line_no) +
                          ": expected key = value");
    set_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
            " (" + path + ":" + std::to_string(line_no) + ")");
  }
}

void apply_override(RunConfig& cfg, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos)
    throw ContractError("config: override must be key=value, got \"" + key_value + "\"");
  set_key(cfg, trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)), "");
}

void validate(const RunConfig& cfg) {
  if (cfg.model != "seq2seq" && cfg.model != "vd")
    throw ContractError("config: model must be seq2seq|vd, got \"" + cfg.model + "\"");
  if (cfg.feeding != "greedy" && cfg.feeding != "teacher")
    throw ContractError("config: feeding must be greedy|teacher, got \"" + cfg.feeding + "\"");
  for (auto [name, v] : std::initializer_list<std::pair<const char*, int>>{
           {"hidden_size", cfg.hidden_size},
           {"word_emb", cfg.word_emb},
           {"char_emb", cfg.char_emb},
           {"latent_dim", cfg.latent_dim},
           {"mlp_hidden", cfg.mlp_hidden},
           {"max_len", cfg.max_len},
           {"epochs", cfg.epochs},
           {"tweet_words", cfg.tweet_words},
           {"symbol_words", cfg.symbol_words},
           {"symbol_chars", cfg.symbol_chars},
           {"def_words", cfg.def_words},
           {"min_count", cfg.min_count}})
    if (v < 1) throw ContractError("config: " + std::string(name) + " must be >= 1");
  if (!(cfg.lr > 0)) throw ContractError("config: lr must be positive");
  if (!(cfg.init_range > 0)) throw ContractError("config: init_range must be positive");
  if (cfg.kl_warmup_epochs < 0)
    throw ContractError("config: kl_warmup_epochs must be >= 0");
  if (!(cfg.rouge_beta > 0)) throw ContractError("config: rouge_beta must be positive");
}

std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& cfg) {
  auto real = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {
      {"model", cfg.model},
      {"hidden_size", std::to_string(cfg.hidden_size)},
      {"word_emb", std::to_string(cfg.word_emb)},
      {"char_emb", std::to_string(cfg.char_emb)},
      {"latent_dim", std::to_string(cfg.latent_dim)},
      {"mlp_hidden", std::to_string(cfg.mlp_hidden)},
      {"max_len", std::to_string(cfg.max_len)},
      {"epochs", std::to_string(cfg.epochs)},
      {"lr", real(cfg.lr)},
      {"seed", std::to_string(cfg.seed)},
      {"feeding", cfg.feeding},
      {"tweet_words", std::to_string(cfg.tweet_words)},
      {"symbol_words", std::to_string(cfg.symbol_words)},
      {"symbol_chars", std::to_string(cfg.symbol_chars)},
      {"def_words", std::to_string(cfg.def_words)},
      {"kl_warmup_epochs", std::to_string(cfg.kl_warmup_epochs)},
      {"rouge_beta", real(cfg.rouge_beta)},
      {"min_count", std::to_string(cfg.min_count)},
      {"max_grad_norm", real(cfg.max_grad_norm)},
      {"init_range", real(cfg.init_range)},
  };
}

}  // namespace decipher
