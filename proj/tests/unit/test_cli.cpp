#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "decipher/cli.hpp"
#include "doctest.h"

using namespace decipher;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / "decipher_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string read_bytes(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int count_lines(const std::string& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({"train", "--train", "no_such_file.jsonl"}) == 2);
  CHECK(run_cli({"synth", "--no-such-flag"}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({}) == 2);
  TempDir td;
  CHECK(run_cli({"synth", "--output", td.path("c.jsonl"), "--families", "3", "--forms", "2",
                 "--templates", "2", "--set-bogus"}) == 2);
}

TEST_CASE("synth then split produce audited partitions") {
  TempDir td;
  REQUIRE(run_cli({"synth", "--families", "12", "--forms", "3", "--templates", "2",
                   "--seed", "9", "--output", td.path("c.jsonl")}) == 0);
  CHECK(count_lines(td.path("c.jsonl")) == 12 * 3 * 2);

  REQUIRE(run_cli({"split", "--input", td.path("c.jsonl"), "--outdir", td.path("sp"),
                   "--seed", "9"}) == 0);
  CHECK(fs::exists(td.path("sp/train.jsonl")));
  CHECK(fs::exists(td.path("sp/test_seen.jsonl")));
  CHECK(fs::exists(td.path("sp/test_unseen.jsonl")));
  CHECK(fs::exists(td.path("sp/audit.json")));
  const auto audit = read_bytes(td.path("sp/audit.json"));
  CHECK(audit.find("\"ok\": true") != std::string::npos);
  const int total = count_lines(td.path("sp/train.jsonl")) +
                    count_lines(td.path("sp/test_seen.jsonl")) +
                    count_lines(td.path("sp/test_unseen.jsonl"));
  CHECK(total == 12 * 3 * 2);
}

TEST_CASE("filter trains on labels and keeps positive tweets") {
  TempDir td;
  {
    std::ofstream lab(td.path("labeled.jsonl"));
    for (int i = 0; i < 8; ++i) {
      lab << R"({"tweet":"smash the vermin crowd )" << i
          << R"(","symbol":"s","definition":"d","label":"hate"})" << "\n";
      lab << R"({"tweet":"nice flowers and tea )" << i
          << R"(","symbol":"s","definition":"d","label":"none"})" << "\n";
    }
    std::ofstream in(td.path("in.jsonl"));
    in << R"({"tweet":"smash the vermin","symbol":"s","definition":"d"})" << "\n";
    in << R"({"tweet":"nice tea today","symbol":"s","definition":"d"})" << "\n";
  }
  REQUIRE(run_cli({"filter", "--labeled", td.path("labeled.jsonl"), "--input",
                   td.path("in.jsonl"), "--output", td.path("out.jsonl"), "--seed", "4"}) == 0);
  CHECK(count_lines(td.path("out.jsonl")) == 1);
  const auto kept = read_bytes(td.path("out.jsonl"));
  CHECK(kept.find("vermin") != std::string::npos);

  // labeled examples without labels are a data error, not a usage error
  {
    std::ofstream lab(td.path("unlabeled.jsonl"));
    lab << R"({"tweet":"x","symbol":"s","definition":"d"})" << "\n";
  }
  CHECK(run_cli({"filter", "--labeled", td.path("unlabeled.jsonl"), "--input",
                 td.path("in.jsonl"), "--output", td.path("o2.jsonl")}) == 1);
}

TEST_CASE("train/evaluate/decipher pipeline runs and is seed-deterministic") {
  TempDir td;
  REQUIRE(run_cli({"synth", "--families", "6", "--forms", "2", "--templates", "2",
                   "--seed", "3", "--output", td.path("c.jsonl")}) == 0);

  const std::vector<std::string> base{
      "train",        "--train", td.path("c.jsonl"), "--model", "seq2seq",
      "--profile",    "desk",    "--epochs",         "2",       "--seed",
      "11",           "--checkpoint"};
  auto args1 = base;
  args1.push_back(td.path("m1.hsdc"));
  auto args2 = base;
  args2.push_back(td.path("m2.hsdc"));
  REQUIRE(run_cli(args1) == 0);
  REQUIRE(run_cli(args2) == 0);
  CHECK(read_bytes(td.path("m1.hsdc")) == read_bytes(td.path("m2.hsdc")));
  CHECK(fs::exists(td.path("m1.hsdc.manifest.json")));

  REQUIRE(run_cli({"evaluate", "--checkpoint", td.path("m1.hsdc"), "--split",
                   td.path("c.jsonl"), "--report", td.path("r1.json")}) == 0);
  REQUIRE(run_cli({"evaluate", "--checkpoint", td.path("m1.hsdc"), "--split",
                   td.path("c.jsonl"), "--report", td.path("r2.json")}) == 0);
  CHECK(read_bytes(td.path("r1.json")) == read_bytes(td.path("r2.json")));
  CHECK(read_bytes(td.path("r1.json")).find("\"per_example\"") != std::string::npos);

  CHECK(run_cli({"decipher", "--checkpoint", td.path("m1.hsdc"), "--tweet",
                 "some context here", "--symbol", "zz9"}) == 0);
}

TEST_CASE("vd training works through the cli") {
  TempDir td;
  REQUIRE(run_cli({"synth", "--families", "4", "--forms", "2", "--templates", "2",
                   "--seed", "8", "--output", td.path("c.jsonl")}) == 0);
  REQUIRE(run_cli({"train", "--train", td.path("c.jsonl"), "--model", "vd", "--profile",
                   "desk", "--epochs", "2", "--set", "kl_warmup_epochs=5", "--seed", "1",
                   "--checkpoint", td.path("v.hsdc")}) == 0);
  CHECK(run_cli({"evaluate", "--checkpoint", td.path("v.hsdc"), "--split", td.path("c.jsonl"),
                 "--report", td.path("vr.json")}) == 0);
}

TEST_CASE("environment seed applies when no flag overrides it") {
  TempDir td;
  REQUIRE(run_cli({"synth", "--families", "4", "--forms", "2", "--templates", "2",
                   "--seed", "2", "--output", td.path("c.jsonl")}) == 0);

  setenv("DECIPHER_SEED", "123", 1);
  const int rc_env = run_cli({"train", "--train", td.path("c.jsonl"), "--profile", "desk",
                              "--epochs", "1", "--checkpoint", td.path("env.hsdc")});
  unsetenv("DECIPHER_SEED");
  REQUIRE(rc_env == 0);

  REQUIRE(run_cli({"train", "--train", td.path("c.jsonl"), "--profile", "desk", "--epochs",
                   "1", "--seed", "123", "--checkpoint", td.path("flag.hsdc")}) == 0);
  CHECK(read_bytes(td.path("env.hsdc")) == read_bytes(td.path("flag.hsdc")));

  setenv("DECIPHER_SEED", "not-a-number", 1);
  const int rc_bad = run_cli({"train", "--train", td.path("c.jsonl"), "--profile", "desk",
                              "--epochs", "1", "--checkpoint", td.path("bad.hsdc")});
  unsetenv("DECIPHER_SEED");
  CHECK(rc_bad == 2);
}

TEST_CASE("config file and overrides reach the model") {
  TempDir td;
  REQUIRE(run_cli({"synth", "--families", "4", "--forms", "2", "--templates", "2",
                   "--seed", "2", "--output", td.path("c.jsonl")}) == 0);
  {
    std::ofstream cfg(td.path("run.cfg"));
    cfg << "# tiny run\n";
    cfg << "hidden_size = 16\n";
    cfg << "word_emb = 8\n";
    cfg << "char_emb = 8\n";
    cfg << "epochs = 1\n";
  }
  REQUIRE(run_cli({"train", "--train", td.path("c.jsonl"), "--config", td.path("run.cfg"),
                   "--checkpoint", td.path("cfg.hsdc")}) == 0);
  const auto manifest = read_bytes(td.path("cfg.hsdc.manifest.json"));
  CHECK(manifest.find("\"hidden_size\": \"16\"") != std::string::npos);

  // unknown config key is a usage error
  {
    std::ofstream cfg(td.path("bad.cfg"));
    cfg << "no_such_knob = 3\n";
  }
  CHECK(run_cli({"train", "--train", td.path("c.jsonl"), "--config", td.path("bad.cfg"),
                 "--checkpoint", td.path("x.hsdc")}) == 2);
  CHECK(run_cli({"train", "--train", td.path("c.jsonl"), "--set", "hidden_size=zero",
                 "--checkpoint", td.path("y.hsdc")}) == 2);
}

TEST_CASE("malformed corpus lines are a domain failure") {
  TempDir td;
  {
    std::ofstream out(td.path("broken.jsonl"));
    out << R"({"tweet":"ok","symbol":"s","definition":"d"})" << "\n";
    out << "this is not json\n";
  }
  CHECK(run_cli({"train", "--train", td.path("broken.jsonl"), "--profile", "desk",
                 "--epochs", "1", "--checkpoint", td.path("m.hsdc")}) == 1);
}
