// Microbenchmarks for the hot paths: tape-recorded matmul, recurrent cell
// steps, a full attention decode step, and corpus BLEU. Not registered with
// ctest; run the binary directly.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "decipher/metrics.hpp"
#include "decipher/seq2seq.hpp"

namespace {

using namespace decipher;

void bench_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  auto a = uniform_param<float>({n, n}, rng, 0.1);
  auto b = uniform_param<float>({n, n}, rng, 0.1);
  for (auto _ : state) {
    GraphT<float> g;
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c->value.data());
  }
}
BENCHMARK(bench_matmul)->Arg(32)->Arg(64)->Arg(128);

void bench_lstm_step(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  Rng rng(1);
  LstmCellT<float> cell(h, h, rng, 0.08);
  auto x = uniform_param<float>({h}, rng, 0.5);
  for (auto _ : state) {
    GraphT<float> g;
    auto st = cell.step(x, cell.initial());
    benchmark::DoNotOptimize(st.h->value.data());
  }
}
BENCHMARK(bench_lstm_step)->Arg(64)->Arg(128);

void bench_decode_step(benchmark::State& state) {
  Rng rng(7);
  ModelDims dims;
  dims.hidden = 64;
  dims.word_dim = 64;
  dims.char_dim = 32;
  dims.word_vocab = 200;
  dims.char_vocab = 64;
  Seq2SeqModelT<float> m(dims, rng, 0.08);

  QueryInputs q;
  q.tweet_ids.assign(dims.tweet_len, 5);
  q.sym_word_ids.assign(dims.sym_word_len, 6);
  q.sym_char_ids.assign(dims.sym_char_len, 7);
  q.attn_keep.assign(static_cast<std::size_t>(dims.attn_span()), 1);

  for (auto _ : state) {
    GraphT<float> g;
    auto enc = encode_inputs<float>(m, q);
    auto st = initial_decoder_state(m, enc);
    auto out = decode_step(m, st, enc);
    benchmark::DoNotOptimize(out.logits->value.data());
  }
}
BENCHMARK(bench_decode_step);

void bench_corpus_bleu(benchmark::State& state) {
  std::vector<Tokens> refs, cands;
  for (int i = 0; i < 200; ++i) {
    Tokens r, c;
    for (int t = 0; t < 12; ++t) {
      r.push_back("w" + std::to_string((i + t) % 40));
      c.push_back("w" + std::to_string((i + t + (t % 3 == 0 ? 1 : 0)) % 40));
    }
    refs.push_back(r);
    cands.push_back(c);
  }
  for (auto _ : state) {
    double b = bleu4(refs, cands);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(bench_corpus_bleu);

}  // namespace

BENCHMARK_MAIN();
