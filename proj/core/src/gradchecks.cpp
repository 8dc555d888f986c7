#include "decipher/gradchecks.hpp"

#include "decipher/variational.hpp"

namespace decipher {

namespace {

ModelDims mini_dims() {
  ModelDims d;
  d.hidden = 8;
  d.word_dim = 4;
  d.char_dim = 4;
  d.latent = 4;
  d.mlp_hidden = 8;
  d.tweet_len = 3;
  d.sym_word_len = 2;
  d.sym_char_len = 4;
  d.def_len = 3;
  d.max_len = 8;
  d.word_vocab = 12;
  d.char_vocab = 12;
  return d;
}

EncodedExample mini_example() {
  EncodedExample enc;
  enc.tweet_ids = {4, 5, 6};
  enc.sym_word_ids = {7, 0};
  enc.sym_char_ids = {8, 9, 10, 0};
  enc.def_ids = {5, 9, Vocab::kEos};
  enc.def_enc_ids = {5, 9, 0};
  enc.attn_keep = {1, 0, 1, 1, 1, 0};
  return enc;
}

NamedParams named(const ParamListT<double>& params) {
  return NamedParams(params.begin(), params.end());
}

GradCheckReport check_linear(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 1));
  LinearT<double> lin(5, 4, rng, 0.5);
  auto x = uniform_param<double>({4}, rng, 0.5);
  NamedParams params{{"W", lin.W}, {"b", lin.b}, {"x", x}};
  return grad_check("linear_layer", params,
                    [&] {
                      auto y = lin(x);
                      return sum(mul(y, y));
                    },
                    tol);
}

GradCheckReport check_lstm(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 2));
  LstmCellT<double> cell(6, 5, rng, 0.5);
  auto x = uniform_param<double>({5}, rng, 0.5);
  auto h0 = uniform_param<double>({6}, rng, 0.5);
  auto c0 = uniform_param<double>({6}, rng, 0.5);
  NamedParams params{{"Wx", cell.Wx}, {"Uh", cell.Uh}, {"b", cell.b},
                     {"x", x},        {"h0", h0},      {"c0", c0}};
  return grad_check("lstm_cell", params,
                    [&] {
                      auto st = cell.step(x, {h0, c0});
                      return add(sum(mul(st.h, st.h)), sum(mul(st.c, st.c)));
                    },
                    tol);
}

GradCheckReport check_gru(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 3));
  GruCellT<double> cell(6, 5, rng, 0.5);
  auto x = uniform_param<double>({5}, rng, 0.5);
  auto e0 = uniform_param<double>({6}, rng, 0.5);
  NamedParams params{{"Wx", cell.Wx}, {"Uh", cell.Uh}, {"b", cell.b}, {"x", x}, {"e0", e0}};
  return grad_check("gru_cell", params,
                    [&] {
                      auto e = cell.step(x, e0);
                      return sum(mul(e, e));
                    },
                    tol);
}

GradCheckReport check_attn_decode(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 4));
  const auto d = mini_dims();
  Seq2SeqModelT<double> m(d, rng, 0.3);
  EncodedInputsT<double> inputs;
  inputs.c_u = uniform_param<double>({d.hidden}, rng, 0.5);
  inputs.h = uniform_param<double>({d.attn_span(), d.hidden}, rng, 0.5);
  inputs.keep = {1, 0, 1, 1, 1, 0};
  auto e_prev = uniform_param<double>({d.hidden}, rng, 0.5);
  NamedParams params{{"word_emb", m.word_emb.table},
                     {"attn.W", m.attn.W},
                     {"attn.b", m.attn.b},
                     {"combine.W", m.combine.W},
                     {"combine.b", m.combine.b},
                     {"decoder.Wx", m.decoder.Wx},
                     {"decoder.Uh", m.decoder.Uh},
                     {"decoder.b", m.decoder.b},
                     {"out_proj.W", m.out_proj.W},
                     {"out_proj.b", m.out_proj.b},
                     {"c_u", inputs.c_u},
                     {"h", inputs.h},
                     {"e_prev", e_prev}};
  return grad_check("attention_decode_step", params,
                    [&, e_prev] {
                      DecoderStateT<double> state{e_prev, 5, 0};
                      auto out = decode_step(m, state, inputs);
                      return nll_from_logits(out.logits, 7);
                    },
                    tol);
}

GradCheckReport check_latent_kl(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 5));
  const int x_dim = 8, c_dim = 24, z_dim = 4, mlp = 8;
  GaussHeadT<double> post(x_dim + c_dim, mlp, z_dim, rng, 0.5);
  GaussHeadT<double> pri(c_dim, mlp, z_dim, rng, 0.5);
  auto x = uniform_param<double>({x_dim}, rng, 0.5);
  auto c = uniform_param<double>({c_dim}, rng, 0.5);
  NamedParams params{{"x", x}, {"c", c}};
  post.params("posterior", params);
  pri.params("prior", params);
  const std::vector<double> noise(z_dim, 0.3);
  return grad_check("latent_gaussian_kl", params,
                    [&] {
                      auto q = post(concat(x, c));
                      auto r = pri(c);
                      auto z = reparameterize(q, noise);
                      return add(kl_diag_gauss(q, r), sum(mul(z, z)));
                    },
                    tol);
}

GradCheckReport check_latent_decode(std::uint64_t seed, double tol) {
  Rng rng(Rng::derive(seed, 6));
  const auto d = mini_dims();
  VdModelT<double> m(d, rng, 0.3);
  EncodedInputsT<double> inputs;
  inputs.c_u = uniform_param<double>({d.hidden}, rng, 0.5);
  inputs.h = uniform_param<double>({d.attn_span(), d.hidden}, rng, 0.5);
  inputs.keep = {1, 0, 1, 1, 1, 0};
  auto z = uniform_param<double>({d.latent}, rng, 0.5);
  auto c = uniform_param<double>({3 * d.hidden}, rng, 0.5);
  auto e_prev = uniform_param<double>({d.hidden}, rng, 0.5);
  NamedParams params{{"word_emb", m.word_emb.table},
                     {"attn.W", m.attn.W},
                     {"attn.b", m.attn.b},
                     {"combine.W", m.combine.W},
                     {"combine.b", m.combine.b},
                     {"decoder.Wx", m.decoder.Wx},
                     {"decoder.Uh", m.decoder.Uh},
                     {"decoder.b", m.decoder.b},
                     {"out_proj.W", m.out_proj.W},
                     {"out_proj.b", m.out_proj.b},
                     {"z", z},
                     {"c", c},
                     {"e_prev", e_prev}};
  return grad_check("latent_decode_step", params,
                    [&, e_prev] {
                      DecoderStateT<double> state{e_prev, 5, 0};
                      auto out = vd_decode_step(m, state, z, c, inputs);
                      return nll_from_logits(out.logits, 7);
                    },
                    tol);
}

}  // namespace

std::vector<GradCheckReport> gradcheck_suite(std::uint64_t seed, double tolerance) {
  return {check_linear(seed, tolerance),      check_lstm(seed, tolerance),
          check_gru(seed, tolerance),         check_attn_decode(seed, tolerance),
          check_latent_kl(seed, tolerance),   check_latent_decode(seed, tolerance)};
}

std::vector<GradCheckReport> gradcheck_end_to_end(std::uint64_t seed, double tolerance) {
  const auto d = mini_dims();
  const auto enc = mini_example();
  std::vector<GradCheckReport> reports;
  {
    Rng rng(Rng::derive(seed, 7));
    Seq2SeqModelT<double> m(d, rng, 0.3);
    reports.push_back(grad_check("attention_model_full", named(m.params()),
                                 [&] { return seq2seq_example_loss(m, enc, true); },
                                 tolerance));
  }
  {
    Rng rng(Rng::derive(seed, 8));
    VdModelT<double> m(d, rng, 0.3);
    const std::vector<double> noise(d.latent, 0.25);
    reports.push_back(grad_check("latent_model_full", named(m.params()),
                                 [&] {
                                   auto parts = vd_example_loss(m, enc, true, noise);
                                   return add(parts.rec, parts.kl);
                                 },
                                 tolerance));
  }
  return reports;
}

}  // namespace decipher
