#pragma once

// Conditional-VAE decipherment model. Shares the encoder/attention/decoder
// machinery of the attention seq2seq model, adds a definition encoder, a
// posterior network over (definition encoding, condition vector), a prior
// network over the condition vector alone, reparameterized sampling, and the
// reconstruction + KL training loss. At test time the posterior is replaced
// by the prior, so generation never touches the definition.

#include <vector>

#include "decipher/seq2seq.hpp"

namespace decipher {

template <class S>
struct GaussianDiagT {
  TensorPtrT<S> mu;       // [Z]
  TensorPtrT<S> log_var;  // [Z]; variance = exp(log_var) > 0 by construction
};

// One tanh hidden layer, then separate linear heads for mean and
// log-variance.
template <class S>
struct GaussHeadT {
  LinearT<S> hidden;
  LinearT<S> mu;
  LinearT<S> log_var;

  GaussHeadT() = default;
  GaussHeadT(int in_dim, int hidden_dim, int z_dim, Rng& rng, double range)
      : hidden(hidden_dim, in_dim, rng, range),
        mu(z_dim, hidden_dim, rng, range),
        log_var(z_dim, hidden_dim, rng, range) {}

  GaussianDiagT<S> operator()(const TensorPtrT<S>& x) const {
    auto h = tanh_(hidden(x));
    return {mu(h), log_var(h)};
  }

  void params(const std::string& prefix, ParamListT<S>& out) const {
    hidden.params(prefix + ".hidden", out);
    mu.params(prefix + ".mu", out);
    log_var.params(prefix + ".log_var", out);
  }
};

template <class S>
struct VdModelT {
  ModelDims dims;
  EmbeddingT<S> word_emb;
  EmbeddingT<S> char_emb;
  LstmCellT<S> enc_tweet, enc_sym_words, enc_sym_chars, enc_def;
  GruCellT<S> decoder;  // input: latent sample, condition vector, combined context
  LinearT<S> attn;
  LinearT<S> combine;
  LinearT<S> out_proj;
  GaussHeadT<S> posterior_head;  // input: definition encoding and condition vector
  GaussHeadT<S> prior_head;      // input: condition vector only

  VdModelT() = default;
  VdModelT(const ModelDims& d, Rng& rng, double range)
      : dims(d),
        word_emb(d.word_vocab, d.word_dim, Vocab::kPad, rng, range),
        char_emb(d.char_vocab, d.char_dim, Vocab::kPad, rng, range),
        enc_tweet(d.hidden, d.word_dim, rng, range),
        enc_sym_words(d.hidden, d.word_dim, rng, range),
        enc_sym_chars(d.hidden, d.char_dim, rng, range),
        enc_def(d.hidden, d.word_dim, rng, range),
        decoder(d.hidden, d.latent + 3 * d.hidden + d.hidden, rng, range),
        attn(d.attn_span(), d.word_dim + d.hidden, rng, range),
        combine(d.hidden, d.word_dim + d.hidden, rng, range),
        out_proj(d.word_vocab, d.hidden, rng, range),
        posterior_head(d.hidden + 3 * d.hidden, d.mlp_hidden, d.latent, rng, range),
        prior_head(3 * d.hidden, d.mlp_hidden, d.latent, rng, range) {}

  ParamListT<S> params() const {
    ParamListT<S> out;
    word_emb.params("word_emb", out);
    char_emb.params("char_emb", out);
    enc_tweet.params("enc_tweet", out);
    enc_sym_words.params("enc_sym_words", out);
    enc_sym_chars.params("enc_sym_chars", out);
    enc_def.params("enc_def", out);
    decoder.params("decoder", out);
    attn.params("attn", out);
    combine.params("combine", out);
    out_proj.params("out_proj", out);
    posterior_head.params("posterior", out);
    prior_head.params("prior", out);
    return out;
  }
};

// Last-step state of the definition encoder over the padded definition ids.
template <class S>
TensorPtrT<S> encode_definition(const VdModelT<S>& m, const std::vector<int>& def_enc_ids) {
  if (static_cast<int>(def_enc_ids.size()) != m.dims.def_len)
    throw ShapeError("encode_definition: got " + std::to_string(def_enc_ids.size()) +
                     " ids, configured length is " + std::to_string(m.dims.def_len));
  return encode_sequence(m.enc_def, m.word_emb, def_enc_ids).final_state;
}

// Fixed concatenation order: tweet, symbol words, symbol chars.
template <class S>
TensorPtrT<S> condition_vector(const TensorPtrT<S>& c_u, const TensorPtrT<S>& c_sw,
                               const TensorPtrT<S>& c_sc) {
  if (c_u->shape != c_sw->shape || c_u->shape != c_sc->shape)
    throw ShapeError("condition_vector: widths " + shape_str(c_u->shape) + ", " +
                     shape_str(c_sw->shape) + ", " + shape_str(c_sc->shape) +
                     " must match");
  return concat(std::vector<TensorPtrT<S>>{c_u, c_sw, c_sc});
}

template <class S>
GaussianDiagT<S> posterior(const VdModelT<S>& m, const TensorPtrT<S>& x,
                           const TensorPtrT<S>& c) {
  return m.posterior_head(concat(x, c));
}

template <class S>
GaussianDiagT<S> prior(const VdModelT<S>& m, const TensorPtrT<S>& c) {
  return m.prior_head(c);
}

// z = mu + exp(log_var / 2) * noise; the noise is a constant, so gradients
// flow to mu and log_var only.
template <class S>
TensorPtrT<S> reparameterize(const GaussianDiagT<S>& q, const std::vector<S>& noise) {
  if (static_cast<int>(noise.size()) != q.mu->shape[0])
    throw ShapeError("reparameterize: " + std::to_string(noise.size()) + " noise values vs " +
                     shape_str(q.mu->shape));
  auto eps = make_tensor<S>({static_cast<int>(noise.size())}, std::vector<S>(noise));
  return add(q.mu, mul(exp_(scale(q.log_var, S(0.5))), eps));
}

// Closed-form KL divergence between diagonal Gaussians,
// 0.5 * sum(log_var_r - log_var_q + (var_q + (mu_q - mu_r)^2) / var_r - 1).
template <class S>
TensorPtrT<S> kl_diag_gauss(const GaussianDiagT<S>& q, const GaussianDiagT<S>& r) {
  if (q.mu->shape != r.mu->shape)
    throw ShapeError("kl_diag_gauss: dims " + shape_str(q.mu->shape) + " vs " +
                     shape_str(r.mu->shape));
  auto diff = sub(q.mu, r.mu);
  auto ratio = mul(add(exp_(q.log_var), mul(diff, diff)), exp_(neg(r.log_var)));
  auto terms = add_scalar(add(sub(r.log_var, q.log_var), ratio), S(-1));
  return scale(sum(terms), S(0.5));
}

template <class S>
DecoderStateT<S> initial_decoder_state(const VdModelT<S>& m, const TensorPtrT<S>& c) {
  return DecoderStateT<S>{fit_to_width(c, m.dims.hidden), Vocab::kSos, 0};
}

template <class S>
DecodeOutT<S> vd_decode_step(const VdModelT<S>& m, const DecoderStateT<S>& state,
                             const TensorPtrT<S>& z, const TensorPtrT<S>& c,
                             const EncodedInputsT<S>& inputs) {
  return detail::decode_with_prefix(m, state, concat(z, c), inputs);
}

template <class S>
std::pair<TensorPtrT<S>, DecoderStateT<S>> vd_decode_step_probs(
    const VdModelT<S>& m, const DecoderStateT<S>& state, const TensorPtrT<S>& z,
    const TensorPtrT<S>& c, const EncodedInputsT<S>& inputs) {
  auto out = vd_decode_step(m, state, z, c, inputs);
  return {softmax(out.logits), out.next};
}

template <class S>
struct VdLossPartsT {
  TensorPtrT<S> rec;  // summed per-token cross-entropy
  TensorPtrT<S> kl;   // KL(posterior || prior)
};

// Training-path loss parts for one example: posterior sample decodes the
// definition, KL pulls posterior and prior together. The caller weights the
// KL term (warm-up) and backpropagates rec + weight * kl.
template <class S>
VdLossPartsT<S> vd_example_loss(const VdModelT<S>& m, const EncodedExample& enc,
                                bool teacher, const std::vector<S>& noise) {
  auto inputs = encode_inputs<S>(m, query_of(enc));
  auto c = condition_vector(inputs.c_u, inputs.c_sw, inputs.c_sc);
  auto x = encode_definition(m, enc.def_enc_ids);
  auto q = posterior(m, x, c);
  auto r = prior(m, c);
  VdLossPartsT<S> parts;
  parts.kl = kl_diag_gauss(q, r);
  auto z = reparameterize(q, noise);
  auto state = initial_decoder_state(m, c);
  parts.rec = scalar_tensor<S>(S(0));
  for (int gold : enc.def_ids) {
    auto out = vd_decode_step(m, state, z, c, inputs);
    parts.rec = add(parts.rec, nll_from_logits(out.logits, gold));
    const int generated = argmax_token(out.logits);
    state = out.next;
    state.prev_token = teacher ? gold : generated;
    if (!teacher && generated == Vocab::kEos) break;
  }
  return parts;
}

// Test-path decoding: z comes from the prior via the injected noise (zeros
// for deterministic output); the definition is not an input.
template <class S>
std::vector<int> vd_test_decode(const VdModelT<S>& m, const QueryInputs& qin,
                                const std::vector<S>& noise) {
  auto inputs = encode_inputs<S>(m, qin);
  auto c = condition_vector(inputs.c_u, inputs.c_sw, inputs.c_sc);
  auto r = prior(m, c);
  auto z = reparameterize(r, noise);
  auto state = initial_decoder_state(m, c);
  std::vector<int> tokens;
  while (state.t < m.dims.max_len) {
    auto out = vd_decode_step(m, state, z, c, inputs);
    const int tok = argmax_token(out.logits);
    if (tok == Vocab::kEos) break;
    tokens.push_back(tok);
    state = out.next;
    state.prev_token = tok;
  }
  return tokens;
}

using VdModel = VdModelT<float>;

struct VdTrainLog {
  std::vector<double> epoch_losses;  // mean rec + kl (unweighted)
  std::vector<double> epoch_rec;
  std::vector<double> epoch_kl;
  int epochs_run = 0;
};

// Linear KL warm-up weight for a 0-based epoch index; 1 when warm-up is off.
inline double kl_weight(int epoch, int warmup_epochs) {
  if (warmup_epochs <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch + 1) / warmup_epochs);
}

VdTrainLog train_vd(VdModel& model, const std::vector<EncodedExample>& data,
                    const RunConfig& cfg, const EpochHook& hook = nullptr);

}  // namespace decipher
