#pragma once

// Attention sequence-to-sequence decipherment model: three LSTM encoders
// (tweet words, symbol words, symbol chars), additive attention over the
// concatenated symbol-encoder states, and a GRU decoder whose input also
// carries the encoded tweet. Templated on the scalar so the same code runs
// in 32-bit for training and 64-bit under the gradient checker.

#include <algorithm>
#include <functional>
#include <vector>

#include "decipher/corpus.hpp"
#include "decipher/layers.hpp"
#include "decipher/tensor.hpp"

namespace decipher {

struct ModelDims {
  int hidden = 64;
  int word_dim = 200;
  int char_dim = 100;
  int latent = 64;      // latent-variable models only
  int mlp_hidden = 128; // latent-variable models only
  int tweet_len = 32;
  int sym_word_len = 4;
  int sym_char_len = 16;
  int def_len = 24;
  int max_len = 50;
  int word_vocab = 0;
  int char_vocab = 0;

  int attn_span() const { return sym_word_len + sym_char_len; }
};

// Decode-time view of an example: everything the decoders may see. The
// definition deliberately has no field here, so generation paths cannot
// depend on it.
struct QueryInputs {
  std::vector<int> tweet_ids;
  std::vector<int> sym_word_ids;
  std::vector<int> sym_char_ids;
  std::vector<char> attn_keep;
};

inline QueryInputs query_of(const EncodedExample& enc) {
  return QueryInputs{enc.tweet_ids, enc.sym_word_ids, enc.sym_char_ids, enc.attn_keep};
}

template <class S>
struct EncodedInputsT {
  TensorPtrT<S> c_u;   // tweet encoding, last step
  TensorPtrT<S> c_sw;  // symbol-word encoding, last step
  TensorPtrT<S> c_sc;  // symbol-char encoding, last step
  TensorPtrT<S> h;     // [T x hidden], symbol-word states then symbol-char states
  std::vector<char> keep;
};

template <class S>
struct DecoderStateT {
  TensorPtrT<S> e;     // [hidden]
  int prev_token = Vocab::kSos;
  int t = 0;
};

template <class S>
struct DecodeOutT {
  TensorPtrT<S> logits;  // [word_vocab], pre-softmax
  TensorPtrT<S> attn;    // [T]
  DecoderStateT<S> next; // prev_token left for the caller to fill
};

template <class S>
struct Seq2SeqModelT {
  ModelDims dims;
  EmbeddingT<S> word_emb;  // shared by tweet text and definitions
  EmbeddingT<S> char_emb;
  LstmCellT<S> enc_tweet, enc_sym_words, enc_sym_chars;
  GruCellT<S> decoder;     // input: encoded tweet then combined context
  LinearT<S> attn;         // [word_dim + hidden] -> attn span
  LinearT<S> combine;      // [word_dim + hidden] -> hidden
  LinearT<S> out_proj;     // hidden -> word vocab

  Seq2SeqModelT() = default;
  Seq2SeqModelT(const ModelDims& d, Rng& rng, double range)
      : dims(d),
        word_emb(d.word_vocab, d.word_dim, Vocab::kPad, rng, range),
        char_emb(d.char_vocab, d.char_dim, Vocab::kPad, rng, range),
        enc_tweet(d.hidden, d.word_dim, rng, range),
        enc_sym_words(d.hidden, d.word_dim, rng, range),
        enc_sym_chars(d.hidden, d.char_dim, rng, range),
        decoder(d.hidden, 2 * d.hidden, rng, range),
        attn(d.attn_span(), d.word_dim + d.hidden, rng, range),
        combine(d.hidden, d.word_dim + d.hidden, rng, range),
        out_proj(d.word_vocab, d.hidden, rng, range) {}

  ParamListT<S> params() const {
    ParamListT<S> out;
    word_emb.params("word_emb", out);
    char_emb.params("char_emb", out);
    enc_tweet.params("enc_tweet", out);
    enc_sym_words.params("enc_sym_words", out);
    enc_sym_chars.params("enc_sym_chars", out);
    decoder.params("decoder", out);
    attn.params("attn", out);
    combine.params("combine", out);
    out_proj.params("out_proj", out);
    return out;
  }
};

// Truncate or zero-pad a vector to the given width (non-learnable fit; the
// surviving prefix keeps its gradient path).
template <class S>
TensorPtrT<S> fit_to_width(const TensorPtrT<S>& v, int width) {
  if (!v->is_vector())
    throw ShapeError("fit_to_width: expected vector, got " + shape_str(v->shape));
  const int n = v->shape[0];
  if (n == width) return v;
  if (n > width) return slice(v, 0, width);
  return concat(v, zeros<S>({width - n}));
}

// Runs the three encoders. h stacks symbol-word states then symbol-char
// states; the keep mask marks its non-PAD rows for attention.
template <class S, class Model>
EncodedInputsT<S> encode_inputs(const Model& m, const QueryInputs& q) {
  const auto& d = m.dims;
  if (static_cast<int>(q.tweet_ids.size()) != d.tweet_len ||
      static_cast<int>(q.sym_word_ids.size()) != d.sym_word_len ||
      static_cast<int>(q.sym_char_ids.size()) != d.sym_char_len)
    throw ShapeError("encode_inputs: sequence lengths " +
                     std::to_string(q.tweet_ids.size()) + "/" +
                     std::to_string(q.sym_word_ids.size()) + "/" +
                     std::to_string(q.sym_char_ids.size()) + " do not match configured " +
                     std::to_string(d.tweet_len) + "/" + std::to_string(d.sym_word_len) +
                     "/" + std::to_string(d.sym_char_len));
  EncodedInputsT<S> out;
  auto tweet = encode_sequence(m.enc_tweet, m.word_emb, q.tweet_ids);
  auto symw = encode_sequence(m.enc_sym_words, m.word_emb, q.sym_word_ids);
  auto symc = encode_sequence(m.enc_sym_chars, m.char_emb, q.sym_char_ids);
  out.c_u = tweet.final_state;
  out.c_sw = symw.final_state;
  out.c_sc = symc.final_state;
  std::vector<TensorPtrT<S>> rows = symw.states;
  rows.insert(rows.end(), symc.states.begin(), symc.states.end());
  out.h = stack_rows(rows);
  out.keep = q.attn_keep;
  return out;
}

// Attention weights from the previous token's embedding and the decoder
// state; PAD positions are excluded before normalization. Returns the weight
// vector and the mixed context row.
template <class S>
std::pair<TensorPtrT<S>, TensorPtrT<S>> attend(const LinearT<S>& attn_layer,
                                               const TensorPtrT<S>& d_emb,
                                               const TensorPtrT<S>& e_prev,
                                               const TensorPtrT<S>& h,
                                               const std::vector<char>& keep) {
  if (h->shape[0] != static_cast<int>(keep.size()))
    throw ShapeError("attend: " + std::to_string(keep.size()) + " mask entries vs " +
                     shape_str(h->shape));
  auto scores = attn_layer(concat(d_emb, e_prev));
  if (scores->shape[0] != h->shape[0])
    throw ShapeError("attend: score width " + shape_str(scores->shape) +
                     " vs states " + shape_str(h->shape));
  auto w = masked_softmax(scores, keep);
  return {w, vecmat(w, h)};
}

namespace detail {

// Shared decoder step: attention, ReLU-combined context, one GRU step with
// the given conditioning prefix, then vocab logits.
template <class S, class Model>
DecodeOutT<S> decode_with_prefix(const Model& m, const DecoderStateT<S>& state,
                                 const TensorPtrT<S>& prefix,
                                 const EncodedInputsT<S>& inputs) {
  if (state.t >= m.dims.max_len)
    throw ContractError("decode_step: generation budget of " +
                        std::to_string(m.dims.max_len) + " steps exhausted");
  auto d_emb = m.word_emb.lookup(state.prev_token);
  auto [w, a] = attend(m.attn, d_emb, state.e, inputs.h, inputs.keep);
  auto b = relu(m.combine(concat(d_emb, a)));
  DecodeOutT<S> out;
  out.next.e = m.decoder.step(concat(prefix, b), state.e);
  out.next.prev_token = -1;
  out.next.t = state.t + 1;
  out.attn = w;
  out.logits = m.out_proj(out.next.e);
  return out;
}

}  // namespace detail

template <class S>
DecoderStateT<S> initial_decoder_state(const Seq2SeqModelT<S>& m,
                                       const EncodedInputsT<S>& inputs) {
  return DecoderStateT<S>{fit_to_width(inputs.c_u, m.dims.hidden), Vocab::kSos, 0};
}

template <class S>
DecodeOutT<S> decode_step(const Seq2SeqModelT<S>& m, const DecoderStateT<S>& state,
                          const EncodedInputsT<S>& inputs) {
  return detail::decode_with_prefix(m, state, inputs.c_u, inputs);
}

// Distribution form of decode_step.
template <class S>
std::pair<TensorPtrT<S>, DecoderStateT<S>> decode_step_probs(const Seq2SeqModelT<S>& m,
                                                             const DecoderStateT<S>& state,
                                                             const EncodedInputsT<S>& inputs) {
  auto out = decode_step(m, state, inputs);
  return {softmax(out.logits), out.next};
}

template <class S>
int argmax_token(const TensorPtrT<S>& logits) {
  return static_cast<int>(std::max_element(logits->value.begin(), logits->value.end()) -
                          logits->value.begin());
}

// Teacher-forced or self-fed training loss: sum of per-token negative log
// likelihood over the gold sequence (which ends in EOS). Under self-feeding
// the loop also stops once the model emits EOS, after scoring that step.
template <class S>
TensorPtrT<S> seq2seq_example_loss(const Seq2SeqModelT<S>& m, const EncodedExample& enc,
                                   bool teacher) {
  auto inputs = encode_inputs<S>(m, query_of(enc));
  auto state = initial_decoder_state(m, inputs);
  TensorPtrT<S> loss = scalar_tensor<S>(S(0));
  for (int gold : enc.def_ids) {
    auto out = decode_step(m, state, inputs);
    loss = add(loss, nll_from_logits(out.logits, gold));
    const int generated = argmax_token(out.logits);
    state = out.next;
    state.prev_token = teacher ? gold : generated;
    if (!teacher && generated == Vocab::kEos) break;
  }
  return loss;
}

// Greedy decoding: argmax token per step, stop at EOS or the length budget;
// SOS/EOS are not part of the returned sequence.
template <class S>
std::vector<int> greedy_decode(const Seq2SeqModelT<S>& m, const QueryInputs& q) {
  auto inputs = encode_inputs<S>(m, q);
  auto state = initial_decoder_state(m, inputs);
  std::vector<int> tokens;
  while (state.t < m.dims.max_len) {
    auto out = decode_step(m, state, inputs);
    const int tok = argmax_token(out.logits);
    if (tok == Vocab::kEos) break;
    tokens.push_back(tok);
    state = out.next;
    state.prev_token = tok;
  }
  return tokens;
}

using Seq2SeqModel = Seq2SeqModelT<float>;

struct TrainLog {
  std::vector<double> epoch_losses;  // mean per-example loss
  int epochs_run = 0;
};

// Called after each epoch with (epoch index, mean loss); returning true stops
// training early.
using EpochHook = std::function<bool(int, double)>;

struct RunConfig;

// Per-example Adam updates in corpus order reshuffled each epoch from the
// config seed. Non-finite loss raises DataError.
TrainLog train_seq2seq(Seq2SeqModel& model, const std::vector<EncodedExample>& data,
                       const RunConfig& cfg, const EpochHook& hook = nullptr);

}  // namespace decipher
