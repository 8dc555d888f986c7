#pragma once

// Neural building blocks on top of the autodiff tensor core: embeddings with
// a non-trainable PAD row, fused-gate LSTM and GRU cells, affine layers, and
// a sequence encoder. All layers are templated on the scalar type and expose
// their parameters as (name, tensor) pairs in a stable order; that order is
// the optimizer registration order and the checkpoint directory order.

#include <string>
#include <utility>
#include <vector>

#include "decipher/tensor.hpp"

namespace decipher {

template <class S>
using ParamListT = std::vector<std::pair<std::string, TensorPtrT<S>>>;

// Token embedding table. Row pad_id stays zero: lookups of PAD return a
// detached zero vector, so no gradient ever reaches that row.
template <class S>
struct EmbeddingT {
  TensorPtrT<S> table;  // [vocab x dim]
  int pad_id = 0;

  EmbeddingT() = default;
  EmbeddingT(int vocab, int dim, int pad, Rng& rng, double range)
      : table(uniform_param<S>({vocab, dim}, rng, range)), pad_id(pad) {
    for (int j = 0; j < dim; ++j) table->value[static_cast<std::size_t>(pad) * dim + j] = S(0);
  }

  int dim() const { return table->shape[1]; }
  int vocab() const { return table->shape[0]; }

  TensorPtrT<S> lookup(int id) const {
    if (id < 0 || id >= vocab())
      throw ContractError("embedding: id " + std::to_string(id) + " outside vocab " +
                          std::to_string(vocab()));
    if (id == pad_id) return zeros<S>({dim()});
    return row(table, id);
  }

  void params(const std::string& prefix, ParamListT<S>& out) const {
    out.emplace_back(prefix + ".table", table);
  }
};

// y = W x + b.
template <class S>
struct LinearT {
  TensorPtrT<S> W;  // [out x in]
  TensorPtrT<S> b;  // [out]

  LinearT() = default;
  LinearT(int out_dim, int in_dim, Rng& rng, double range)
      : W(uniform_param<S>({out_dim, in_dim}, rng, range)),
        b(uniform_param<S>({out_dim}, rng, range)) {}

  TensorPtrT<S> operator()(const TensorPtrT<S>& x) const { return add(matvec(W, x), b); }

  void params(const std::string& prefix, ParamListT<S>& out) const {
    out.emplace_back(prefix + ".W", W);
    out.emplace_back(prefix + ".b", b);
  }
};

// LSTM cell with the four gates packed row-wise as [input, forget, cell, output].
// With all weights and biases zero: c_t = 0.5 * c_prev, h_t = 0.5 * tanh(0.5 * c_prev).
template <class S>
struct LstmCellT {
  TensorPtrT<S> Wx;  // [4H x in]
  TensorPtrT<S> Uh;  // [4H x H]
  TensorPtrT<S> b;   // [4H]
  int hidden = 0;

  LstmCellT() = default;
  LstmCellT(int hidden_dim, int in_dim, Rng& rng, double range)
      : Wx(uniform_param<S>({4 * hidden_dim, in_dim}, rng, range)),
        Uh(uniform_param<S>({4 * hidden_dim, hidden_dim}, rng, range)),
        b(uniform_param<S>({4 * hidden_dim}, rng, range)),
        hidden(hidden_dim) {}

  struct State {
    TensorPtrT<S> h;
    TensorPtrT<S> c;
  };

  State initial() const { return {zeros<S>({hidden}), zeros<S>({hidden})}; }

  State step(const TensorPtrT<S>& x, const State& prev) const {
    auto gates = add(add(matvec(Wx, x), matvec(Uh, prev.h)), b);
    auto i = sigmoid(slice(gates, 0, hidden));
    auto f = sigmoid(slice(gates, hidden, hidden));
    auto g = tanh_(slice(gates, 2 * hidden, hidden));
    auto o = sigmoid(slice(gates, 3 * hidden, hidden));
    auto c = add(mul(f, prev.c), mul(i, g));
    auto h = mul(o, tanh_(c));
    return {h, c};
  }

  void params(const std::string& prefix, ParamListT<S>& out) const {
    out.emplace_back(prefix + ".Wx", Wx);
    out.emplace_back(prefix + ".Uh", Uh);
    out.emplace_back(prefix + ".b", b);
  }
};

// GRU cell with gates packed row-wise as [update, reset, candidate]; the reset
// gate multiplies the recurrent term of the candidate. With all weights and
// biases zero: e_t = 0.5 * e_prev.
template <class S>
struct GruCellT {
  TensorPtrT<S> Wx;  // [3H x in]
  TensorPtrT<S> Uh;  // [3H x H]
  TensorPtrT<S> b;   // [3H]
  int hidden = 0;

  GruCellT() = default;
  GruCellT(int hidden_dim, int in_dim, Rng& rng, double range)
      : Wx(uniform_param<S>({3 * hidden_dim, in_dim}, rng, range)),
        Uh(uniform_param<S>({3 * hidden_dim, hidden_dim}, rng, range)),
        b(uniform_param<S>({3 * hidden_dim}, rng, range)),
        hidden(hidden_dim) {}

  TensorPtrT<S> step(const TensorPtrT<S>& x, const TensorPtrT<S>& prev) const {
    auto xg = matvec(Wx, x);
    auto hg = matvec(Uh, prev);
    auto z = sigmoid(add(add(slice(xg, 0, hidden), slice(hg, 0, hidden)), slice(b, 0, hidden)));
    auto r = sigmoid(add(add(slice(xg, hidden, hidden), slice(hg, hidden, hidden)),
                         slice(b, hidden, hidden)));
    auto n = tanh_(add(add(slice(xg, 2 * hidden, hidden), mul(r, slice(hg, 2 * hidden, hidden))),
                       slice(b, 2 * hidden, hidden)));
    // e_t = (1 - z) * n + z * e_prev
    auto one_minus_z = add_scalar(neg(z), S(1));
    return add(mul(one_minus_z, n), mul(z, prev));
  }

  void params(const std::string& prefix, ParamListT<S>& out) const {
    out.emplace_back(prefix + ".Wx", Wx);
    out.emplace_back(prefix + ".Uh", Uh);
    out.emplace_back(prefix + ".b", b);
  }
};

// Runs an LSTM over embedded ids. States are produced for every position of
// the padded sequence; PAD embeds to zero and runs through the recurrence like
// any other input, so final_state is the hidden state at the last padded
// position. Callers mask PAD positions out of attention and loss themselves.
template <class S>
struct EncodedSequenceT {
  std::vector<TensorPtrT<S>> states;  // one [H] vector per position
  TensorPtrT<S> final_state;          // [H]
};

template <class S>
EncodedSequenceT<S> encode_sequence(const LstmCellT<S>& cell, const EmbeddingT<S>& emb,
                                    const std::vector<int>& ids) {
  if (ids.empty()) throw ContractError("encode_sequence: empty id sequence");
  EncodedSequenceT<S> out;
  out.states.reserve(ids.size());
  auto st = cell.initial();
  for (int id : ids) {
    st = cell.step(emb.lookup(id), st);
    out.states.push_back(st.h);
  }
  out.final_state = st.h;
  return out;
}

}  // namespace decipher
