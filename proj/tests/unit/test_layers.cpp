#include <cmath>
#include <vector>

#include "decipher/layers.hpp"
#include "doctest.h"

using namespace decipher;

namespace {

template <class S>
void zero_fill(const TensorPtrT<S>& t) {
  std::fill(t->value.begin(), t->value.end(), S(0));
}

}  // namespace

TEST_CASE("embedding returns the table row and keeps PAD silent") {
  Rng rng(1);
  EmbeddingT<double> emb(6, 3, 0, rng, 0.5);

  auto pad = emb.lookup(0);
  for (double v : pad->value) CHECK(v == 0.0);

  auto r2 = emb.lookup(2);
  for (int j = 0; j < 3; ++j) CHECK(r2->value[j] == emb.table->value[2 * 3 + j]);

  CHECK_THROWS_AS(emb.lookup(6), ContractError);
  CHECK_THROWS_AS(emb.lookup(-1), ContractError);

  // Gradient through a PAD lookup must not touch the table.
  emb.table->zero_grad();
  {
    GraphT<double> g;
    auto y = sum(add(emb.lookup(0), emb.lookup(2)));
    g.backward(y);
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(emb.table->grad[0 * 3 + j] == 0.0);
    CHECK(emb.table->grad[2 * 3 + j] == 1.0);
  }
}

TEST_CASE("zero-weight lstm follows its closed form") {
  Rng rng(1);
  LstmCellT<double> cell(4, 3, rng, 0.1);
  zero_fill(cell.Wx);
  zero_fill(cell.Uh);
  zero_fill(cell.b);

  LstmCellT<double>::State prev;
  prev.h = make_tensor<double>({4}, {0.3, -0.2, 0.8, 0.0});
  prev.c = make_tensor<double>({4}, {1.0, -0.5, 0.25, 2.0});
  auto x = make_tensor<double>({3}, {5.0, -5.0, 1.0});

  auto st = cell.step(x, prev);
  for (int i = 0; i < 4; ++i) {
    const double c_expect = 0.5 * prev.c->value[i];
    CHECK(st.c->value[i] == doctest::Approx(c_expect).epsilon(1e-6));
    CHECK(st.h->value[i] == doctest::Approx(0.5 * std::tanh(c_expect)).epsilon(1e-6));
  }
}

TEST_CASE("zero-weight gru halves its state") {
  Rng rng(1);
  GruCellT<double> cell(4, 3, rng, 0.1);
  zero_fill(cell.Wx);
  zero_fill(cell.Uh);
  zero_fill(cell.b);

  auto prev = make_tensor<double>({4}, {1.0, -2.0, 0.5, 0.0});
  auto x = make_tensor<double>({3}, {9.0, 9.0, 9.0});
  auto e = cell.step(x, prev);
  for (int i = 0; i < 4; ++i)
    CHECK(e->value[i] == doctest::Approx(0.5 * prev->value[i]).epsilon(1e-6));
}

TEST_CASE("lstm cell gradients check out") {
  Rng rng(11);
  LstmCellT<double> cell(5, 4, rng, 0.4);
  auto x = uniform_param<double>({4}, rng, 0.8);
  auto loss = [&] {
    auto st = cell.step(x, cell.initial());
    auto st2 = cell.step(x, st);
    return add(sum(mul(st2.h, st2.h)), sum(mul(st2.c, st2.c)));
  };
  NamedParams params{{"Wx", cell.Wx}, {"Uh", cell.Uh}, {"b", cell.b}, {"x", x}};
  auto rep = grad_check("lstm", params, loss, 1e-5);
  INFO(rep.message);
  CHECK(rep.ok);
}

TEST_CASE("gru cell gradients check out") {
  Rng rng(12);
  GruCellT<double> cell(5, 4, rng, 0.4);
  auto x = uniform_param<double>({4}, rng, 0.8);
  auto h0 = uniform_param<double>({5}, rng, 0.8);
  auto loss = [&] {
    auto e1 = cell.step(x, h0);
    auto e2 = cell.step(x, e1);
    return sum(mul(e2, e2));
  };
  NamedParams params{{"Wx", cell.Wx}, {"Uh", cell.Uh}, {"b", cell.b}, {"h0", h0}};
  auto rep = grad_check("gru", params, loss, 1e-5);
  INFO(rep.message);
  CHECK(rep.ok);
}

TEST_CASE("encode_sequence is causal and runs through padding") {
  Rng rng(5);
  LstmCellT<double> cell(4, 3, rng, 0.3);
  EmbeddingT<double> emb(8, 3, 0, rng, 0.3);

  std::vector<int> ids{2, 5, 7, 0, 0};
  auto enc = encode_sequence(cell, emb, ids);
  REQUIRE(enc.states.size() == ids.size());

  // final_state belongs to the last padded position, not the last real token
  for (int i = 0; i < 4; ++i)
    CHECK(enc.final_state->value[i] == enc.states.back()->value[i]);

  // prefix property: the first t states only depend on the first t ids
  std::vector<int> altered{2, 5, 7, 0, 6};
  auto enc2 = encode_sequence(cell, emb, altered);
  for (std::size_t t = 0; t < 4; ++t)
    for (int i = 0; i < 4; ++i)
      CHECK(enc2.states[t]->value[i] == doctest::Approx(enc.states[t]->value[i]));
  bool last_differs = false;
  for (int i = 0; i < 4; ++i)
    if (enc2.states[4]->value[i] != enc.states[4]->value[i]) last_differs = true;
  CHECK(last_differs);

  CHECK_THROWS_AS(encode_sequence(cell, emb, std::vector<int>{}), ContractError);
}

TEST_CASE("linear layer computes W x + b") {
  Rng rng(2);
  LinearT<double> lin(2, 3, rng, 0.5);
  lin.W->value = {1, 0, 0, 0, 1, 0};
  lin.b->value = {10, 20};
  auto x = make_tensor<double>({3}, {1.0, 2.0, 3.0});
  auto y = lin(x);
  CHECK(y->value[0] == doctest::Approx(11.0));
  CHECK(y->value[1] == doctest::Approx(22.0));
}
