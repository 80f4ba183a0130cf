#pragma once

#include <string>
#include <utility>

#include "dgm/params.hpp"
#include "dgm/tape.hpp"

namespace dgm {

// Gate maps for one LSTM cell; each gate has an input map and a hidden map.
template <typename Real>
struct LstmParams {
  LinearMap<Real> wi, ui;  // input gate
  LinearMap<Real> wf, uf;  // forget gate
  LinearMap<Real> wo, uo;  // output gate
  LinearMap<Real> wc, uc;  // candidate

  static LstmParams make(ParameterStore<Real>& store, const std::string& prefix, int input_dim,
                         int hidden_dim, Rng& rng) {
    LstmParams p;
    p.wi = store.add_linear(prefix + ".wi", hidden_dim, input_dim, rng);
    p.ui = store.add_linear(prefix + ".ui", hidden_dim, hidden_dim, rng);
    p.wf = store.add_linear(prefix + ".wf", hidden_dim, input_dim, rng);
    p.uf = store.add_linear(prefix + ".uf", hidden_dim, hidden_dim, rng);
    p.wo = store.add_linear(prefix + ".wo", hidden_dim, input_dim, rng);
    p.uo = store.add_linear(prefix + ".uo", hidden_dim, hidden_dim, rng);
    p.wc = store.add_linear(prefix + ".wc", hidden_dim, input_dim, rng);
    p.uc = store.add_linear(prefix + ".uc", hidden_dim, hidden_dim, rng);
    return p;
  }

  int hidden_dim() const { return wi.out_dim(); }
  int input_dim() const { return wi.in_dim(); }
};

template <typename Real>
struct LstmState {
  typename Tape<Real>::Id h;
  typename Tape<Real>::Id c;
};

// Standard gated recurrence:
//   i = sig(Wi x + Ui h), f = sig(Wf x + Uf h), o = sig(Wo x + Uo h)
//   cand = tanh(Wc x + Uc h); c' = f.c + i.cand; h' = o.tanh(c')
template <typename Real>
LstmState<Real> lstm_cell_step(Tape<Real>& tape, const LstmParams<Real>& p,
                               typename Tape<Real>::Id x, const LstmState<Real>& s) {
  using Id = typename Tape<Real>::Id;
  Id i = tape.sigmoid(tape.add(tape.linear(p.wi, x), tape.linear(p.ui, s.h)));
  Id f = tape.sigmoid(tape.add(tape.linear(p.wf, x), tape.linear(p.uf, s.h)));
  Id o = tape.sigmoid(tape.add(tape.linear(p.wo, x), tape.linear(p.uo, s.h)));
  Id cand = tape.tanh(tape.add(tape.linear(p.wc, x), tape.linear(p.uc, s.h)));
  Id c_next = tape.add(tape.hadamard(f, s.c), tape.hadamard(i, cand));
  Id h_next = tape.hadamard(o, tape.tanh(c_next));
  return LstmState<Real>{h_next, c_next};
}

}  // namespace dgm
