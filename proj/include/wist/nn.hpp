#pragma once

#include <array>
#include <string>
#include <vector>

#include "wist/ad/ops.hpp"
#include "wist/ad/params.hpp"

namespace wist::nn {

using ad::Graph;
using ad::Parameter;
using ad::ParameterStore;
using ad::Tensor;
using ad::Var;

// Affine map followed by LeakyReLU(0.1).
template <class T>
struct Mlp {
  Parameter<T>* weight = nullptr;  // in x out
  Parameter<T>* bias = nullptr;    // 1 x out

  static Mlp create(ParameterStore<T>& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    Mlp m;
    m.weight = &store.add(prefix + ".W", {in, out});
    m.bias = &store.add(prefix + ".b", {1, out});
    ad::init::xavier_uniform(m.weight->value, in, out, rng);
    return m;
  }

  Var<T> forward(Graph<T>& g, Var<T> x) const {
    return ad::leaky_relu(ad::add_bias(ad::matmul(x, g.param(*weight)), g.param(*bias)), T(0.1));
  }
};

struct LstmDropout {
  double input = 0;   // shared mask over time on each layer's input
  double hidden = 0;  // shared mask over time on the recurrent state
};

// Stacked bidirectional LSTM. Gate layout inside the 4H blocks: input,
// forget, candidate, output.
template <class T>
struct BiLstm {
  struct Cell {
    Parameter<T>* W = nullptr;  // in x 4H
    Parameter<T>* U = nullptr;  // H x 4H
    Parameter<T>* b = nullptr;  // 1 x 4H
  };
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::vector<std::array<Cell, 2>> layers;  // [layer][0 = forward, 1 = backward]

  std::size_t output_dim() const { return 2 * hidden; }

  static BiLstm create(ParameterStore<T>& store, const std::string& prefix, std::size_t input_dim,
                       std::size_t hidden, std::size_t n_layers, Rng& rng) {
    BiLstm m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t in = l == 0 ? input_dim : 2 * hidden;
      std::array<Cell, 2> pair;
      for (int dir = 0; dir < 2; ++dir) {
        const std::string p = prefix + ".l" + std::to_string(l) + (dir == 0 ? ".fw" : ".bw");
        Cell& c = pair[dir];
        c.W = &store.add(p + ".W", {in, 4 * hidden});
        c.U = &store.add(p + ".U", {hidden, 4 * hidden});
        c.b = &store.add(p + ".b", {1, 4 * hidden});
        ad::init::xavier_uniform(c.W->value, in, 4 * hidden, rng);
        for (std::size_t gate = 0; gate < 4; ++gate) {
          ad::init::orthogonal_block(c.U->value, gate * hidden, 4 * hidden, hidden, hidden, rng);
        }
      }
      m.layers.push_back(pair);
    }
    return m;
  }

  struct Output {
    Var<T> states;      // n x 2H, top layer, [forward | backward]
    Var<T> last_fwd;    // 1 x H, forward state after the last position
    Var<T> last_bwd;    // 1 x H, backward state after the first position
  };

  // `rng` may be null when dropout rates are zero (evaluation).
  Output forward(Graph<T>& g, Var<T> x, const LstmDropout& drop = {}, Rng* rng = nullptr) const {
    if (x.rows() == 0) throw ShapeError("BiLSTM over an empty sequence");
    if (x.cols() != input_dim) {
      throw ShapeError("BiLSTM input width " + std::to_string(x.cols()) + ", expected " + std::to_string(input_dim));
    }
    Output out{};
    Var<T> cur = x;
    for (const auto& layer : layers) {
      if (drop.input > 0 && rng) cur = ad::dropout(cur, ad::dropout_mask<T>(1, cur.cols(), drop.input, *rng));
      Var<T> last[2];
      Var<T> fw = run(g, layer[0], cur, false, drop, rng, last[0]);
      Var<T> bw = run(g, layer[1], cur, true, drop, rng, last[1]);
      cur = ad::concat_cols<T>({fw, bw});
      out.last_fwd = last[0];
      out.last_bwd = last[1];
    }
    out.states = cur;
    return out;
  }

  // Inference over `batch` equal-length sequences stacked in x (sequence-major,
  // batch * n rows). Each row of the result equals the one forward() gives for
  // its sequence alone; the recurrent matrix is read once per step for all.
  Var<T> forward_batch(Graph<T>& g, Var<T> x, std::size_t batch) const {
    if (batch == 0 || x.rows() == 0 || x.rows() % batch != 0) throw ShapeError("BiLSTM batch does not divide the rows");
    if (x.cols() != input_dim) {
      throw ShapeError("BiLSTM input width " + std::to_string(x.cols()) + ", expected " + std::to_string(input_dim));
    }
    const std::size_t n = x.rows() / batch;
    // Time-major row t*batch+b <-> sequence-major row b*n+t.
    std::vector<std::size_t> to_seq(batch * n);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < n; ++t) to_seq[b * n + t] = t * batch + b;
    Var<T> cur = x;
    for (const auto& layer : layers) {
      Var<T> fw = run_batch(g, layer[0], cur, batch, n, false);
      Var<T> bw = run_batch(g, layer[1], cur, batch, n, true);
      cur = ad::embedding_lookup(ad::concat_cols<T>({fw, bw}), to_seq);
    }
    return cur;
  }

 private:
  // Returns time-major states (n * batch rows).
  Var<T> run_batch(Graph<T>& g, const Cell& c, Var<T> x, std::size_t batch, std::size_t n, bool reverse) const {
    const std::size_t H = hidden;
    Var<T> proj = ad::add_bias(ad::matmul(x, g.param(*c.W)), g.param(*c.b));
    Var<T> U = g.param(*c.U);
    Var<T> h = ad::zeros(g, batch, H);
    Var<T> cell = ad::zeros(g, batch, H);
    std::vector<Var<T>> hs(n);
    std::vector<std::size_t> rows(batch);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = reverse ? n - 1 - step : step;
      for (std::size_t b = 0; b < batch; ++b) rows[b] = b * n + t;
      Var<T> z = ad::add(ad::embedding_lookup(proj, rows), ad::matmul(h, U));
      Var<T> i = ad::sigmoid(ad::slice_cols(z, 0, H));
      Var<T> f = ad::sigmoid(ad::slice_cols(z, H, 2 * H));
      Var<T> cand = ad::tanh(ad::slice_cols(z, 2 * H, 3 * H));
      Var<T> o = ad::sigmoid(ad::slice_cols(z, 3 * H, 4 * H));
      cell = ad::add(ad::mul(f, cell), ad::mul(i, cand));
      h = ad::mul(o, ad::tanh(cell));
      hs[t] = h;
    }
    return ad::concat_rows(hs);
  }

  Var<T> run(Graph<T>& g, const Cell& c, Var<T> x, bool reverse, const LstmDropout& drop, Rng* rng,
             Var<T>& last) const {
    const std::size_t n = x.rows();
    const std::size_t H = hidden;
    Var<T> proj = ad::add_bias(ad::matmul(x, g.param(*c.W)), g.param(*c.b));
    Var<T> U = g.param(*c.U);
    Var<T> h = ad::zeros(g, 1, H);
    Var<T> cell = ad::zeros(g, 1, H);
    Tensor<T> hmask;
    const bool hdrop = drop.hidden > 0 && rng;
    if (hdrop) hmask = ad::dropout_mask<T>(1, H, drop.hidden, *rng);
    std::vector<Var<T>> hs(n);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = reverse ? n - 1 - step : step;
      Var<T> hin = hdrop ? ad::dropout(h, hmask) : h;
      Var<T> z = ad::add(ad::row(proj, t), ad::matmul(hin, U));
      Var<T> i = ad::sigmoid(ad::slice_cols(z, 0, H));
      Var<T> f = ad::sigmoid(ad::slice_cols(z, H, 2 * H));
      Var<T> cand = ad::tanh(ad::slice_cols(z, 2 * H, 3 * H));
      Var<T> o = ad::sigmoid(ad::slice_cols(z, 3 * H, 4 * H));
      cell = ad::add(ad::mul(f, cell), ad::mul(i, cand));
      h = ad::mul(o, ad::tanh(cell));
      hs[t] = h;
    }
    last = h;
    return ad::concat_rows(hs);
  }
};

}  // namespace wist::nn
