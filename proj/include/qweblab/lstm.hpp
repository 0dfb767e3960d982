#pragma once

#include <string>
#include <vector>

#include "qweblab/params.hpp"
#include "qweblab/tape.hpp"

namespace qweblab {

// Fused-gate LSTM (order i, f, g, o) plus the bidirectional wrapper used by
// the DOM encoders. Parameters live under "<prefix>.fwd"/"<prefix>.bwd".

template <typename S>
void register_lstm_dir(ParamStore<S>& store, const std::string& prefix,
                       int input, int hidden) {
  store.add(prefix + ".wx", 4 * hidden, input, Init::FanIn);
  store.add(prefix + ".wh", 4 * hidden, hidden, Init::FanIn);
  store.add(prefix + ".b", 4 * hidden, 1, Init::LstmBias);
}

template <typename S>
void register_bilstm(ParamStore<S>& store, const std::string& prefix,
                     int input, int hidden) {
  register_lstm_dir(store, prefix + ".fwd", input, hidden);
  register_lstm_dir(store, prefix + ".bwd", input, hidden);
}

// One direction over the sequence; returns per-step hidden states (H x 1).
template <typename S>
std::vector<int> lstm_dir(Tape<S>& t, Leased<S>& p, const std::string& prefix,
                          const std::vector<int>& xs, int hidden, bool reverse) {
  using Mat = typename Tape<S>::Mat;
  const int wx = p(prefix + ".wx");
  const int wh = p(prefix + ".wh");
  const int b = p(prefix + ".b");
  int h = t.leaf(Mat::Zero(hidden, 1));
  int c = t.leaf(Mat::Zero(hidden, 1));
  std::vector<int> out(xs.size());
  const int n = static_cast<int>(xs.size());
  for (int step = 0; step < n; ++step) {
    int i = reverse ? n - 1 - step : step;
    int z = t.add(t.add(t.matmul(wx, xs[i]), t.matmul(wh, h)), b);
    int gi = t.sigmoid(t.rows(z, 0, hidden));
    int gf = t.sigmoid(t.rows(z, hidden, hidden));
    int gg = t.tanh(t.rows(z, 2 * hidden, hidden));
    int go = t.sigmoid(t.rows(z, 3 * hidden, hidden));
    c = t.add(t.mul(gf, c), t.mul(gi, gg));
    h = t.mul(go, t.tanh(c));
    out[i] = h;
  }
  return out;
}

// Per-position concatenation [forward; backward], each 2H x 1.
template <typename S>
std::vector<int> bilstm(Tape<S>& t, Leased<S>& p, const std::string& prefix,
                        const std::vector<int>& xs, int hidden) {
  if (xs.empty()) throw std::invalid_argument("bilstm over empty sequence");
  std::vector<int> fwd = lstm_dir(t, p, prefix + ".fwd", xs, hidden, false);
  std::vector<int> bwd = lstm_dir(t, p, prefix + ".bwd", xs, hidden, true);
  std::vector<int> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    const int parts[2] = {fwd[i], bwd[i]};
    out[i] = t.vstack(parts);
  }
  return out;
}

}  // namespace qweblab
