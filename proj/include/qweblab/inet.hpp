#pragma once

#include <string>
#include <vector>

#include "qweblab/dom.hpp"
#include "qweblab/features.hpp"
#include "qweblab/lstm.hpp"
#include "qweblab/params.hpp"
#include "qweblab/qweb.hpp"  // NetConfig
#include "qweblab/vocab.hpp"

namespace qweblab {

// Instructor Q-network: recovers the instruction implied by a goal tree one
// key at a time. Shares the DOM encoding recipe with QWebNet but consumes
// only (goal tree, current key); actions are (element, attribute) pairs.

struct InetForward {
  int q_elements = 0;    // 1 x N over all elements, linearization order
  int q_attributes = 0;  // 6 x 1 over attribute names
};

template <typename S>
struct InetQ {
  using Mat = typename Tape<S>::Mat;
  Mat q_elements;    // N x 1
  Mat q_attributes;  // 6 x 1
  Eigen::Matrix<S, Eigen::Dynamic, 1> attention;  // N x 1, sums to one

  S composite(int element_pos, int attr) const {
    return q_elements(element_pos, 0) + q_attributes(attr, 0);
  }
  S max_composite() const {
    return q_elements.maxCoeff() + q_attributes.maxCoeff();
  }
};

template <typename S>
class InetNet {
 public:
  InetNet(NetConfig cfg, Vocab vocab, uint64_t seed)
      : cfg_(cfg), vocab_(std::move(vocab)), params_(seed) {
    const int d = cfg_.embed;
    params_.add("tok", vocab_.size(), d, Init::Uniform01);
    params_.add("key.w", d, d, Init::FanIn);
    params_.add("key.b", d, 1, Init::Zero);
    register_bilstm(params_, "lstm", d, cfg_.hidden);
    params_.add("dom.w", d, 2 * cfg_.hidden, Init::FanIn);
    params_.add("dom.b", d, 1, Init::Zero);
    params_.add("attr.w", kNumAttrs, 2 * d, Init::FanIn);
    params_.add("attr.b", kNumAttrs, 1, Init::Zero);
  }

  const NetConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }

  InetForward forward(Tape<S>& t, Leased<S>& p, const TreeFeatures& tf,
                      const TokenBag& key_bag) const {
    const int tok = p("tok");
    int ek = t.embed_wsum(tok, key_bag.ids, key_bag.w);
    int kf = t.relu(t.add_colvec(t.matmul(p("key.w"), ek), p("key.b")));

    const int N = static_cast<int>(tf.linear.size());
    std::vector<int> xs(N);
    for (int i = 0; i < N; ++i)
      xs[i] = t.embed_wsum(tok, tf.elem_bags[i].ids, tf.elem_bags[i].w);
    std::vector<int> hs = bilstm(t, p, "lstm", xs, cfg_.hidden);
    int rep = t.tanh(t.add_colvec(t.matmul(p("dom.w"), t.hstack(hs)), p("dom.b")));

    // key-element similarity doubles as the element head and the attention
    int q_elems = t.matmul_tn(kf, rep);                    // 1 x N
    int alpha = t.softmax_col(t.transpose(q_elems));       // N x 1
    int tree_enc = t.matmul(rep, alpha);                   // d x 1
    const int parts[2] = {tree_enc, kf};
    int q_attrs = t.add_colvec(t.matmul(p("attr.w"), t.vstack(parts)), p("attr.b"));
    return InetForward{q_elems, q_attrs};
  }

  InetQ<S> q_values(const TreeFeatures& tf, const TokenBag& key_bag) const {
    Tape<S> t(false);
    Leased<S> p(t, const_cast<ParamStore<S>&>(params_));
    InetForward f = forward(t, p, tf, key_bag);
    InetQ<S> out;
    out.q_elements = t.val(f.q_elements).transpose();
    out.q_attributes = t.val(f.q_attributes);
    // recompute the attention for introspection
    Eigen::Array<S, Eigen::Dynamic, 1> e =
        (out.q_elements.col(0).array() - out.q_elements.col(0).maxCoeff()).exp();
    out.attention = (e / e.sum()).matrix();
    return out;
  }

 private:
  NetConfig cfg_;
  Vocab vocab_;
  ParamStore<S> params_;
};

}  // namespace qweblab
