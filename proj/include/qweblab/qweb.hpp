#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qweblab/env.hpp"
#include "qweblab/features.hpp"
#include "qweblab/lstm.hpp"
#include "qweblab/params.hpp"
#include "qweblab/tape.hpp"
#include "qweblab/vocab.hpp"

namespace qweblab {

struct NetConfig {
  int embed = 32;   // token embedding width == field encoding width
  int hidden = 32;  // lstm units per direction
  bool shallow = false;
};

// The three-headed composite Q output. Indexed by leaf position (not element
// id); position order equals the leaf linearization order of the tree.
template <typename S>
struct QValues {
  using Mat = typename Tape<S>::Mat;
  Mat q_dom;         // L x 1
  Mat q_click_type;  // L x 2, columns (click, type)
  Mat q_type;        // L x F

  // Eq-style additive composite value of one action.
  S composite(int leaf, Verb verb, std::optional<int> field) const {
    S q = q_dom(leaf, 0) + q_click_type(leaf, verb == Verb::Click ? 0 : 1);
    if (verb == Verb::Type) q += q_type(leaf, *field);
    return q;
  }

  // max over the composite action space, for TD targets
  S max_composite() const {
    S best = -std::numeric_limits<S>::infinity();
    for (int l = 0; l < q_dom.rows(); ++l) {
      S click = q_click_type(l, 0);
      S type = q_click_type(l, 1) + q_type.row(l).maxCoeff();
      best = std::max(best, q_dom(l, 0) + std::max(click, type));
    }
    return best;
  }
};

enum class SelectMode { Greedy, Categorical };

// Per-forward node handles; kept so training can index Q(s, a) on the tape.
struct QWebForward {
  int q_dom = 0;   // 1 x L
  int q_ct = 0;    // 2 x L
  int q_type = 0;  // F x L
};

template <typename S>
class QWebNet {
 public:
  QWebNet(NetConfig cfg, Vocab vocab, uint64_t seed)
      : cfg_(cfg), vocab_(std::move(vocab)), params_(seed) {
    register_params(params_, cfg_, vocab_.size());
  }

  const NetConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }

  static void register_params(ParamStore<S>& p, const NetConfig& cfg, int vocab_size) {
    const int d = cfg.embed;
    p.add("tok", vocab_size, d, Init::Uniform01);
    p.add("instr.w", d, 2 * d, Init::FanIn);
    p.add("instr.b", d, 1, Init::Zero);
    p.add("attn_u", d, 1, Init::FanIn);
    register_bilstm(p, "lstm", 2 * d, cfg.hidden);
    p.add("dom.w", d, 2 * cfg.hidden, Init::FanIn);
    p.add("dom.b", d, 1, Init::Zero);
    p.add("qdom.w", 1, 1, Init::One);
    p.add("qdom.b", 1, 1, Init::Zero);
    p.add("qct.w", 2, 1, Init::FanIn);
    p.add("qct.b", 2, 1, Init::Zero);
    if (cfg.shallow) {
      p.add("sh.dom.w", 1, 6, Init::FanIn);
      p.add("sh.dom.b", 1, 1, Init::Zero);
      p.add("sh.dom.scale", 1, 1, Init::One);
      p.add("sh.field.w", 1, 6, Init::FanIn);
      p.add("sh.field.b", 1, 1, Init::Zero);
      p.add("sh.field.scale", 1, 1, Init::One);
      p.add("gate_u", 1, 1, Init::Zero);
      p.add("gate_v", 1, 1, Init::Zero);
    }
  }

  QWebForward forward(Tape<S>& t, Leased<S>& p, const PreparedState& ps) const {
    using Mat = typename Tape<S>::Mat;
    const int F = ps.num_fields();
    const int L = ps.num_leaves();
    const int tok = p("tok");

    // instruction encoder: one vector per field
    std::vector<int> ef(F);
    for (int f = 0; f < F; ++f) {
      int ek = t.embed_wsum(tok, ps.key_bags[f].ids, ps.key_bags[f].w);
      int ev = t.embed_wsum(tok, ps.value_bags[f].ids, ps.value_bags[f].w);
      const int kv[2] = {ek, ev};
      ef[f] = t.relu(t.add_colvec(t.matmul(p("instr.w"), t.vstack(kv)), p("instr.b")));
    }

    // self-attention over fields, shared across elements
    std::vector<int> logits(F);
    for (int f = 0; f < F; ++f) logits[f] = t.dot(p("attn_u"), ef[f]);
    int pvec = t.softmax_col(t.vstack(logits));

    // per-element input: [attribute-mean embedding; attended overlap encoding]
    const int N = static_cast<int>(ps.tf.linear.size());
    std::vector<int> xs(N);
    for (int i = 0; i < N; ++i) {
      int ee = t.embed_wsum(tok, ps.tf.elem_bags[i].ids, ps.tf.elem_bags[i].w);
      std::vector<int> ov(F);
      for (int f = 0; f < F; ++f)
        ov[f] = t.embed_wsum(tok, ps.overlap_bags[f][i].ids, ps.overlap_bags[f][i].w);
      int ec = t.matmul(t.hstack(ov), pvec);
      const int parts[2] = {ee, ec};
      xs[i] = t.vstack(parts);
    }

    std::vector<int> hs = bilstm(t, p, "lstm", xs, cfg_.hidden);
    std::vector<int> leaf_h(L);
    for (int l = 0; l < L; ++l) leaf_h[l] = hs[ps.tf.leaf_pos[l]];
    int rep = t.tanh(t.add_colvec(t.matmul(p("dom.w"), t.hstack(leaf_h)), p("dom.b")));

    // context matrix: pairwise similarity of field vectors and leaf vectors
    int M = t.matmul_tn(t.hstack(ef), rep);  // F x L
    int colsum = t.col_sum(M);               // 1 x L
    int ones_row = t.leaf(Mat::Ones(1, L));

    auto head = [&](const char* w, const char* b) {
      return t.add(t.matmul(p(w), colsum),
                   t.affine_const(t.matmul(p(b), ones_row), static_cast<S>(F), 0));
    };
    int q_dom = head("qdom.w", "qdom.b");  // 1 x L
    int q_ct = head("qct.w", "qct.b");     // 2 x L
    int q_type = M;

    if (cfg_.shallow) {
      int sdom = t.leaf(ps.shallow_dom.template cast<S>());
      int sfield = t.leaf(ps.shallow_field.template cast<S>());
      int qs_dom = t.scale_var(
          t.tanh(t.add_colvec(t.matmul(p("sh.dom.w"), sdom), p("sh.dom.b"))),
          p("sh.dom.scale"));  // 1 x L
      int qs_field = t.scale_var(
          t.tanh(t.add_colvec(t.matmul(p("sh.field.w"), sfield), p("sh.field.b"))),
          p("sh.field.scale"));  // 1 x F
      int gu = t.sigmoid(p("gate_u"));
      int gv = t.sigmoid(p("gate_v"));
      int one_minus_gu = t.affine_const(gu, -1, 1);
      int one_minus_gv = t.affine_const(gv, -1, 1);
      q_dom = t.add(t.scale_var(q_dom, one_minus_gu), t.scale_var(qs_dom, gu));
      int qs_field_bcast = t.matmul(t.transpose(qs_field), ones_row);  // F x L
      q_type = t.add(t.scale_var(q_type, one_minus_gv),
                     t.scale_var(qs_field_bcast, gv));
    }
    return QWebForward{q_dom, q_ct, q_type};
  }

  // no-grad forward convenience
  QValues<S> q_values(const PreparedState& ps) const {
    Tape<S> t(false);
    Leased<S> p(t, const_cast<ParamStore<S>&>(params_));
    QWebForward f = forward(t, p, ps);
    return extract(t, f);
  }

  static QValues<S> extract(const Tape<S>& t, const QWebForward& f) {
    QValues<S> qv;
    qv.q_dom = t.val(f.q_dom).transpose();       // L x 1
    qv.q_click_type = t.val(f.q_ct).transpose(); // L x 2
    qv.q_type = t.val(f.q_type).transpose();     // L x F
    return qv;
  }

 private:
  NetConfig cfg_;
  Vocab vocab_;
  ParamStore<S> params_;
};

// Hierarchical action selection over leaf positions. Greedy breaks ties
// toward the lowest linearization index; categorical samples each level from
// softmax(q / temperature).
template <typename S>
CompositeAction select_action(const QValues<S>& qv, const PreparedState& ps,
                              SelectMode mode, double temperature, Rng& rng) {
  const int L = static_cast<int>(qv.q_dom.rows());
  const int F = static_cast<int>(qv.q_type.cols());
  if (L != ps.num_leaves() || F != ps.num_fields())
    throw std::invalid_argument("q values do not match the prepared state");

  auto pick = [&](const std::vector<double>& scores) {
    if (mode == SelectMode::Greedy) {
      int best = 0;
      for (size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = static_cast<int>(i);
      return best;
    }
    double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> w(scores.size());
    for (size_t i = 0; i < scores.size(); ++i)
      w[i] = std::exp((scores[i] - mx) / temperature);
    return rng.categorical(w);
  };

  std::vector<double> dom(L);
  for (int l = 0; l < L; ++l) dom[l] = qv.q_dom(l, 0);
  int leaf = pick(dom);

  std::vector<double> verb = {qv.q_click_type(leaf, 0), qv.q_click_type(leaf, 1)};
  bool click = pick(verb) == 0;

  CompositeAction a;
  a.element = ps.tf.leaves[leaf];
  a.verb = click ? Verb::Click : Verb::Type;
  if (!click) {
    std::vector<double> fld(F);
    for (int f = 0; f < F; ++f) fld[f] = qv.q_type(leaf, f);
    a.field_index = pick(fld);
  }
  return a;
}

}  // namespace qweblab
