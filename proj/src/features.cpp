#include "qweblab/features.hpp"

#include <algorithm>
#include <set>

namespace qweblab {

TokenBag uniform_bag(const Vocab& vocab, const std::vector<std::string>& tokens) {
  TokenBag bag;
  if (tokens.empty()) return bag;
  double w = 1.0 / static_cast<double>(tokens.size());
  for (const std::string& t : tokens) {
    bag.ids.push_back(vocab.id(t));
    bag.w.push_back(w);
  }
  return bag;
}

// mean over the six attributes of the per-attribute token mean
static TokenBag attr_mean_bag(const Vocab& vocab, const DomElement& e) {
  TokenBag bag;
  for (int a = 0; a < kNumAttrs; ++a) {
    std::vector<std::string> toks = tokenize(e.attrs[a]);
    if (toks.empty()) continue;
    double w = 1.0 / (kNumAttrs * static_cast<double>(toks.size()));
    for (const std::string& t : toks) {
      bag.ids.push_back(vocab.id(t));
      bag.w.push_back(w);
    }
  }
  return bag;
}

TreeFeatures prepare_tree(const Vocab& vocab, const DomTree& tree) {
  TreeFeatures tf;
  tf.linear = linearize(tree);
  for (size_t i = 0; i < tf.linear.size(); ++i) {
    const DomElement& e = tree.at(tf.linear[i]);
    tf.elem_bags.push_back(attr_mean_bag(vocab, e));
    if (e.is_leaf()) {
      tf.leaves.push_back(e.id);
      tf.leaf_pos.push_back(static_cast<int>(i));
    }
  }
  return tf;
}

Eigen::Vector3f shallow_similarity(const Field& field, const DomElement& element) {
  std::vector<std::string> ft = tokenize(field.value);
  std::set<std::string> fset(ft.begin(), ft.end());
  Eigen::Vector3f out = Eigen::Vector3f::Zero();
  for (int a = 0; a < kNumAttrs; ++a) {
    std::vector<std::string> at = tokenize(element.attrs[a]);
    if (at.empty()) continue;
    std::set<std::string> aset(at.begin(), at.end());
    int inter = 0;
    for (const std::string& t : fset) inter += aset.count(t);
    int uni = static_cast<int>(fset.size() + aset.size()) - inter;
    float jac = uni > 0 ? static_cast<float>(inter) / static_cast<float>(uni) : 0.f;
    bool fld_subset = inter == static_cast<int>(fset.size());
    bool fld_superset = inter == static_cast<int>(aset.size());
    out[0] = std::max(out[0], jac);
    out[1] = std::max(out[1], fld_subset ? 1.f : 0.f);
    out[2] = std::max(out[2], fld_superset ? 1.f : 0.f);
  }
  return out;
}

int PreparedState::leaf_index_of(int element_id) const {
  for (size_t i = 0; i < tf.leaves.size(); ++i)
    if (tf.leaves[i] == element_id) return static_cast<int>(i);
  return -1;
}

PreparedState prepare_state(const Vocab& vocab, const Instruction& instruction,
                            const DomTree& tree) {
  PreparedState ps;
  ps.instruction = instruction;
  ps.tree = tree;
  ps.tf = prepare_tree(vocab, tree);

  const int F = static_cast<int>(instruction.fields.size());
  const int N = static_cast<int>(ps.tf.linear.size());
  const int L = static_cast<int>(ps.tf.leaves.size());

  for (const Field& f : instruction.fields) {
    ps.key_bags.push_back(uniform_bag(vocab, tokenize(f.key)));
    ps.value_bags.push_back(uniform_bag(vocab, tokenize(f.value)));
  }

  ps.overlap_bags.assign(F, {});
  for (int f = 0; f < F; ++f) {
    ps.overlap_bags[f].resize(N);
    for (int i = 0; i < N; ++i) {
      const DomElement& e = tree.at(ps.tf.linear[i]);
      TokenBag& bag = ps.overlap_bags[f][i];
      for (int a = 0; a < kNumAttrs; ++a) {
        std::vector<std::string> ov =
            overlap_words(instruction.fields[f], e.attrs[a]);
        if (ov.empty()) continue;
        double w = 1.0 / (kNumAttrs * static_cast<double>(ov.size()));
        for (const std::string& t : ov) {
          bag.ids.push_back(vocab.id(t));
          bag.w.push_back(w);
        }
      }
    }
  }

  // own similarity vectors for every element, then sibling means for leaves
  std::vector<Eigen::Vector3f> own(static_cast<size_t>(F) * N);
  for (int f = 0; f < F; ++f)
    for (int i = 0; i < N; ++i)
      own[f * N + i] =
          shallow_similarity(instruction.fields[f], tree.at(ps.tf.linear[i]));

  std::vector<int> linear_index_of_id;
  {
    int max_id = 0;
    for (int id : ps.tf.linear) max_id = std::max(max_id, id);
    linear_index_of_id.assign(max_id + 1, -1);
    for (int i = 0; i < N; ++i) linear_index_of_id[ps.tf.linear[i]] = i;
  }

  ps.shallow.resize(static_cast<size_t>(F) * L);
  ps.shallow_dom = Eigen::MatrixXf::Zero(6, L);
  ps.shallow_field = Eigen::MatrixXf::Zero(6, F);
  for (int f = 0; f < F; ++f) {
    for (int l = 0; l < L; ++l) {
      int id = ps.tf.leaves[l];
      int parent = tree.parent_of(id);
      Eigen::Vector3f sib = Eigen::Vector3f::Zero();
      if (parent >= 0) {
        const std::vector<int>& kids = tree.at(parent).children;
        auto it = std::find(kids.begin(), kids.end(), id);
        int j = static_cast<int>(it - kids.begin());
        if (j > 0) sib += own[f * N + linear_index_of_id[kids[j - 1]]];
        if (j + 1 < static_cast<int>(kids.size()))
          sib += own[f * N + linear_index_of_id[kids[j + 1]]];
      }
      sib *= 0.5f;
      Eigen::Matrix<float, 6, 1> feat;
      feat << own[f * N + ps.tf.leaf_pos[l]], sib;
      ps.shallow[f * L + l] = feat;
      ps.shallow_dom.col(l) += feat;
      ps.shallow_field.col(f) += feat;
    }
  }
  return ps;
}

}  // namespace qweblab
