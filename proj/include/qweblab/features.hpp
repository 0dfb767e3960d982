#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qweblab/dom.hpp"
#include "qweblab/vocab.hpp"

namespace qweblab {

// All string-derived inputs for a (instruction, tree) pair, computed once per
// state. Everything here is parameter-free: embeddings and Q values consume
// these bags; retraining never changes them.

struct TokenBag {
  std::vector<int> ids;
  std::vector<double> w;
};

TokenBag uniform_bag(const Vocab& vocab, const std::vector<std::string>& tokens);

struct TreeFeatures {
  std::vector<int> linear;    // element ids, traversal order
  std::vector<int> leaves;    // leaf ids, traversal order
  std::vector<int> leaf_pos;  // position of each leaf within `linear`
  std::vector<TokenBag> elem_bags;  // per linear position
};

TreeFeatures prepare_tree(const Vocab& vocab, const DomTree& tree);

// Per-(field, element) string similarity: [jaccard, field-subset-of-attr,
// field-superset-of-attr], each taken over the best-matching attribute, over
// the field's value tokens. Empty attributes carry no evidence.
Eigen::Vector3f shallow_similarity(const Field& field, const DomElement& element);

struct PreparedState {
  Instruction instruction;
  DomTree tree;
  TreeFeatures tf;
  std::vector<TokenBag> key_bags;    // per field
  std::vector<TokenBag> value_bags;  // per field
  // overlap bag for each (field, linear position)
  std::vector<std::vector<TokenBag>> overlap_bags;
  // full shallow features per (field, leaf): [own(3); sibling mean(3)]
  std::vector<Eigen::Matrix<float, 6, 1>> shallow;  // index f * L + l
  Eigen::MatrixXf shallow_dom;    // 6 x L, summed over fields
  Eigen::MatrixXf shallow_field;  // 6 x F, summed over leaves

  int num_fields() const { return static_cast<int>(instruction.fields.size()); }
  int num_leaves() const { return static_cast<int>(tf.leaves.size()); }
  int leaf_index_of(int element_id) const;  // -1 when not a leaf of this tree
};

PreparedState prepare_state(const Vocab& vocab, const Instruction& instruction,
                            const DomTree& tree);

}  // namespace qweblab
