#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace qweblab {

// The six element attributes, in canonical order.
enum class Attr : int { Tag = 0, Value, Name, Text, Id, Class };
inline constexpr int kNumAttrs = 6;
inline constexpr std::array<const char*, kNumAttrs> kAttrNames = {
    "tag", "value", "name", "text", "id", "class"};

int attr_index(const std::string& name);  // -1 if unknown

struct DomElement {
  int id = 0;
  std::array<std::string, kNumAttrs> attrs;  // missing = empty string
  std::vector<int> children;                 // ordered child element ids
  std::optional<int> group;                  // mutually exclusive control set

  bool is_leaf() const { return children.empty(); }
  const std::string& attr(Attr a) const { return attrs[static_cast<int>(a)]; }
  void set_attr(Attr a, std::string v) { attrs[static_cast<int>(a)] = std::move(v); }
};

class DomTree {
 public:
  DomTree() = default;
  DomTree(int root, std::vector<DomElement> elements);

  int root() const { return root_; }
  size_t size() const { return elements_.size(); }
  bool contains(int id) const { return index_.count(id) != 0; }
  const DomElement& at(int id) const;
  DomElement& at(int id);
  const std::vector<DomElement>& elements() const { return elements_; }

  // Parent of an element, or -1 for the root.
  int parent_of(int id) const;

  // Throws std::invalid_argument when the structural invariants do not hold:
  // unique ids, single root reaching every element, exactly one parent per
  // non-root element, group members are siblings, element count under cap.
  void validate(size_t max_elements = 100) const;

 private:
  int root_ = 0;
  std::vector<DomElement> elements_;            // sorted by id
  std::unordered_map<int, int> index_;          // id -> position
  std::unordered_map<int, int> parent_;         // id -> parent id

  void rebuild_index();
};

struct Field {
  std::string key;
  std::string value;
};

struct Instruction {
  std::vector<Field> fields;

  // Index of the field with this key, or -1.
  int field_index(const std::string& key) const;
  // Throws std::invalid_argument on duplicate keys, empty keys/values, or an
  // empty field list.
  void validate(size_t max_fields = 16) const;
};

// Lowercase, split on whitespace and ASCII punctuation. No stemming.
std::vector<std::string> tokenize(const std::string& text);

// Depth-first pre-order traversal, children in stored order.
std::vector<int> linearize(const DomTree& tree);

// Subsequence of linearize() keeping only leaves.
std::vector<int> leaf_elements(const DomTree& tree);

// Number of reward-relevant elements whose full attribute map in `state`
// equals the one in `goal`. Throws std::runtime_error when a relevant id is
// missing from either tree.
int match_count(const DomTree& state, const DomTree& goal,
                const std::vector<int>& relevant_ids);

// Words present in both the field's value and the attribute text, in
// attribute order (duplicates kept).
std::vector<std::string> overlap_words(const Field& field,
                                       const std::string& attribute_text);

// JSON wire format; see docs/formats.md. Serialization is canonical: fixed
// key order, attrs restricted to non-empty entries, elements sorted by id.
std::string to_json(const DomTree& tree);
std::string to_json(const Instruction& instruction);
DomTree dom_tree_from_json(const std::string& text);
Instruction instruction_from_json(const std::string& text);

}  // namespace qweblab
