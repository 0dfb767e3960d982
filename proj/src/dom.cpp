#include "qweblab/dom.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "json.hpp"

namespace qweblab {

int attr_index(const std::string& name) {
  for (int i = 0; i < kNumAttrs; ++i)
    if (name == kAttrNames[i]) return i;
  return -1;
}

DomTree::DomTree(int root, std::vector<DomElement> elements)
    : root_(root), elements_(std::move(elements)) {
  std::sort(elements_.begin(), elements_.end(),
            [](const DomElement& a, const DomElement& b) { return a.id < b.id; });
  rebuild_index();
}

void DomTree::rebuild_index() {
  index_.clear();
  parent_.clear();
  for (size_t i = 0; i < elements_.size(); ++i) {
    if (!index_.emplace(elements_[i].id, static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate element id " + std::to_string(elements_[i].id));
  }
  for (const DomElement& e : elements_)
    for (int c : e.children) {
      if (!parent_.emplace(c, e.id).second)
        throw std::invalid_argument("element " + std::to_string(c) + " has two parents");
    }
}

const DomElement& DomTree::at(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::runtime_error("no element with id " + std::to_string(id));
  return elements_[it->second];
}

DomElement& DomTree::at(int id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::runtime_error("no element with id " + std::to_string(id));
  return elements_[it->second];
}

int DomTree::parent_of(int id) const {
  auto it = parent_.find(id);
  return it == parent_.end() ? -1 : it->second;
}

void DomTree::validate(size_t max_elements) const {
  if (elements_.empty()) throw std::invalid_argument("empty tree");
  if (elements_.size() > max_elements)
    throw std::invalid_argument("tree exceeds element cap");
  if (!contains(root_)) throw std::invalid_argument("root id missing");
  if (parent_.count(root_)) throw std::invalid_argument("root has a parent");

  // reachability from root covers all elements, no revisits
  std::vector<int> stack{root_};
  size_t seen = 0;
  std::unordered_map<int, bool> visited;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (visited[id]) throw std::invalid_argument("cycle at element " + std::to_string(id));
    visited[id] = true;
    ++seen;
    const DomElement& e = at(id);
    for (auto it = e.children.rbegin(); it != e.children.rend(); ++it) {
      if (!contains(*it))
        throw std::invalid_argument("unknown child id " + std::to_string(*it));
      stack.push_back(*it);
    }
  }
  if (seen != elements_.size())
    throw std::invalid_argument("elements unreachable from root");

  // group members must be siblings
  for (const DomElement& e : elements_) {
    if (!e.group) continue;
    for (const DomElement& other : elements_) {
      if (other.group == e.group && parent_.at(other.id) != parent_.at(e.id))
        throw std::invalid_argument("group members are not siblings");
    }
    if (!parent_.count(e.id)) throw std::invalid_argument("grouped root element");
  }
}

int Instruction::field_index(const std::string& key) const {
  for (size_t i = 0; i < fields.size(); ++i)
    if (fields[i].key == key) return static_cast<int>(i);
  return -1;
}

void Instruction::validate(size_t max_fields) const {
  if (fields.empty() || fields.size() > max_fields)
    throw std::invalid_argument("instruction must have between 1 and " +
                                std::to_string(max_fields) + " fields");
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].key.empty()) throw std::invalid_argument("empty field key");
    if (fields[i].value.empty()) throw std::invalid_argument("empty field value");
    for (size_t j = i + 1; j < fields.size(); ++j)
      if (fields[i].key == fields[j].key)
        throw std::invalid_argument("duplicate field key: " + fields[i].key);
  }
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c) || (std::ispunct(c) && c < 128)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<int> linearize(const DomTree& tree) {
  std::vector<int> order;
  order.reserve(tree.size());
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const DomElement& e = tree.at(id);
    for (auto it = e.children.rbegin(); it != e.children.rend(); ++it)
      stack.push_back(*it);
  }
  return order;
}

std::vector<int> leaf_elements(const DomTree& tree) {
  std::vector<int> out;
  for (int id : linearize(tree))
    if (tree.at(id).is_leaf()) out.push_back(id);
  return out;
}

int match_count(const DomTree& state, const DomTree& goal,
                const std::vector<int>& relevant_ids) {
  int n = 0;
  for (int id : relevant_ids) {
    if (!state.contains(id) || !goal.contains(id))
      throw std::runtime_error("reward-relevant element " + std::to_string(id) +
                               " missing from state or goal");
    if (state.at(id).attrs == goal.at(id).attrs) ++n;
  }
  return n;
}

std::vector<std::string> overlap_words(const Field& field,
                                       const std::string& attribute_text) {
  std::vector<std::string> value_tokens = tokenize(field.value);
  std::vector<std::string> out;
  for (const std::string& w : tokenize(attribute_text))
    if (std::find(value_tokens.begin(), value_tokens.end(), w) != value_tokens.end())
      out.push_back(w);
  return out;
}

// --- JSON -------------------------------------------------------------

using ordered_json = nlohmann::ordered_json;

static ordered_json element_to_json(const DomElement& e) {
  ordered_json j;
  j["id"] = e.id;
  ordered_json attrs = ordered_json::object();
  for (int a = 0; a < kNumAttrs; ++a)
    if (!e.attrs[a].empty()) attrs[kAttrNames[a]] = e.attrs[a];
  j["attrs"] = attrs;
  j["children"] = e.children;
  j["group"] = e.group ? ordered_json(*e.group) : ordered_json(nullptr);
  j["leaf"] = e.is_leaf();
  return j;
}

std::string to_json(const DomTree& tree) {
  ordered_json j;
  j["root"] = tree.root();
  ordered_json elems = ordered_json::array();
  for (const DomElement& e : tree.elements()) elems.push_back(element_to_json(e));
  j["elements"] = elems;
  return j.dump();
}

std::string to_json(const Instruction& instruction) {
  ordered_json j;
  ordered_json fields = ordered_json::array();
  for (const Field& f : instruction.fields)
    fields.push_back(ordered_json{{"key", f.key}, {"value", f.value}});
  j["fields"] = fields;
  return j.dump();
}

DomTree dom_tree_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  std::vector<DomElement> elems;
  for (const auto& je : j.at("elements")) {
    DomElement e;
    e.id = je.at("id").get<int>();
    for (auto& [k, v] : je.at("attrs").items()) {
      int a = attr_index(k);
      if (a < 0) throw std::invalid_argument("unknown attribute: " + k);
      e.attrs[a] = v.get<std::string>();
    }
    e.children = je.at("children").get<std::vector<int>>();
    if (!je.at("group").is_null()) e.group = je.at("group").get<int>();
    if (je.at("leaf").get<bool>() != e.children.empty())
      throw std::invalid_argument("leaf flag inconsistent with children");
    elems.push_back(std::move(e));
  }
  return DomTree(j.at("root").get<int>(), std::move(elems));
}

Instruction instruction_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  Instruction ins;
  for (const auto& jf : j.at("fields"))
    ins.fields.push_back(Field{jf.at("key").get<std::string>(),
                               jf.at("value").get<std::string>()});
  return ins;
}

}  // namespace qweblab
