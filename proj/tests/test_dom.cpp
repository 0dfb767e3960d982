#include <algorithm>
#include <set>

#include "doctest.h"
#include "qweblab/dom.hpp"
#include "qweblab/rng.hpp"

using namespace qweblab;

namespace {

DomElement elem(int id, std::vector<int> children = {},
                std::optional<int> group = std::nullopt) {
  DomElement e;
  e.id = id;
  e.children = std::move(children);
  e.group = group;
  return e;
}

// Independent recursive traversal, written before the iterative one.
void preorder_oracle(const DomTree& t, int id, std::vector<int>& out) {
  out.push_back(id);
  for (int c : t.at(id).children) preorder_oracle(t, c, out);
}

// Random tree with n nodes: node i's parent drawn among nodes < i.
DomTree random_tree(int n, Rng& rng) {
  std::vector<DomElement> es;
  for (int i = 0; i < n; ++i) es.push_back(elem(i));
  for (int i = 1; i < n; ++i) {
    int p = static_cast<int>(rng.below(i));
    es[p].children.push_back(i);
  }
  return DomTree(0, std::move(es));
}

}  // namespace

TEST_CASE("tokenize splits on whitespace and punctuation, lowercases") {
  CHECK(tokenize("San Francisco") == std::vector<std::string>{"san", "francisco"});
  CHECK(tokenize("12/04/2018") == std::vector<std::string>{"12", "04", "2018"});
  CHECK(tokenize("@bob-smith") == std::vector<std::string>{"bob", "smith"});
  CHECK(tokenize("   ") == std::vector<std::string>{});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("linearize single node") {
  DomTree t(7, {elem(7)});
  CHECK(linearize(t) == std::vector<int>{7});
  CHECK(leaf_elements(t) == std::vector<int>{7});
}

TEST_CASE("linearize pre-order") {
  // root with children [a, b], a with child [c] -> [root, a, c, b]
  DomTree t(0, {elem(0, {1, 2}), elem(1, {3}), elem(2), elem(3)});
  CHECK(linearize(t) == std::vector<int>{0, 1, 3, 2});
  CHECK(leaf_elements(t) == std::vector<int>{3, 2});
}

TEST_CASE("chain tree leaves") {
  DomTree t(0, {elem(0, {1}), elem(1, {2}), elem(2)});
  CHECK(leaf_elements(t) == std::vector<int>{2});
}

TEST_CASE("linearize matches recursive oracle on random trees") {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    DomTree t = random_tree(20, rng);
    t.validate();
    std::vector<int> expect;
    preorder_oracle(t, t.root(), expect);
    std::vector<int> got = linearize(t);
    CHECK(got == expect);
    CHECK(got == linearize(t));  // determinism
    // bijection onto ids
    std::set<int> ids(got.begin(), got.end());
    CHECK(ids.size() == t.size());
    // leaves are the filtered traversal
    std::vector<int> leaves_expect;
    for (int id : expect)
      if (t.at(id).is_leaf()) leaves_expect.push_back(id);
    CHECK(leaf_elements(t) == leaves_expect);
  }
}

TEST_CASE("match_count identity and perturbations") {
  Rng rng(99);
  DomTree goal = random_tree(8, rng);
  for (int id = 0; id < 8; ++id) {
    goal.at(id).set_attr(Attr::Tag, "input");
    goal.at(id).set_attr(Attr::Value, "v" + std::to_string(id));
  }
  std::vector<int> relevant = {1, 3, 5};
  CHECK(match_count(goal, goal, relevant) == 3);

  for (int trial = 0; trial < 40; ++trial) {
    DomTree state = goal;
    int expect = 0;
    for (int id : relevant) {
      if (rng.bernoulli(0.5)) {
        state.at(id).set_attr(Attr::Value, "wrong");
      }
    }
    // brute-force attribute-map comparison
    for (int id : relevant)
      if (state.at(id).attrs == goal.at(id).attrs) ++expect;
    CHECK(match_count(state, goal, relevant) == expect);
    // monotone: fixing one non-matching element never decreases the count
    for (int id : relevant) {
      if (state.at(id).attrs != goal.at(id).attrs) {
        DomTree fixed = state;
        fixed.at(id).attrs = goal.at(id).attrs;
        CHECK(match_count(fixed, goal, relevant) == expect + 1);
        break;
      }
    }
  }
}

TEST_CASE("match_count missing relevant id throws") {
  DomTree a(0, {elem(0)});
  CHECK_THROWS_AS(match_count(a, a, {5}), std::runtime_error);
}

TEST_CASE("overlap_words basic") {
  Field f{"from", "san francisco"};
  CHECK(overlap_words(f, "san francisco airport") ==
        std::vector<std::string>{"san", "francisco"});
  CHECK(overlap_words(f, "london heathrow") == std::vector<std::string>{});
}

TEST_CASE("overlap_words fuzz against nested-loop oracle") {
  Rng rng(7);
  const std::vector<std::string> words = {"a", "bb", "ccc", "dd", "e", "xyz"};
  auto random_text = [&](int max_words) {
    std::string s;
    int n = static_cast<int>(rng.below(max_words + 1));
    for (int i = 0; i < n; ++i) {
      if (!s.empty()) s += rng.bernoulli(0.3) ? ", " : " ";
      s += words[rng.below(words.size())];
    }
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    Field f{"k", random_text(4).empty() ? "a" : random_text(4)};
    std::string attr = random_text(6);
    std::vector<std::string> got = overlap_words(f, attr);
    // O(n*m) scan oracle
    std::vector<std::string> ft = tokenize(f.value), at = tokenize(attr);
    std::vector<std::string> expect;
    for (const auto& w : at) {
      bool found = false;
      for (const auto& v : ft)
        if (v == w) found = true;
      if (found) expect.push_back(w);
    }
    CHECK(got == expect);
    // subset properties
    for (const auto& w : got) {
      CHECK(std::count(at.begin(), at.end(), w) > 0);
      CHECK(std::count(ft.begin(), ft.end(), w) > 0);
    }
  }
}

TEST_CASE("tree validation rejects malformed structures") {
  CHECK_THROWS(DomTree(0, {elem(0, {1}), elem(1), elem(2)}).validate());   // unreachable
  CHECK_THROWS(DomTree(0, {elem(0, {1, 1}), elem(1)}).validate());         // two parents
  CHECK_THROWS(DomTree(0, {elem(0), elem(0)}));                            // dup id
  // group members must be siblings
  DomTree bad(0, {elem(0, {1, 2}), elem(1, {3}), elem(2, std::vector<int>{}, 9),
                  elem(3, std::vector<int>{}, 9)});
  CHECK_THROWS(bad.validate());
  // element cap
  std::vector<DomElement> big;
  big.push_back(elem(0));
  for (int i = 1; i <= 120; ++i) {
    big[0].children.push_back(i);
    big.push_back(elem(i));
  }
  CHECK_THROWS(DomTree(0, std::move(big)).validate(100));
}

TEST_CASE("instruction validation") {
  Instruction ok{{{"from", "sfo"}, {"to", "lax"}}};
  ok.validate();
  CHECK(ok.field_index("to") == 1);
  CHECK(ok.field_index("nope") == -1);
  CHECK_THROWS(Instruction{}.validate());
  CHECK_THROWS((Instruction{{{"a", "x"}, {"a", "y"}}}).validate());
  CHECK_THROWS((Instruction{{{"", "x"}}}).validate());
  CHECK_THROWS((Instruction{{{"a", ""}}}).validate());
}

TEST_CASE("json round-trip is byte-stable") {
  DomElement a = elem(0, {1, 2});
  a.set_attr(Attr::Tag, "form");
  DomElement b = elem(1);
  b.set_attr(Attr::Tag, "input");
  b.set_attr(Attr::Name, "username");
  DomElement c = elem(2, {}, 4);
  c.set_attr(Attr::Tag, "button");
  c.set_attr(Attr::Text, "submit");
  DomTree t(0, {a, b, c});
  std::string s1 = to_json(t);
  DomTree t2 = dom_tree_from_json(s1);
  CHECK(to_json(t2) == s1);
  CHECK(t2.at(2).group == std::optional<int>(4));

  Instruction ins{{{"username", "alice"}, {"password", "hunter2"}}};
  std::string js = to_json(ins);
  CHECK(to_json(instruction_from_json(js)) == js);
}
