#include <cmath>
#include <set>

#include "doctest.h"
#include "qweblab/env.hpp"
#include "qweblab/rng.hpp"
#include "reference_env.hpp"

using namespace qweblab;

namespace {

// Uniformly random syntactically-plausible action, including invalid ones.
CompositeAction fuzz_action(const DomTree& tree, const Instruction& ins, Rng& rng) {
  CompositeAction a;
  // mostly existing ids, sometimes junk
  if (rng.bernoulli(0.9)) {
    const auto& es = tree.elements();
    a.element = es[rng.below(es.size())].id;
  } else {
    a.element = static_cast<int>(rng.below(200));
  }
  if (rng.bernoulli(0.5)) {
    a.verb = Verb::Type;
    if (rng.bernoulli(0.9))
      a.field_index = static_cast<int>(rng.below(ins.fields.size()));
    else if (rng.bernoulli(0.5))
      a.field_index = static_cast<int>(ins.fields.size()) + 2;  // out of range
    // otherwise: type without a field index (malformed)
  }
  return a;
}

}  // namespace

TEST_CASE("registry") {
  CHECK(env_names().size() == 6);
  CHECK_THROWS_AS(make_env("no-such-env", {}), std::invalid_argument);
  for (const std::string& name : env_names()) {
    WebEnv env = make_env(name, {.seed = 1});
    const EpisodeSpec& ep = env.reset();
    ep.instruction.validate();
    ep.initial.validate();
    ep.goal.validate();
    CHECK(!ep.relevant.empty());
  }
}

TEST_CASE("reset is deterministic and book-flight keys are fixed") {
  WebEnv a = make_env("book-flight-form", {.seed = 77});
  WebEnv b = make_env("book-flight-form", {.seed = 77});
  const EpisodeSpec& ea = a.reset();
  const EpisodeSpec& eb = b.reset();
  CHECK(to_json(ea.instruction) == to_json(eb.instruction));
  CHECK(to_json(ea.initial) == to_json(eb.initial));
  CHECK(to_json(ea.goal) == to_json(eb.goal));

  CHECK(ea.instruction.fields.size() == 3);
  CHECK(ea.instruction.fields[0].key == "from");
  CHECK(ea.instruction.fields[1].key == "to");
  CHECK(ea.instruction.fields[2].key == "date");
}

TEST_CASE("book-flight origin differs from destination over 1000 seeds") {
  WebEnv env = make_env("book-flight-form", {.seed = 9});
  for (int i = 0; i < 1000; ++i) {
    const EpisodeSpec& ep = env.reset();
    CHECK(ep.instruction.fields[0].value != ep.instruction.fields[1].value);
  }
}

TEST_CASE("login-user oracle trajectory rewards") {
  WebEnv env = make_env("login-user", {.seed = 5});
  env.reset();
  std::vector<double> rewards;
  StepOutcome last;
  while (env.active()) {
    last = env.step(env.oracle_action());
    rewards.push_back(last.reward);
  }
  REQUIRE(rewards.size() == 3);
  CHECK(rewards[0] == doctest::Approx(-0.1));
  CHECK(rewards[1] == doctest::Approx(-0.1));
  CHECK(rewards[2] == doctest::Approx(0.9));
  CHECK(last.success == std::optional<bool>(true));
}

TEST_CASE("clicking submit immediately on book-flight") {
  WebEnv env = make_env("book-flight-form", {.seed = 3});
  env.reset();
  StepOutcome o = env.step(CompositeAction{10, Verb::Click, std::nullopt});
  CHECK(o.done);
  CHECK(o.success == std::optional<bool>(false));
  CHECK(o.reward == doctest::Approx(-1.1));
}

TEST_CASE("terminal reward is exactly +1 or -1 plus the step penalty") {
  Rng rng(31);
  for (const std::string& name : env_names()) {
    WebEnv env = make_env(name, {.seed = 21});
    for (int ep = 0; ep < 20; ++ep) {
      env.reset();
      while (env.active()) {
        StepOutcome o = env.step(fuzz_action(env.state(), env.instruction(), rng));
        CHECK(o.reward_shaped == 0.0);
        if (o.done) {
          bool plus = std::abs(o.reward_env - 0.9) < 1e-12;
          bool minus = std::abs(o.reward_env + 1.1) < 1e-12;
          CHECK((plus || minus));
        } else {
          CHECK(o.reward_env == doctest::Approx(-0.1));
        }
      }
    }
  }
}

TEST_CASE("invalid actions are penalized no-ops") {
  WebEnv env = make_env("login-user", {.seed = 2});
  env.reset();
  std::string before = to_json(env.state());
  StepOutcome o = env.step(CompositeAction{0, Verb::Click, std::nullopt});  // non-leaf
  CHECK(to_json(env.state()) == before);
  CHECK(o.reward == doctest::Approx(-0.1));
  CHECK(!o.done);
  o = env.step(CompositeAction{999, Verb::Click, std::nullopt});  // unknown id
  CHECK(to_json(env.state()) == before);
  o = env.step(CompositeAction{1, Verb::Type, 5});  // field out of range
  CHECK(to_json(env.state()) == before);
}

TEST_CASE("oracle rollouts succeed on every environment") {
  for (const std::string& name : env_names()) {
    WebEnv env = make_env(name, {.seed = 123});
    std::vector<StepOutcome> finals;
    for (int ep = 0; ep < 25; ++ep) {
      env.reset();
      StepOutcome o;
      int guard = 0;
      while (env.active()) {
        o = env.step(env.oracle_action());
        REQUIRE(++guard < 64);
      }
      finals.push_back(o);
    }
    CAPTURE(name);
    CHECK(success_rate(finals) == 1.0);
  }
}

TEST_CASE("oracle on a finished episode throws") {
  WebEnv env = make_env("click-dialog", {.seed = 4});
  env.reset();
  env.step(env.oracle_action());
  CHECK(!env.active());
  CHECK_THROWS_AS(env.oracle_action(), std::logic_error);
  CHECK_THROWS_AS(env.step(CompositeAction{2, Verb::Click, std::nullopt}),
                  std::logic_error);
}

TEST_CASE("oracle targets a solved form by clicking submit") {
  WebEnv env = make_env("login-user", {.seed = 8});
  env.reset();
  env.step(env.oracle_action());
  env.step(env.oracle_action());
  // both fields filled; first unresolved element is gone, submit remains
  CompositeAction a = env.oracle_action();
  CHECK(a.element == 3);
  CHECK(a.verb == Verb::Click);
  // explicit target works as well
  CompositeAction b = env.oracle_action(3);
  CHECK(b == a);
}

TEST_CASE("oracle completeness from randomly-reached states") {
  Rng rng(55);
  for (const std::string& name : env_names()) {
    // generous cap so recovery fits within |relevant| + 1 oracle steps
    WebEnv env = make_env(name, {.max_steps = 64, .seed = 99});
    for (int trial = 0; trial < 20; ++trial) {
      env.reset();
      int wander = static_cast<int>(rng.below(4));
      bool dead = false;
      for (int i = 0; i < wander && env.active(); ++i) {
        StepOutcome o = env.step(fuzz_action(env.state(), env.instruction(), rng));
        dead = o.done;
      }
      if (dead) continue;
      int mismatched = 0;
      for (int id : env.relevant())
        if (!env.element_matches_goal(id)) ++mismatched;
      int budget = static_cast<int>(env.relevant().size()) + 1;
      (void)mismatched;
      StepOutcome o;
      int used = 0;
      while (env.active()) {
        o = env.step(env.oracle_action());
        ++used;
        REQUIRE(used <= budget);
      }
      CAPTURE(name);
      CHECK(o.success == std::optional<bool>(true));
    }
  }
}

TEST_CASE("shaped reward matches the potential difference") {
  EpisodeConfig cfg{.max_steps = 0, .step_penalty = -0.1, .gamma = 0.99,
                    .shaping_enabled = true, .seed = 61};
  WebEnv env = make_env("book-flight-form", cfg);
  env.reset();
  // correct date entry raises the potential by 1/3
  CompositeAction date_action = env.oracle_action(9);
  CHECK(date_action.verb == Verb::Type);
  StepOutcome o = env.step(date_action);
  CHECK(o.reward_shaped == doctest::Approx(0.99 / 3.0));
  CHECK(o.reward == doctest::Approx(-0.1 + 0.99 / 3.0));

  // clicking around without changing a relevant element leaves it unchanged
  o = env.step(CompositeAction{2, Verb::Click, std::nullopt});
  CHECK(o.reward_shaped == 0.0);

  // prev == next
  const DomTree& s = env.state();
  CHECK(shaped_reward(s, s, env.goal(), env.relevant(), 0.99) == 0.0);
}

TEST_CASE("telescoping shaping sums over random episodes") {
  Rng rng(17);
  EpisodeConfig cfg{.max_steps = 0, .step_penalty = -0.1, .gamma = 0.99,
                    .shaping_enabled = true, .seed = 13};
  for (const std::string& name : env_names()) {
    WebEnv env = make_env(name, cfg);
    for (int ep = 0; ep < 30; ++ep) {
      env.reset();
      double phi0 = env.potential();
      double acc = 0;
      while (env.active()) {
        StepOutcome o = env.step(fuzz_action(env.state(), env.instruction(), rng));
        acc += o.reward_shaped;
      }
      double phiN = env.potential();
      CHECK(acc == doctest::Approx(0.99 * (phiN - phi0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("step semantics agree with the reference interpreter under fuzz") {
  Rng rng(2024);
  EpisodeConfig cfg{.max_steps = 50, .step_penalty = -0.1, .gamma = 0.99,
                    .shaping_enabled = true, .seed = 41};
  for (const std::string& name : env_names()) {
    WebEnv env = make_env(name, cfg);
    for (int ep = 0; ep < 10; ++ep) {
      const EpisodeSpec& spec = env.reset();
      refenv::RefEpisode ref = refenv::ref_from_spec(spec, cfg);
      while (env.active()) {
        CompositeAction a = fuzz_action(env.state(), env.instruction(), rng);
        StepOutcome got = env.step(a);
        refenv::RefOutcome expect = refenv::ref_step(ref, a, cfg);
        CAPTURE(name);
        CHECK(to_json(env.state()) == to_json(ref.state));
        CHECK(got.reward == doctest::Approx(expect.reward).epsilon(1e-12));
        CHECK(got.done == expect.done);
        if (got.done) CHECK(*got.success == expect.success);
      }
    }
  }
}

TEST_CASE("success_rate") {
  auto terminal = [](bool ok) {
    StepOutcome o;
    o.done = true;
    o.success = ok;
    return o;
  };
  CHECK(success_rate({terminal(true), terminal(true), terminal(false), terminal(true)}) ==
        doctest::Approx(0.75));
  CHECK(success_rate({terminal(false), terminal(false)}) == 0.0);
  CHECK_THROWS_AS(success_rate({}), std::invalid_argument);
  CHECK_THROWS_AS(success_rate({StepOutcome{}}), std::invalid_argument);

  Rng rng(3);
  std::vector<StepOutcome> many;
  int expect = 0;
  for (int i = 0; i < 500; ++i) {
    bool ok = rng.bernoulli(0.37);
    expect += ok;
    many.push_back(terminal(ok));
  }
  CHECK(success_rate(many) == doctest::Approx(expect / 500.0));
}

TEST_CASE("group click activates one member and clears the rest") {
  DomElement root;
  root.id = 0;
  root.set_attr(Attr::Tag, "form");
  root.children = {1, 2, 3, 4};
  std::vector<DomElement> es{root};
  for (int i = 1; i <= 3; ++i) {
    DomElement r;
    r.id = i;
    r.set_attr(Attr::Tag, "radio");
    r.group = 7;
    es.push_back(r);
  }
  DomElement btn;
  btn.id = 4;
  btn.set_attr(Attr::Tag, "button");
  es.push_back(btn);
  DomTree tree(0, es);
  Instruction ins{{{"k", "v"}}};

  DomTree t1 = apply_action(tree, {2, Verb::Click, std::nullopt}, ins);
  CHECK(t1.at(2).attr(Attr::Value) == "on");
  CHECK(t1.at(1).attr(Attr::Value).empty());
  DomTree t2 = apply_action(t1, {3, Verb::Click, std::nullopt}, ins);
  CHECK(t2.at(3).attr(Attr::Value) == "on");
  CHECK(t2.at(2).attr(Attr::Value).empty());
  // buttons toggle
  DomTree t3 = apply_action(t2, {4, Verb::Click, std::nullopt}, ins);
  CHECK(t3.at(4).attr(Attr::Value) == "clicked");
  DomTree t4 = apply_action(t3, {4, Verb::Click, std::nullopt}, ins);
  CHECK(t4.at(4).attr(Attr::Value).empty());
}

TEST_CASE("trace records") {
  StepOutcome o;
  o.reward = -0.1;
  o.done = false;
  std::string line = trace_record(0, CompositeAction{3, Verb::Type, 1}, o);
  CHECK(line ==
        R"({"t":0,"action":{"element":3,"verb":"type","field":1},"reward":-0.1,"done":false,"success":null})");
  CHECK(action_from_json(to_json(CompositeAction{3, Verb::Type, 1})) ==
        CompositeAction{3, Verb::Type, 1});
}
