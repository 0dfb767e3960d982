#include <algorithm>
#include <cstdio>
#include <set>

#include "qweblab/env.hpp"

namespace qweblab {

namespace {

DomElement make_elem(int id, const std::string& tag, std::vector<int> children = {}) {
  DomElement e;
  e.id = id;
  e.set_attr(Attr::Tag, tag);
  e.children = std::move(children);
  return e;
}

DomElement input_elem(int id, const std::string& name) {
  DomElement e = make_elem(id, "input");
  e.set_attr(Attr::Name, name);
  e.set_attr(Attr::Id, name);
  e.set_attr(Attr::Class, "textbox");
  return e;
}

DomElement button_elem(int id, const std::string& text, const std::string& dom_id = "") {
  DomElement e = make_elem(id, "button");
  e.set_attr(Attr::Text, text);
  if (!dom_id.empty()) e.set_attr(Attr::Id, dom_id);
  return e;
}

DomElement text_elem(int id, const std::string& text, const std::string& cls = "") {
  DomElement e = make_elem(id, "text");
  e.set_attr(Attr::Text, text);
  if (!cls.empty()) e.set_attr(Attr::Class, cls);
  return e;
}

const std::vector<std::string>& airports() {
  static const std::vector<std::string> v = {
      "SFO", "LAX", "JFK", "SEA", "BOS", "ORD", "DEN", "ATL", "MIA", "DFW",
      "PHX", "LAS", "MCO", "EWR", "IAH", "CLT", "PHL", "DTW", "MSP", "PDX"};
  return v;
}

const std::vector<std::string>& dates() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (int i = 0; i < 30; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%02d/%02d/2018", i % 12 + 1, (i * 3) % 28 + 1);
      out.emplace_back(buf);
    }
    return out;
  }();
  return v;
}

const std::vector<std::string>& usernames() {
  static const std::vector<std::string> v = {
      "alice",  "bob",    "carol",  "dave",   "erin",   "frank",  "grace",
      "heidi",  "ivan",   "judy",   "karl",   "laura",  "mallory", "nina",
      "oscar",  "peggy",  "quinn",  "rachel", "steve",  "trudy",  "ursula",
      "victor", "wendy",  "xavier", "yolanda", "zach",  "amber",  "bruno",
      "clara",  "dimitri"};
  return v;
}

const std::vector<std::string>& passwords() {
  static const std::vector<std::string> v = {
      "magpie",  "harbor",  "cobalt",  "sierra",  "tundra", "velvet",
      "walnut",  "zephyr",  "quartz",  "ember",   "fjord",  "glacier",
      "hollow",  "indigo",  "juniper", "krill",   "lagoon", "meadow",
      "nectar",  "onyx",    "pebble",  "quiver",  "raven",  "saffron",
      "thicket", "umbra",   "violet",  "willow",  "yonder", "zinnia"};
  return v;
}

const std::vector<std::string>& handles() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const std::string& n : usernames()) out.push_back("@" + n);
    for (size_t i = 0; i < 20; ++i)
      out.push_back("@" + usernames()[i] + std::to_string(i + 1));
    return out;  // 50 handles
  }();
  return v;
}

const std::vector<std::string>& pie_labels() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (char c = 'a'; c <= 'z'; ++c) out.emplace_back(1, c);
    for (char c = '0'; c <= '9'; ++c) out.emplace_back(1, c);
    return out;
  }();
  return v;
}

std::vector<std::string> universe(std::initializer_list<const std::vector<std::string>*> vocabs,
                                  std::initializer_list<const char*> extra) {
  std::set<std::string> toks;
  for (const auto* v : vocabs)
    for (const std::string& s : *v)
      for (const std::string& t : tokenize(s)) toks.insert(t);
  for (const char* s : extra)
    for (const std::string& t : tokenize(s)) toks.insert(t);
  return {toks.begin(), toks.end()};
}

// --- click-dialog: one of three dialog buttons must be pressed -------------

EpisodeSpec sample_click_dialog(uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> labels = {"ok", "cancel", "close"};
  int target = static_cast<int>(rng.below(3));

  DomTree tree(0, {make_elem(0, "div", {1, 2, 3, 4}), text_elem(1, "dialog", "title"),
                   button_elem(2, "ok"), button_elem(3, "cancel"),
                   button_elem(4, "close")});
  tree.at(0).set_attr(Attr::Class, "dialog");

  EpisodeSpec ep;
  ep.instruction = Instruction{{{"target", labels[target]}}};
  ep.initial = tree;
  ep.goal = tree;
  ep.goal.at(2 + target).set_attr(Attr::Value, "clicked");
  ep.relevant = {2 + target};
  ep.terminal = {2, 3, 4};
  return ep;
}

// --- login-user -------------------------------------------------------------

EpisodeSpec sample_login_user(uint64_t seed) {
  Rng rng(seed);
  const std::string user = usernames()[rng.below(usernames().size())];
  const std::string pass = passwords()[rng.below(passwords().size())];

  DomTree tree(0, {make_elem(0, "form", {1, 2, 3}), input_elem(1, "username"),
                   input_elem(2, "password"), button_elem(3, "login", "subbtn")});
  tree.at(0).set_attr(Attr::Id, "login");

  EpisodeSpec ep;
  ep.instruction = Instruction{{{"username", user}, {"password", pass}}};
  ep.initial = tree;
  ep.goal = tree;
  ep.goal.at(1).set_attr(Attr::Value, user);
  ep.goal.at(2).set_attr(Attr::Value, pass);
  ep.relevant = {1, 2};
  ep.terminal = {3};
  return ep;
}

// --- enter-password: same secret typed into both boxes ----------------------

EpisodeSpec sample_enter_password(uint64_t seed) {
  Rng rng(seed);
  const std::string secret = passwords()[rng.below(passwords().size())];

  DomTree tree(0, {make_elem(0, "form", {1, 2, 3}), input_elem(1, "password"),
                   input_elem(2, "verify"), button_elem(3, "submit", "subbtn")});

  EpisodeSpec ep;
  ep.instruction = Instruction{{{"password", secret}, {"verify", secret}}};
  ep.initial = tree;
  ep.goal = tree;
  ep.goal.at(1).set_attr(Attr::Value, secret);
  ep.goal.at(2).set_attr(Attr::Value, secret);
  ep.relevant = {1, 2};
  ep.terminal = {3};
  return ep;
}

// --- click-pie: eight wedges, single-step episode ----------------------------

EpisodeSpec sample_click_pie(uint64_t seed) {
  Rng rng(seed);
  std::vector<int> chosen = rng.sample_indices(static_cast<int>(pie_labels().size()), 8);
  int target = static_cast<int>(rng.below(8));

  std::vector<DomElement> elems;
  elems.push_back(make_elem(0, "div", {1, 2, 3, 4, 5, 6, 7, 8}));
  elems[0].set_attr(Attr::Class, "pie");
  for (int i = 0; i < 8; ++i) {
    DomElement w = button_elem(1 + i, pie_labels()[chosen[i]]);
    w.set_attr(Attr::Class, "wedge");
    elems.push_back(w);
  }
  DomTree tree(0, std::move(elems));

  EpisodeSpec ep;
  ep.instruction = Instruction{{{"target", pie_labels()[chosen[target]]}}};
  ep.initial = tree;
  ep.goal = tree;
  ep.goal.at(1 + target).set_attr(Attr::Value, "clicked");
  ep.relevant = {1 + target};
  ep.terminal = {1, 2, 3, 4, 5, 6, 7, 8};
  ep.max_steps = 1;
  return ep;
}

// --- social-media-mini: act on every tweet of one user, then submit ---------
//
// Six tweets; correctness of a button depends on the username text of its
// sibling. The reward-relevant set is every button in the feed, so a wrong
// click fails the episode unless undone.

constexpr int kTweets = 6;
const std::vector<std::string>& tweet_verbs() {
  static const std::vector<std::string> v = {"like", "reply", "share"};
  return v;
}

EpisodeSpec sample_social_media(uint64_t seed) {
  Rng rng(seed);
  const std::string verb = tweet_verbs()[rng.below(3)];
  int matches = 1 + static_cast<int>(rng.below(3));  // 1..3 tweets by the user

  std::vector<int> users = rng.sample_indices(static_cast<int>(handles().size()),
                                              kTweets - matches + 1);
  const std::string target_user = handles()[users[0]];
  std::vector<int> slots = rng.sample_indices(kTweets, matches);
  std::sort(slots.begin(), slots.end());

  std::vector<DomElement> elems;
  elems.push_back(make_elem(0, "div", {}));
  elems[0].set_attr(Attr::Class, "feed");
  int other = 1;
  for (int i = 0; i < kTweets; ++i) {
    int base = 1 + i * 5;
    bool is_target = std::find(slots.begin(), slots.end(), i) != slots.end();
    const std::string& who = is_target ? target_user : handles()[users[other++]];
    elems.push_back(make_elem(base, "div", {base + 1, base + 2, base + 3, base + 4}));
    elems.back().set_attr(Attr::Class, "tweet");
    elems.push_back(text_elem(base + 1, who, "username"));
    for (int b = 0; b < 3; ++b) {
      DomElement btn = button_elem(base + 2 + b, tweet_verbs()[b]);
      btn.set_attr(Attr::Class, tweet_verbs()[b]);
      elems.push_back(btn);
    }
    elems[0].children.push_back(base);
  }
  int submit_id = 1 + kTweets * 5;
  elems.push_back(button_elem(submit_id, "submit", "done"));
  elems[0].children.push_back(submit_id);
  DomTree tree(0, std::move(elems));

  int verb_offset = static_cast<int>(
      std::find(tweet_verbs().begin(), tweet_verbs().end(), verb) -
      tweet_verbs().begin());

  EpisodeSpec ep;
  ep.instruction = Instruction{{{"user", target_user}, {"button", verb}}};
  ep.initial = tree;
  ep.goal = tree;
  for (int i : slots)
    ep.goal.at(1 + i * 5 + 2 + verb_offset).set_attr(Attr::Value, "clicked");
  for (int i = 0; i < kTweets; ++i)
    for (int b = 0; b < 3; ++b) ep.relevant.push_back(1 + i * 5 + 2 + b);
  ep.terminal = {submit_id};
  ep.max_steps = kTweets;  // task length
  return ep;
}

// --- book-flight-form --------------------------------------------------------

EpisodeSpec sample_book_flight(uint64_t seed) {
  Rng rng(seed);
  size_t from = rng.below(airports().size());
  size_t to = rng.below(airports().size() - 1);
  if (to >= from) ++to;  // departure differs from destination
  const std::string& date = dates()[rng.below(dates().size())];

  std::vector<DomElement> elems;
  elems.push_back(make_elem(0, "form", {1, 4, 7, 10}));
  elems[0].set_attr(Attr::Id, "book-flight");
  elems.push_back(make_elem(1, "div", {2, 3}));
  elems.back().set_attr(Attr::Class, "field");
  elems.push_back(text_elem(2, "from", "label"));
  elems.push_back(input_elem(3, "from"));
  elems.push_back(make_elem(4, "div", {5, 6}));
  elems.back().set_attr(Attr::Class, "field");
  elems.push_back(text_elem(5, "to", "label"));
  elems.push_back(input_elem(6, "to"));
  elems.push_back(make_elem(7, "div", {8, 9}));
  elems.back().set_attr(Attr::Class, "field");
  elems.push_back(text_elem(8, "departure date", "label"));
  elems.push_back(input_elem(9, "date"));
  elems.push_back(button_elem(10, "book flight", "submit"));
  DomTree tree(0, std::move(elems));

  EpisodeSpec ep;
  ep.instruction = Instruction{
      {{"from", airports()[from]}, {"to", airports()[to]}, {"date", date}}};
  ep.initial = tree;
  ep.goal = tree;
  ep.goal.at(3).set_attr(Attr::Value, airports()[from]);
  ep.goal.at(6).set_attr(Attr::Value, airports()[to]);
  ep.goal.at(9).set_attr(Attr::Value, date);
  ep.relevant = {3, 6, 9};
  ep.terminal = {10};
  return ep;
}

std::map<std::string, EnvDef> build_registry() {
  std::map<std::string, EnvDef> reg;

  reg["click-dialog"] = EnvDef{
      "click-dialog",
      {"target"},
      {"ok", "cancel", "close"},
      universe({}, {"div dialog title text button ok cancel close target clicked on"}),
      sample_click_dialog};

  reg["login-user"] = EnvDef{
      "login-user",
      {"username", "password"},
      [] {
        std::vector<std::string> ks = usernames();
        ks.insert(ks.end(), passwords().begin(), passwords().end());
        return ks;
      }(),
      universe({&usernames(), &passwords()},
               {"form input textbox username password login subbtn button clicked on"}),
      sample_login_user};

  reg["enter-password"] = EnvDef{
      "enter-password",
      {"password", "verify"},
      passwords(),
      universe({&passwords()},
               {"form input textbox password verify submit subbtn button clicked on"}),
      sample_enter_password};

  reg["click-pie"] = EnvDef{
      "click-pie",
      {"target"},
      pie_labels(),
      universe({&pie_labels()}, {"div pie wedge button target clicked on"}),
      sample_click_pie};

  reg["social-media-mini"] = EnvDef{
      "social-media-mini",
      {"user", "button"},
      handles(),
      universe({&handles(), &tweet_verbs()},
               {"div feed tweet username text button user submit done clicked on"}),
      sample_social_media};

  reg["book-flight-form"] = EnvDef{
      "book-flight-form",
      {"from", "to", "date"},
      [] {
        std::vector<std::string> ks = airports();
        ks.insert(ks.end(), dates().begin(), dates().end());
        return ks;
      }(),
      universe({&airports(), &dates()},
               {"form div field label text input textbox from to departure date "
                "book flight submit button clicked on"}),
      sample_book_flight};

  return reg;
}

}  // namespace

const std::map<std::string, EnvDef>& env_registry() {
  static const std::map<std::string, EnvDef> reg = build_registry();
  return reg;
}

const EnvDef& env_def(const std::string& name) {
  auto it = env_registry().find(name);
  if (it == env_registry().end())
    throw std::invalid_argument("unknown environment: " + name);
  return it->second;
}

WebEnv make_env(const std::string& name, EpisodeConfig cfg) {
  return WebEnv(env_def(name), cfg);
}

std::vector<std::string> env_names() {
  std::vector<std::string> out;
  for (const auto& [name, def] : env_registry()) out.push_back(name);
  return out;
}

}  // namespace qweblab
