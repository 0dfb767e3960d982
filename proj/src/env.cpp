#include "qweblab/env.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace qweblab {

void EpisodeConfig::validate() const {
  if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
  if (step_penalty > 0) throw std::invalid_argument("step_penalty must be <= 0");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("gamma must be in (0, 1]");
}

std::string to_json(const CompositeAction& a) {
  nlohmann::ordered_json j;
  j["element"] = a.element;
  j["verb"] = a.verb == Verb::Click ? "click" : "type";
  if (a.field_index) j["field"] = *a.field_index;
  return j.dump();
}

CompositeAction action_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  CompositeAction a;
  a.element = j.at("element").get<int>();
  a.verb = j.at("verb").get<std::string>() == "type" ? Verb::Type : Verb::Click;
  if (j.contains("field")) a.field_index = j.at("field").get<int>();
  return a;
}

bool action_is_valid(const DomTree& tree, const CompositeAction& a,
                     const Instruction& instruction) {
  if (!tree.contains(a.element) || !tree.at(a.element).is_leaf()) return false;
  if (a.verb == Verb::Type) {
    if (!a.field_index) return false;
    if (*a.field_index < 0 ||
        *a.field_index >= static_cast<int>(instruction.fields.size()))
      return false;
  }
  return true;
}

DomTree apply_action(const DomTree& tree, const CompositeAction& a,
                     const Instruction& instruction) {
  if (!action_is_valid(tree, a, instruction)) return tree;
  DomTree next = tree;
  DomElement& e = next.at(a.element);
  if (a.verb == Verb::Type) {
    e.set_attr(Attr::Value, instruction.fields[*a.field_index].value);
    return next;
  }
  if (e.group) {
    int parent = next.parent_of(a.element);
    for (int sib : next.at(parent).children) {
      DomElement& s = next.at(sib);
      if (s.group == e.group) s.set_attr(Attr::Value, sib == a.element ? "on" : "");
    }
    return next;
  }
  if (e.attr(Attr::Tag) == "button") {
    e.set_attr(Attr::Value, e.attr(Attr::Value) == "clicked" ? "" : "clicked");
  }
  return next;
}

double shaped_reward(const DomTree& prev, const DomTree& next, const DomTree& goal,
                     const std::vector<int>& relevant, double gamma) {
  if (relevant.empty()) throw std::invalid_argument("empty reward-relevant set");
  double n = static_cast<double>(relevant.size());
  double phi_prev = match_count(prev, goal, relevant) / n;
  double phi_next = match_count(next, goal, relevant) / n;
  return gamma * (phi_next - phi_prev);
}

double success_rate(const std::vector<StepOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes");
  int ok = 0;
  for (const StepOutcome& o : outcomes) {
    if (!o.done || !o.success) throw std::invalid_argument("non-terminal outcome");
    if (*o.success) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

WebEnv::WebEnv(EnvDef def, EpisodeConfig cfg) : def_(std::move(def)), cfg_(cfg) {
  cfg_.validate();
}

const EpisodeSpec& WebEnv::reset() {
  uint64_t ep_seed = derive_seed(cfg_.seed, "episode", episode_counter_++);
  ep_ = def_.sample(ep_seed);
  if (cfg_.max_steps > 0) ep_.max_steps = cfg_.max_steps;
  if (ep_.max_steps == 0)
    ep_.max_steps = static_cast<int>(ep_.instruction.fields.size()) + 3;
  state_ = ep_.initial;
  t_ = 0;
  active_ = true;
  return ep_;
}

const EpisodeSpec& WebEnv::reset_imposed(Instruction instruction, DomTree goal) {
  reset();
  instruction.validate();
  goal.validate();
  ep_.instruction = std::move(instruction);
  ep_.goal = std::move(goal);
  return ep_;
}

StepOutcome WebEnv::step(const CompositeAction& a) {
  if (!active_) throw std::logic_error("step on a finished episode");
  DomTree next = apply_action(state_, a, ep_.instruction);
  ++t_;

  bool terminal_click =
      a.verb == Verb::Click && action_is_valid(state_, a, ep_.instruction) &&
      std::find(ep_.terminal.begin(), ep_.terminal.end(), a.element) !=
          ep_.terminal.end();
  bool done = terminal_click || t_ >= ep_.max_steps;

  StepOutcome out;
  out.reward_env = cfg_.step_penalty;
  if (done) {
    bool ok = match_count(next, ep_.goal, ep_.relevant) ==
              static_cast<int>(ep_.relevant.size());
    out.reward_env += ok ? 1.0 : -1.0;
    out.success = ok;
    active_ = false;
  }
  if (cfg_.shaping_enabled)
    out.reward_shaped = shaped_reward(state_, next, ep_.goal, ep_.relevant, cfg_.gamma);

  out.reward = out.reward_env + out.reward_shaped;
  out.done = done;
  state_ = std::move(next);
  out.next_state = state_;
  return out;
}

bool WebEnv::element_matches_goal(int id) const {
  return state_.at(id).attrs == ep_.goal.at(id).attrs;
}

double WebEnv::potential() const {
  return match_count(state_, ep_.goal, ep_.relevant) /
         static_cast<double>(ep_.relevant.size());
}

CompositeAction WebEnv::correct_action_for(int id) const {
  const DomElement& e = state_.at(id);
  const DomElement& g = ep_.goal.at(id);
  if (e.attr(Attr::Tag) == "input") {
    for (size_t f = 0; f < ep_.instruction.fields.size(); ++f)
      if (ep_.instruction.fields[f].value == g.attr(Attr::Value))
        return CompositeAction{id, Verb::Type, static_cast<int>(f)};
    throw std::logic_error("oracle: no instruction field produces the goal value");
  }
  if (e.group) {
    int parent = state_.parent_of(id);
    for (int sib : state_.at(parent).children)
      if (state_.at(sib).group == e.group &&
          ep_.goal.at(sib).attr(Attr::Value) == "on")
        return CompositeAction{sib, Verb::Click, std::nullopt};
    throw std::logic_error("oracle: goal has no active member for group");
  }
  return CompositeAction{id, Verb::Click, std::nullopt};
}

CompositeAction WebEnv::oracle_action(std::optional<int> target) const {
  if (!active_) throw std::logic_error("oracle on a finished episode");
  if (target) return correct_action_for(*target);
  for (int id : ep_.relevant)
    if (!element_matches_goal(id)) return correct_action_for(id);
  if (ep_.terminal.empty())
    throw std::logic_error("episode already solved and has no terminal element");
  return CompositeAction{ep_.terminal.front(), Verb::Click, std::nullopt};
}

void WebEnv::warm_start(double p, Rng& rng) {
  for (int id : ep_.relevant) {
    bool probe = rng.bernoulli(p);
    if (probe && !element_matches_goal(id))
      state_ = apply_action(state_, correct_action_for(id), ep_.instruction);
  }
}

void WebEnv::simulate_subgoal(int k, Rng& rng) {
  int n = static_cast<int>(ep_.relevant.size());
  if (k < 1 || k > n) throw std::invalid_argument("subgoal size out of range");
  std::vector<int> chosen_idx = rng.sample_indices(n, k);
  std::sort(chosen_idx.begin(), chosen_idx.end());
  // correct actions (judged against the original goal) applied to a copy of
  // the untouched initial state; the live state stays as it is
  DomTree subgoal = state_;
  std::vector<int> chosen;
  for (int i : chosen_idx) {
    int id = ep_.relevant[i];
    chosen.push_back(id);
    if (!element_matches_goal(id))
      subgoal = apply_action(subgoal, correct_action_for(id), ep_.instruction);
  }
  ep_.goal = std::move(subgoal);
  ep_.relevant = std::move(chosen);
}

std::string trace_record(int t, const CompositeAction& a, const StepOutcome& o) {
  nlohmann::ordered_json j;
  j["t"] = t;
  j["action"] = nlohmann::ordered_json::parse(to_json(a));
  j["reward"] = o.reward;
  j["done"] = o.done;
  j["success"] = o.success ? nlohmann::ordered_json(*o.success)
                           : nlohmann::ordered_json(nullptr);
  return j.dump();
}

}  // namespace qweblab
