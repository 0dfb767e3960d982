#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qweblab/dom.hpp"
#include "qweblab/rng.hpp"

namespace qweblab {

enum class Verb { Click, Type };

struct CompositeAction {
  int element = 0;                  // a_D
  Verb verb = Verb::Click;          // a_C
  std::optional<int> field_index;   // a_T, present iff verb == Type

  bool operator==(const CompositeAction&) const = default;
};

std::string to_json(const CompositeAction& a);
CompositeAction action_from_json(const std::string& text);

struct StepOutcome {
  DomTree next_state;
  double reward = 0;
  bool done = false;
  std::optional<bool> success;  // set when done
  // decomposition: reward == reward_env + reward_shaped
  double reward_env = 0;
  double reward_shaped = 0;
};

struct EpisodeConfig {
  int max_steps = 0;           // 0 = environment default (|fields| + 3)
  double step_penalty = -0.1;
  double gamma = 0.99;
  bool shaping_enabled = false;
  uint64_t seed = 0;

  void validate() const;
};

// One sampled task: everything an episode needs.
struct EpisodeSpec {
  Instruction instruction;
  DomTree initial;
  DomTree goal;
  std::vector<int> relevant;   // reward-relevant element ids, linearization order
  std::vector<int> terminal;   // clicking any of these ends the episode
  int max_steps = 0;
};

struct EnvDef {
  std::string name;
  std::vector<std::string> keys;                       // instruction key set
  std::vector<std::string> knowledge_source;           // for RRND typing
  std::vector<std::string> token_universe;             // vocabulary closure
  std::function<EpisodeSpec(uint64_t seed)> sample;    // deterministic
};

// Pure action semantics shared by the environment, the oracle, curriculum
// tooling, and RRND. Invalid actions (unknown element, non-leaf, bad field
// index) leave the tree unchanged.
//   type    - writes the field value into the element's value attribute
//   click   - group member: activates it ("on") and clears its siblings;
//             button: toggles value between "" and "clicked";
//             anything else: no state change
DomTree apply_action(const DomTree& tree, const CompositeAction& a,
                     const Instruction& instruction);

bool action_is_valid(const DomTree& tree, const CompositeAction& a,
                     const Instruction& instruction);

// gamma * (Phi(next) - Phi(prev)) with Phi = match_count / |relevant|.
double shaped_reward(const DomTree& prev, const DomTree& next, const DomTree& goal,
                     const std::vector<int>& relevant, double gamma);

// Fraction of terminal outcomes with success == true. Throws on an empty list
// or a non-terminal entry.
double success_rate(const std::vector<StepOutcome>& outcomes);

class WebEnv {
 public:
  WebEnv(EnvDef def, EpisodeConfig cfg);

  const EnvDef& def() const { return def_; }
  const EpisodeConfig& config() const { return cfg_; }

  // Starts the next episode in the seed stream. Returns the sampled task.
  const EpisodeSpec& reset();
  // Imposed-task mode: native initial state, caller-supplied instruction and
  // goal (meta-training). The reward-relevant set stays env-native.
  const EpisodeSpec& reset_imposed(Instruction instruction, DomTree goal);

  bool active() const { return active_; }
  int t() const { return t_; }
  int max_steps() const { return ep_.max_steps; }
  const EpisodeSpec& episode() const { return ep_; }
  const Instruction& instruction() const { return ep_.instruction; }
  const DomTree& state() const { return state_; }
  const DomTree& goal() const { return ep_.goal; }
  const std::vector<int>& relevant() const { return ep_.relevant; }

  StepOutcome step(const CompositeAction& a);

  // Scripted expert: correct action for `target`, or for the first unresolved
  // relevant element in linearization order; clicks a terminal element once
  // everything matches. Throws when the episode is already over.
  CompositeAction oracle_action(std::optional<int> target = std::nullopt) const;

  bool element_matches_goal(int id) const;
  double potential() const;

  // Curriculum hooks; both mutate the current episode before stepping begins.
  void warm_start(double p, Rng& rng);
  void simulate_subgoal(int k, Rng& rng);

 private:
  CompositeAction correct_action_for(int id) const;

  EnvDef def_;
  EpisodeConfig cfg_;
  EpisodeSpec ep_;
  DomTree state_;
  int t_ = 0;
  bool active_ = false;
  uint64_t episode_counter_ = 0;
};

// Registered environment suite. Unknown names raise std::invalid_argument.
const std::map<std::string, EnvDef>& env_registry();
const EnvDef& env_def(const std::string& name);
WebEnv make_env(const std::string& name, EpisodeConfig cfg);
std::vector<std::string> env_names();

// One trace record per step: {"t", "action", "reward", "done", "success"}.
std::string trace_record(int t, const CompositeAction& a, const StepOutcome& o);

}  // namespace qweblab
