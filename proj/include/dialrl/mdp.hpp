#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Domain-agnostic tabular MDP machinery: empirical estimation from logged
// trajectories, Q-value iteration, greedy policy extraction and policy
// evaluation. States and actions are dense indices into tables owned by the
// caller.

namespace dialrl::mdp {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// One logged exchange: in state `s` the system took `a`, received reward `r`
/// and moved to `next`.
struct TransitionStep {
    StateId s = 0;
    ActionId a = 0;
    double r = 0.0;
    StateId next = 0;
};

using Trajectory = std::vector<TransitionStep>;

/// Counts and reward sums over (state, action) pairs. Transition
/// probabilities and expected rewards are derived lazily from the counts.
class EmpiricalMdp {
  public:
    EmpiricalMdp(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }

    std::uint64_t visits(StateId s, ActionId a) const;
    std::uint64_t transition_count(StateId s, ActionId a, StateId next) const;
    double reward_sum(StateId s, ActionId a) const;

    bool observed(StateId s, ActionId a) const { return visits(s, a) > 0; }

    /// transition_count / visits; 0 for unobserved pairs.
    double transition_prob(StateId s, ActionId a, StateId next) const;
    /// reward_sum / visits; only meaningful when observed.
    double reward(StateId s, ActionId a) const;

    /// Successor states with nonzero counts, ordered by state id.
    const std::map<StateId, std::uint64_t>& successors(StateId s, ActionId a) const;

    void add_step(const TransitionStep& step);

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    // indexed [s * n_actions + a]
    std::vector<std::uint64_t> visits_;
    std::vector<double> reward_sum_;
    std::vector<std::map<StateId, std::uint64_t>> transitions_;
};

/// Builds the empirical model by counting over the trajectory multiset.
/// Throws std::invalid_argument naming the offending trajectory index when a
/// step references an out-of-range state or action id. An empty input yields
/// a valid all-unobserved model.
EmpiricalMdp estimate_mdp(const std::vector<Trajectory>& trajectories,
                          std::size_t n_states, std::size_t n_actions);

/// Q(s,a) for observed pairs; unobserved pairs carry NaN and never enter the
/// inner maximum.
struct QTable {
    std::vector<double> q;  // [s * n_actions + a], NaN = unobserved
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    double gamma = 1.0;
    std::size_t sweeps = 0;  // sweeps until convergence

    bool observed(StateId s, ActionId a) const;
    double value(StateId s, ActionId a) const { return q[s * n_actions + a]; }
    /// max over observed actions at s; 0 when none observed.
    double state_value(StateId s) const;
};

/// Q-value iteration to a max-norm threshold. With gamma = 1 the observed
/// transition graph must be acyclic apart from self-absorbing states;
/// a detected cycle is rejected with std::invalid_argument.
QTable value_iterate(const EmpiricalMdp& mdp, double gamma, double threshold);

/// Mapping from states to non-empty allowed-action subsets. Singleton sets
/// everywhere means the policy is deterministic; larger sets are resolved
/// uniformly at random by executors.
struct Policy {
    std::vector<std::vector<ActionId>> choice;  // per state, sorted
    std::vector<bool> unlearned;                // true where choice fell back to the full allowed set

    bool deterministic() const;
};

/// choice(s) = observed actions within tie_epsilon of the best Q at s.
/// States where every action is unobserved fall back to `allowed[s]` (flagged
/// unlearned) when an allowed table is given, else stay empty.
Policy greedy_policy(const QTable& qtable, double tie_epsilon,
                     const std::vector<std::vector<ActionId>>* allowed = nullptr);

/// V(s) under the policy, averaging uniformly over tie-sets. States whose
/// policy actions are all unobserved get V = 0 and are reported in
/// `unvalued`. Same gamma = 1 acyclicity requirement as value_iterate.
struct PolicyValue {
    std::vector<double> v;
    std::vector<StateId> unvalued;
};
PolicyValue policy_value(const EmpiricalMdp& mdp, const Policy& policy, double gamma);

}  // namespace dialrl::mdp
