#include "dialrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dialrl::mdp {

namespace {

const std::map<StateId, std::uint64_t> kNoSuccessors;

// Cycle check over observed transitions, ignoring self-loops on absorbing
// states (states whose every observed transition returns to themselves).
bool has_cycle(const EmpiricalMdp& mdp) {
    const std::size_t n = mdp.n_states();
    std::vector<std::vector<StateId>> out(n);
    for (StateId s = 0; s < n; ++s) {
        bool absorbing = true;
        bool any = false;
        for (ActionId a = 0; a < mdp.n_actions(); ++a) {
            for (const auto& [next, count] : mdp.successors(s, a)) {
                any = true;
                if (next != s) absorbing = false;
            }
        }
        if (!any) continue;
        for (ActionId a = 0; a < mdp.n_actions(); ++a) {
            for (const auto& [next, count] : mdp.successors(s, a)) {
                if (next == s && absorbing) continue;
                out[s].push_back(next);
            }
        }
    }
    // iterative DFS, colors: 0 white, 1 on stack, 2 done
    std::vector<int> color(n, 0);
    std::vector<std::pair<StateId, std::size_t>> stack;
    for (StateId root = 0; root < n; ++root) {
        if (color[root] != 0) continue;
        stack.emplace_back(root, 0);
        color[root] = 1;
        while (!stack.empty()) {
            auto& [s, i] = stack.back();
            if (i < out[s].size()) {
                StateId next = out[s][i++];
                if (color[next] == 1) return true;
                if (color[next] == 0) {
                    color[next] = 1;
                    stack.emplace_back(next, 0);
                }
            } else {
                color[s] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

}  // namespace

EmpiricalMdp::EmpiricalMdp(std::size_t n_states, std::size_t n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      visits_(n_states * n_actions, 0),
      reward_sum_(n_states * n_actions, 0.0),
      transitions_(n_states * n_actions) {}

std::uint64_t EmpiricalMdp::visits(StateId s, ActionId a) const {
    return visits_[s * n_actions_ + a];
}

std::uint64_t EmpiricalMdp::transition_count(StateId s, ActionId a, StateId next) const {
    const auto& m = transitions_[s * n_actions_ + a];
    auto it = m.find(next);
    return it == m.end() ? 0 : it->second;
}

double EmpiricalMdp::reward_sum(StateId s, ActionId a) const {
    return reward_sum_[s * n_actions_ + a];
}

double EmpiricalMdp::transition_prob(StateId s, ActionId a, StateId next) const {
    const std::uint64_t v = visits(s, a);
    if (v == 0) return 0.0;
    return static_cast<double>(transition_count(s, a, next)) / static_cast<double>(v);
}

double EmpiricalMdp::reward(StateId s, ActionId a) const {
    const std::uint64_t v = visits(s, a);
    if (v == 0) return 0.0;
    return reward_sum(s, a) / static_cast<double>(v);
}

const std::map<StateId, std::uint64_t>& EmpiricalMdp::successors(StateId s, ActionId a) const {
    if (s >= n_states_ || a >= n_actions_) return kNoSuccessors;
    return transitions_[s * n_actions_ + a];
}

void EmpiricalMdp::add_step(const TransitionStep& step) {
    const std::size_t idx = step.s * n_actions_ + step.a;
    visits_[idx] += 1;
    reward_sum_[idx] += step.r;
    transitions_[idx][step.next] += 1;
}

EmpiricalMdp estimate_mdp(const std::vector<Trajectory>& trajectories,
                          std::size_t n_states, std::size_t n_actions) {
    EmpiricalMdp mdp(n_states, n_actions);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        for (const TransitionStep& step : trajectories[i]) {
            if (step.s >= n_states || step.next >= n_states || step.a >= n_actions) {
                throw std::invalid_argument("estimate_mdp: invalid state/action id in trajectory " +
                                            std::to_string(i));
            }
            mdp.add_step(step);
        }
    }
    return mdp;
}

bool QTable::observed(StateId s, ActionId a) const {
    return !std::isnan(q[s * n_actions + a]);
}

double QTable::state_value(StateId s) const {
    double best = 0.0;
    bool any = false;
    for (ActionId a = 0; a < n_actions; ++a) {
        const double v = q[s * n_actions + a];
        if (std::isnan(v)) continue;
        if (!any || v > best) best = v;
        any = true;
    }
    return any ? best : 0.0;
}

QTable value_iterate(const EmpiricalMdp& mdp, double gamma, double threshold) {
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("value_iterate: gamma outside [0,1]");
    if (!(threshold > 0.0)) throw std::invalid_argument("value_iterate: threshold must be positive");
    if (gamma == 1.0 && has_cycle(mdp)) {
        throw std::invalid_argument(
            "value_iterate: gamma=1 requires an acyclic transition graph (cycle detected)");
    }

    const std::size_t ns = mdp.n_states();
    const std::size_t na = mdp.n_actions();
    QTable table;
    table.n_states = ns;
    table.n_actions = na;
    table.gamma = gamma;
    table.q.assign(ns * na, std::numeric_limits<double>::quiet_NaN());
    for (StateId s = 0; s < ns; ++s)
        for (ActionId a = 0; a < na; ++a)
            if (mdp.observed(s, a)) table.q[s * na + a] = 0.0;

    // With an acyclic graph this converges in at most (longest path) sweeps.
    const std::size_t max_sweeps = std::max<std::size_t>(ns + 2, 100000);
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (StateId s = 0; s < ns; ++s) {
            for (ActionId a = 0; a < na; ++a) {
                if (!mdp.observed(s, a)) continue;
                double backup = mdp.reward(s, a);
                if (gamma > 0.0) {
                    const double v = static_cast<double>(mdp.visits(s, a));
                    for (const auto& [next, count] : mdp.successors(s, a)) {
                        backup += gamma * (static_cast<double>(count) / v) * table.state_value(next);
                    }
                }
                delta = std::max(delta, std::abs(backup - table.q[s * na + a]));
                table.q[s * na + a] = backup;
            }
        }
        table.sweeps = sweep + 1;
        if (delta < threshold) return table;
    }
    throw std::runtime_error("value_iterate: failed to converge");
}

bool Policy::deterministic() const {
    for (const auto& set : choice)
        if (set.size() > 1) return false;
    return true;
}

Policy greedy_policy(const QTable& qtable, double tie_epsilon,
                     const std::vector<std::vector<ActionId>>* allowed) {
    if (tie_epsilon < 0.0) throw std::invalid_argument("greedy_policy: tie_epsilon must be >= 0");
    Policy policy;
    policy.choice.resize(qtable.n_states);
    policy.unlearned.assign(qtable.n_states, false);
    for (StateId s = 0; s < qtable.n_states; ++s) {
        double best = 0.0;
        bool any = false;
        for (ActionId a = 0; a < qtable.n_actions; ++a) {
            if (!qtable.observed(s, a)) continue;
            const double v = qtable.value(s, a);
            if (!any || v > best) best = v;
            any = true;
        }
        if (!any) {
            if (allowed && s < allowed->size() && !(*allowed)[s].empty()) {
                policy.choice[s] = (*allowed)[s];
                policy.unlearned[s] = true;
            }
            continue;
        }
        for (ActionId a = 0; a < qtable.n_actions; ++a) {
            if (qtable.observed(s, a) && qtable.value(s, a) >= best - tie_epsilon)
                policy.choice[s].push_back(a);
        }
    }
    return policy;
}

PolicyValue policy_value(const EmpiricalMdp& mdp, const Policy& policy, double gamma) {
    if (gamma == 1.0 && has_cycle(mdp)) {
        throw std::invalid_argument(
            "policy_value: gamma=1 requires an acyclic transition graph (cycle detected)");
    }
    const std::size_t ns = mdp.n_states();
    PolicyValue result;
    result.v.assign(ns, 0.0);
    std::vector<bool> valued(ns, false);

    const std::size_t max_sweeps = std::max<std::size_t>(ns + 2, 100000);
    const double threshold = 1e-12;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (StateId s = 0; s < ns; ++s) {
            if (s >= policy.choice.size() || policy.choice[s].empty()) continue;
            double sum = 0.0;
            std::size_t n_observed = 0;
            for (ActionId a : policy.choice[s]) {
                if (!mdp.observed(s, a)) continue;
                double backup = mdp.reward(s, a);
                if (gamma > 0.0) {
                    const double visits = static_cast<double>(mdp.visits(s, a));
                    for (const auto& [next, count] : mdp.successors(s, a))
                        backup += gamma * (static_cast<double>(count) / visits) * result.v[next];
                }
                sum += backup;
                ++n_observed;
            }
            if (n_observed == 0) continue;
            valued[s] = true;
            const double v = sum / static_cast<double>(n_observed);
            delta = std::max(delta, std::abs(v - result.v[s]));
            result.v[s] = v;
        }
        if (delta < threshold) break;
    }
    for (StateId s = 0; s < ns; ++s) {
        if (!valued[s]) result.unvalued.push_back(s);
    }
    return result;
}

}  // namespace dialrl::mdp
