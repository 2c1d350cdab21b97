#include "dialrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dialrl/stats.hpp"

namespace dialrl::harness {

namespace {

using domain::Action;
using domain::DialogueState;

constexpr std::size_t kNumActions = domain::kNumActions;

std::vector<mdp::ActionId> to_ids(const std::vector<Action>& actions) {
    std::vector<mdp::ActionId> ids;
    ids.reserve(actions.size());
    for (Action a : actions) ids.push_back(action_id(a));
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string format(const char* fmt, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, value);
    return buf;
}

}  // namespace

mdp::ActionId action_id(domain::Action action) {
    return static_cast<mdp::ActionId>(action);
}

std::vector<std::vector<mdp::ActionId>> allowed_table(const domain::Domain& domain) {
    const auto& states = domain.state_table;
    std::vector<std::vector<mdp::ActionId>> table(states.size());
    for (std::size_t id = 0; id + 1 < states.size(); ++id) {
        table[id] = to_ids(domain.choice_table.allowed(states.state(id)));
    }
    return table;  // terminal entry stays empty
}

// ---------------------------------------------------------------------------
// Rollouts

corpus::TrajectoryRecord run_dialogue(const domain::Domain& domain, const sim::SimConfig& config,
                                      const domain::ConfidenceThresholds& thresholds,
                                      const mdp::Policy* policy, const std::string& policy_mode,
                                      int task_id, const domain::TaskSpec& task,
                                      std::uint64_t seed, std::uint64_t dialogue_id) {
    Rng rng(seed);
    corpus::TrajectoryRecord record;
    record.dialogue_id = dialogue_id;
    record.task_id = task_id;
    record.seed = seed;
    record.policy_mode = policy_mode;

    domain::OperationsVector ops;
    const auto confirm_cb = [&](int attribute, const std::string& perceived) {
        return sim::confirm_response(task.slot(attribute), perceived, config.user, rng);
    };

    for (;;) {
        const DialogueState state = domain::estimate_state(ops);
        const auto legal = domain.choice_table.allowed(state);
        Action action;
        if (policy == nullptr) {
            action = legal[rng.uniform_index(legal.size())];
        } else {
            const auto id = domain.state_table.index_of(state);
            if (!id) throw std::logic_error("rollout reached an unindexed state " + state.digits());
            const auto& set = policy->choice[*id];
            if (set.empty()) throw std::invalid_argument("policy has no action for " + state.digits());
            action = static_cast<Action>(set[rng.uniform_index(set.size())]);
        }

        corpus::TrajStep step{state.digits(), std::string(domain::action_name(action)), 0.0};

        if (action == Action::kTell) {
            const auto binding = domain::QueryBinding::from_ops(ops);
            record.rewards = domain::evaluate_rewards(binding, task);
            record.rewards.web_feedback =
                sim::web_feedback(record.rewards.binary_completion, config.p_feedback_noise, rng);
            step.reward = record.rewards.binary_completion;
            record.steps.push_back(std::move(step));
            return record;
        }
        record.steps.push_back(std::move(step));

        const domain::ActionTraits& t = domain::traits(action);
        domain::AsrObservation obs;
        const domain::AsrObservation* obs_ptr = nullptr;
        if (t.elicits_user_turn) {
            if (t.is_confirm) {
                const auto& perceived = ops.slots[t.attribute - 1].value;
                obs.token = sim::confirm_response(task.slot(t.attribute), perceived.value_or(""),
                                                  config.user, rng);
            } else {
                const auto intent = sim::user_utterance(task, t.attribute, t.prompt, t.grammar,
                                                        config.user, rng);
                const auto asr = sim::asr_decode(intent, t.attribute, t.grammar, config.asr, rng);
                obs.slots = asr.slots;
                if (asr.confidence) {
                    obs.confidence_bin = domain::bin_confidence(*asr.confidence, thresholds);
                }
            }
            obs_ptr = &obs;
        }
        ops = domain::advance(ops, action, domain.choice_table, obs_ptr, confirm_cb).ops;
    }
}

corpus::Corpus collect(std::size_t n, const domain::Domain& domain, const sim::SimConfig& config,
                       const mdp::Policy* policy, const std::string& policy_mode,
                       std::uint64_t master_seed) {
    const auto thresholds = sim::calibrate_confidence(config);
    corpus::Corpus out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seed = derive_seed(master_seed, i);
        int task_id;
        domain::TaskSpec task;
        if (config.generalize_tasks) {
            Rng task_rng(splitmix64(seed ^ 0x7a5cULL));
            task = sim::sample_task(task_rng, true);
            task_id = 0;
        } else {
            task_id = static_cast<int>(i % sim::fixed_tasks().size()) + 1;
            task = sim::fixed_tasks()[task_id - 1];
        }
        out.push_back(run_dialogue(domain, config, thresholds, policy, policy_mode, task_id, task,
                                   seed, i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Estimation plumbing

std::vector<mdp::Trajectory> to_trajectories(const corpus::Corpus& corpus,
                                             const domain::StateTable& states) {
    std::vector<mdp::Trajectory> out;
    out.reserve(corpus.size());
    for (const auto& record : corpus) {
        mdp::Trajectory traj;
        traj.reserve(record.steps.size());
        for (std::size_t i = 0; i < record.steps.size(); ++i) {
            const auto& step = record.steps[i];
            const auto state = DialogueState::parse(step.state);
            const auto sid = state ? states.index_of(*state) : std::nullopt;
            if (!sid) throw std::runtime_error("corpus step references unknown state " + step.state);
            const auto action = domain::action_from_name(step.action);
            if (!action) throw std::runtime_error("corpus step references unknown action " + step.action);
            // A step's logged reward is the one received on *arriving* in its
            // state, so it labels the transition out of the previous step.
            // Attaching it there (rather than to the Tell transition every
            // dialogue funnels through) keeps the model's rewards, and hence
            // policy values, sensitive to how the final state was reached.
            std::size_t next;
            double reward = 0.0;
            if (i + 1 < record.steps.size()) {
                const auto next_state = DialogueState::parse(record.steps[i + 1].state);
                const auto nid = next_state ? states.index_of(*next_state) : std::nullopt;
                if (!nid) {
                    throw std::runtime_error("corpus step references unknown state " +
                                             record.steps[i + 1].state);
                }
                next = *nid;
                reward = record.steps[i + 1].reward;
            } else {
                next = states.terminal_id();
            }
            traj.push_back(mdp::TransitionStep{static_cast<mdp::StateId>(*sid),
                                               action_id(*action), reward,
                                               static_cast<mdp::StateId>(next)});
        }
        out.push_back(std::move(traj));
    }
    return out;
}

mdp::EmpiricalMdp estimate_from_corpus(const corpus::Corpus& corpus,
                                       const domain::StateTable& states) {
    return mdp::estimate_mdp(to_trajectories(corpus, states), states.size(), kNumActions);
}

// ---------------------------------------------------------------------------
// Measures

double measure_value(const corpus::TrajectoryRecord& record, const std::string& measure) {
    if (measure == "binary") return record.rewards.binary_completion;
    if (measure == "weak") return record.rewards.weak_completion;
    if (measure == "asr") return record.rewards.asr_score;
    if (measure == "web") return record.rewards.web_feedback;
    if (measure == "return") {
        double sum = 0.0;
        for (const auto& step : record.steps) sum += step.reward;
        return sum;
    }
    throw std::invalid_argument("unknown measure: " + measure);
}

std::vector<double> subject_means(const corpus::Corpus& corpus, const std::string& measure,
                                  std::size_t group_size) {
    if (group_size == 0) throw std::invalid_argument("subject_means: group_size must be positive");
    std::vector<double> means;
    for (std::size_t start = 0; start + group_size <= corpus.size(); start += group_size) {
        double sum = 0.0;
        for (std::size_t i = 0; i < group_size; ++i) {
            sum += measure_value(corpus[start + i], measure);
        }
        means.push_back(sum / static_cast<double>(group_size));
    }
    return means;
}

// ---------------------------------------------------------------------------
// Monte Carlo evaluation

McEstimate mc_evaluate(const corpus::Corpus& corpus, const mdp::Policy& policy,
                       const domain::Domain& domain, const std::string& measure,
                       bool allow_non_exploratory) {
    McEstimate estimate;
    double sum = 0.0;
    for (const auto& record : corpus) {
        if (record.policy_mode != "exploratory" && !allow_non_exploratory) {
            throw std::invalid_argument(
                "mc_evaluate: corpus record " + std::to_string(record.dialogue_id) +
                " was not collected exploratorily (pass allow_non_exploratory to override)");
        }
        bool consistent = true;
        for (const auto& step : record.steps) {
            const auto state = DialogueState::parse(step.state);
            if (!state || !domain.choice_table.is_choice_state(*state)) continue;
            const auto sid = domain.state_table.index_of(*state);
            if (!sid) throw std::runtime_error("mc_evaluate: unknown state " + step.state);
            const auto action = domain::action_from_name(step.action);
            const auto& set = policy.choice[*sid];
            if (!action ||
                std::find(set.begin(), set.end(), action_id(*action)) == set.end()) {
                consistent = false;
                break;
            }
        }
        if (consistent) {
            ++estimate.n_consistent;
            sum += measure_value(record, measure);
        }
    }
    if (estimate.n_consistent > 0) {
        estimate.mean = sum / static_cast<double>(estimate.n_consistent);
    }
    return estimate;
}

// ---------------------------------------------------------------------------
// Baselines and random policies

namespace {

mdp::Policy fixed_states_policy(const domain::Domain& domain) {
    mdp::Policy policy;
    const auto& states = domain.state_table;
    policy.choice.resize(states.size());
    policy.unlearned.assign(states.size(), false);
    for (std::size_t id = 0; id + 1 < states.size(); ++id) {
        const DialogueState& state = states.state(id);
        if (domain.choice_table.is_choice_state(state)) continue;
        policy.choice[id] = to_ids(domain.choice_table.allowed(state));
    }
    return policy;
}

bool is_confirm_pair(Action a, Action b) {
    return a == Action::kNoConf || b == Action::kNoConf;
}

Action restrictive_member(Action a, Action b) {
    return domain::traits(a).grammar == domain::GrammarType::kRestrictive ? a : b;
}

Action nonrestrictive_member(Action a, Action b) {
    return domain::traits(a).grammar == domain::GrammarType::kNonRestrictive ? a : b;
}

Action confirm_member(Action a, Action b, bool want_confirm) {
    if (want_confirm) return a == Action::kNoConf ? b : a;
    return Action::kNoConf;
}

}  // namespace

std::vector<std::pair<std::string, mdp::Policy>> baseline_policies(const domain::Domain& domain) {
    // rule(ask pair) x rule(confirm pair) per named policy
    struct Rule {
        std::string name;
        bool system_asks;  // restrictive variants for asks and reasks
        bool confirms;
    };
    const std::vector<Rule> rules = {
        {"SysNoconfirm", true, false},
        {"SysConfirm", true, true},
        {"UserNoconfirm", false, false},
        {"UserConfirm", false, true},
        // Mixed: user initiative on first asks, mixed initiative (directive +
        // nonrestrictive) on reasks, never confirming. With this policy class
        // those picks coincide with the nonrestrictive variants throughout.
        {"Mixed", false, false},
    };

    std::vector<std::pair<std::string, mdp::Policy>> out;
    for (const Rule& rule : rules) {
        mdp::Policy policy = fixed_states_policy(domain);
        for (const auto& [state, pair] : domain.choice_table.choices()) {
            const auto id = domain.state_table.index_of(state);
            Action pick;
            if (is_confirm_pair(pair.first, pair.second)) {
                pick = confirm_member(pair.first, pair.second, rule.confirms);
            } else if (rule.system_asks) {
                pick = restrictive_member(pair.first, pair.second);
            } else {
                pick = nonrestrictive_member(pair.first, pair.second);
            }
            policy.choice[*id] = {action_id(pick)};
        }
        out.emplace_back(rule.name, std::move(policy));
    }
    return out;
}

mdp::Policy random_policy(const domain::Domain& domain, Rng& rng) {
    mdp::Policy policy = fixed_states_policy(domain);
    for (const auto& [state, pair] : domain.choice_table.choices()) {
        const auto id = domain.state_table.index_of(state);
        const Action pick = rng.bernoulli(0.5) ? pair.first : pair.second;
        policy.choice[*id] = {action_id(pick)};
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Model-goodness regression

std::vector<GoodnessRow> goodness_check(const corpus::Corpus& corpus, const mdp::EmpiricalMdp& mdp,
                                        const domain::Domain& domain, std::size_t n_policies,
                                        const std::vector<std::size_t>& thresholds, Rng& rng,
                                        const std::string& measure) {
    if (n_policies < 2) throw std::invalid_argument("goodness_check: need at least 2 policies");
    const std::size_t start = domain.state_table.initial_id();

    struct Scored {
        std::size_t n_consistent;
        double mc;
        double model;
    };
    std::vector<Scored> scored;
    scored.reserve(n_policies);
    for (std::size_t i = 0; i < n_policies; ++i) {
        const mdp::Policy policy = random_policy(domain, rng);
        const auto estimate = mc_evaluate(corpus, policy, domain, measure);
        const auto value = mdp::policy_value(mdp, policy, 1.0);
        scored.push_back(Scored{estimate.n_consistent, estimate.mean.value_or(0.0),
                                value.v[start]});
    }

    std::vector<GoodnessRow> rows;
    for (std::size_t threshold : thresholds) {
        GoodnessRow row;
        row.min_consistent = threshold;
        std::vector<double> xs, ys;  // model value -> Monte Carlo estimate
        for (const Scored& s : scored) {
            if (s.n_consistent > threshold) {
                xs.push_back(s.model);
                ys.push_back(s.mc);
            }
        }
        row.qualifying = xs.size();
        if (xs.size() < 3) {
            row.insufficient = true;
        } else {
            try {
                const auto corr = stats::pearson(xs, ys);
                const auto fit = stats::linear_fit(xs, ys);
                row.corr = corr.r;
                row.p = corr.p;
                row.slope = fit.slope;
                row.intercept = fit.intercept;
            } catch (const std::invalid_argument&) {
                row.insufficient = true;  // degenerate (zero variance)
            }
        }
        rows.push_back(row);
    }
    return rows;
}

corpus::Corpus sample_from_mdp(const mdp::EmpiricalMdp& mdp, const domain::Domain& domain,
                               std::size_t n, std::uint64_t master_seed) {
    const auto& states = domain.state_table;
    const std::size_t terminal = states.terminal_id();
    corpus::Corpus out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seed = derive_seed(master_seed, i);
        Rng rng(seed);
        corpus::TrajectoryRecord record;
        record.dialogue_id = i;
        record.task_id = 0;
        record.seed = seed;
        record.policy_mode = "exploratory";

        std::size_t s = states.initial_id();
        double total_reward = 0.0;
        while (s != terminal) {
            std::vector<mdp::ActionId> observed;
            for (mdp::ActionId a = 0; a < kNumActions; ++a) {
                if (mdp.observed(static_cast<mdp::StateId>(s), a)) observed.push_back(a);
            }
            if (observed.empty()) {
                throw std::runtime_error("sample_from_mdp: dead end at state " +
                                         states.state(s).digits());
            }
            const mdp::ActionId a = observed[rng.uniform_index(observed.size())];
            const auto sid = static_cast<mdp::StateId>(s);

            // sample the successor from the empirical distribution
            const auto& successors = mdp.successors(sid, a);
            const double total = static_cast<double>(mdp.visits(sid, a));
            double u = rng.uniform() * total;
            std::size_t next = successors.rbegin()->first;
            for (const auto& [candidate, count] : successors) {
                u -= static_cast<double>(count);
                if (u < 0.0) {
                    next = candidate;
                    break;
                }
            }

            corpus::TrajStep step{states.state(s).digits(),
                                  std::string(domain::action_name(static_cast<Action>(a))), 0.0};
            // draw +-1 matching the model's mean reward for this transition;
            // zero-mean pairs contribute exactly zero to keep records clean
            if (mdp.reward(sid, a) != 0.0) {
                const double mean = std::clamp(mdp.reward(sid, a), -1.0, 1.0);
                total_reward += rng.bernoulli((mean + 1.0) / 2.0) ? 1.0 : -1.0;
            }
            if (next == terminal) {
                // the accumulated sample lands on the last step, where real
                // dialogues carry their terminal reward
                step.reward = total_reward;
                record.rewards.binary_completion = total_reward > 0.0 ? 1 : -1;
                record.rewards.weak_completion = total_reward > 0.0 ? 3 : -1;
                record.rewards.asr_score = total_reward > 0.0 ? 3.0 : 0.0;
                record.rewards.web_feedback = 0;
            }
            record.steps.push_back(std::move(step));
            s = next;
        }
        out.push_back(std::move(record));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts

void write_mdp_snapshot(const mdp::EmpiricalMdp& mdp, const domain::StateTable& states,
                        const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write mdp snapshot: " + path);
    out << "# state action visits reward_sum successors(state:count)\n";
    for (std::size_t s = 0; s + 1 < states.size(); ++s) {
        for (mdp::ActionId a = 0; a < kNumActions; ++a) {
            const auto sid = static_cast<mdp::StateId>(s);
            if (!mdp.observed(sid, a)) continue;
            out << states.state(s).digits() << ' '
                << domain::action_name(static_cast<Action>(a)) << ' ' << mdp.visits(sid, a) << ' '
                << format("%.9g", mdp.reward_sum(sid, a));
            for (const auto& [next, count] : mdp.successors(sid, a)) {
                out << ' ';
                if (next == states.terminal_id()) out << "TERMINAL";
                else out << states.state(next).digits();
                out << ':' << count;
            }
            out << '\n';
        }
    }
}

mdp::EmpiricalMdp read_mdp_snapshot(const std::string& path, const domain::StateTable& states) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mdp snapshot: " + path);
    mdp::EmpiricalMdp model(states.size(), kNumActions);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string digits, action_token;
        std::uint64_t visits = 0;
        double reward_sum = 0.0;
        if (!(row >> digits >> action_token >> visits >> reward_sum) || visits == 0) {
            throw std::runtime_error(path + ": malformed snapshot line " + std::to_string(lineno));
        }
        const auto state = DialogueState::parse(digits);
        const auto sid = state ? states.index_of(*state) : std::nullopt;
        const auto action = domain::action_from_name(action_token);
        if (!sid || !action) {
            throw std::runtime_error(path + ": unknown state or action at line " +
                                     std::to_string(lineno));
        }
        const double mean_reward = reward_sum / static_cast<double>(visits);
        std::string edge;
        std::uint64_t edge_total = 0;
        while (row >> edge) {
            const auto colon = edge.rfind(':');
            if (colon == std::string::npos) {
                throw std::runtime_error(path + ": bad successor at line " + std::to_string(lineno));
            }
            const std::string next_token = edge.substr(0, colon);
            const std::uint64_t count = std::stoull(edge.substr(colon + 1));
            std::size_t next;
            if (next_token == "TERMINAL") {
                next = states.terminal_id();
            } else {
                const auto next_state = DialogueState::parse(next_token);
                const auto nid = next_state ? states.index_of(*next_state) : std::nullopt;
                if (!nid) {
                    throw std::runtime_error(path + ": unknown successor at line " +
                                             std::to_string(lineno));
                }
                next = *nid;
            }
            // replay the counts; each step carries the mean so sums match
            for (std::uint64_t k = 0; k < count; ++k) {
                model.add_step(mdp::TransitionStep{static_cast<mdp::StateId>(*sid),
                                                   static_cast<mdp::ActionId>(*action), mean_reward,
                                                   static_cast<mdp::StateId>(next)});
            }
            edge_total += count;
        }
        if (edge_total != visits) {
            throw std::runtime_error(path + ": successor counts do not sum to visits at line " +
                                     std::to_string(lineno));
        }
    }
    return model;
}

void write_policy(const mdp::Policy& policy, const domain::Domain& domain,
                  const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write policy: " + path);
    for (const auto& [state, pair] : domain.choice_table.choices()) {
        const auto id = domain.state_table.index_of(state);
        out << state.digits();
        for (mdp::ActionId a : policy.choice[*id]) {
            out << ' ' << domain::action_name(static_cast<Action>(a));
        }
        if (policy.unlearned[*id]) out << " *";
        out << '\n';
    }
}

mdp::Policy read_policy(const std::string& path, const domain::Domain& domain) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open policy: " + path);
    mdp::Policy policy = fixed_states_policy(domain);
    std::string line;
    std::size_t lineno = 0;
    std::size_t loaded = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string digits;
        row >> digits;
        const auto state = DialogueState::parse(digits);
        const auto id = state ? domain.state_table.index_of(*state) : std::nullopt;
        if (!id || !domain.choice_table.is_choice_state(*state)) {
            throw std::runtime_error(path + ": not a choice-state at line " +
                                     std::to_string(lineno));
        }
        const auto legal = to_ids(domain.choice_table.allowed(*state));
        std::vector<mdp::ActionId> set;
        std::string token;
        bool unlearned = false;
        while (row >> token) {
            if (token == "*") {
                unlearned = true;
                continue;
            }
            const auto action = domain::action_from_name(token);
            if (!action || std::find(legal.begin(), legal.end(), action_id(*action)) == legal.end()) {
                throw std::runtime_error(path + ": action not allowed at line " +
                                         std::to_string(lineno));
            }
            set.push_back(action_id(*action));
        }
        if (set.empty()) {
            throw std::runtime_error(path + ": empty action set at line " + std::to_string(lineno));
        }
        std::sort(set.begin(), set.end());
        policy.choice[*id] = std::move(set);
        policy.unlearned[*id] = unlearned;
        ++loaded;
    }
    if (loaded != domain.choice_table.choices().size()) {
        throw std::runtime_error(path + ": policy file must cover every choice-state");
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

MeasureRow compare_measure(const corpus::Corpus& train, const corpus::Corpus& test,
                           const std::string& measure) {
    MeasureRow row;
    row.measure = measure;
    double train_sum = 0.0, test_sum = 0.0;
    for (const auto& record : train) train_sum += measure_value(record, measure);
    for (const auto& record : test) test_sum += measure_value(record, measure);
    row.train_mean = train.empty() ? 0.0 : train_sum / static_cast<double>(train.size());
    row.test_mean = test.empty() ? 0.0 : test_sum / static_cast<double>(test.size());
    row.delta = row.test_mean - row.train_mean;
    const auto a = subject_means(train, measure);
    const auto b = subject_means(test, measure);
    row.p = (a.size() >= 2 && b.size() >= 2) ? stats::welch_t_test(a, b).p : 1.0;
    return row;
}

corpus::Corpus filter_tasks(const corpus::Corpus& corpus, int lo, int hi) {
    corpus::Corpus out;
    for (const auto& record : corpus) {
        if (record.task_id >= lo && record.task_id <= hi) out.push_back(record);
    }
    return out;
}

void render_rows(std::ostringstream& out, const std::string& title,
                 const std::vector<MeasureRow>& rows) {
    out << title << '\n';
    out << "measure      train_mean   test_mean    delta        p\n";
    for (const MeasureRow& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-12s %12.6f %12.6f %12.6f %12.6f\n",
                      row.measure.c_str(), row.train_mean, row.test_mean, row.delta, row.p);
        out << buf;
    }
    out << '\n';
}

}  // namespace

EvaluationReport run_pipeline(const PipelineConfig& config, const domain::Domain& domain) {
    config.sim.validate();
    EvaluationReport report;

    const corpus::Corpus train = collect(config.n_train, domain, config.sim, nullptr,
                                         "exploratory", derive_seed(config.master_seed, 1000001));
    const auto model = estimate_from_corpus(train, domain.state_table);
    const auto qtable = mdp::value_iterate(model, 1.0, 1e-9);
    const auto allowed = allowed_table(domain);
    const mdp::Policy learned = mdp::greedy_policy(qtable, 1e-9, &allowed);
    const corpus::Corpus test = collect(config.n_test, domain, config.sim, &learned,
                                        "fixed:learned", derive_seed(config.master_seed, 2000003));

    const std::vector<std::string> measures = {"binary", "weak", "asr", "web"};
    for (const auto& measure : measures) report.rows.push_back(compare_measure(train, test, measure));

    const corpus::Corpus train12 = filter_tasks(train, 1, 2);
    const corpus::Corpus test12 = filter_tasks(test, 1, 2);
    const corpus::Corpus train36 = filter_tasks(train, 3, 6);
    const corpus::Corpus test36 = filter_tasks(test, 3, 6);
    for (const auto& measure : measures) {
        report.tasks_12.push_back(compare_measure(train12, test12, measure));
        report.tasks_36.push_back(compare_measure(train36, test36, measure));
    }

    const std::size_t start = domain.state_table.initial_id();
    report.learned_value = mdp::policy_value(model, learned, 1.0).v[start];
    for (const auto& [name, policy] : baseline_policies(domain)) {
        report.baseline_values.emplace_back(name, mdp::policy_value(model, policy, 1.0).v[start]);
    }

    if (config.n_goodness_policies > 0) {
        Rng rng(derive_seed(config.master_seed, 3000005));
        report.goodness = goodness_check(train, model, domain, config.n_goodness_policies,
                                         config.thresholds, rng);
    }

    std::ostringstream text;
    text << "dialogue policy optimization report\n";
    text << "seed = " << config.master_seed << ", train n = " << config.n_train
         << ", test n = " << config.n_test << '\n';
    text << "significance: Welch two-sample t-test (unpooled variances) over subject means, "
         << "subjects = consecutive groups of " << kSubjectGroupSize << " dialogues\n\n";
    render_rows(text, "[all tasks]", report.rows);
    render_rows(text, "[tasks 1-2]", report.tasks_12);
    render_rows(text, "[tasks 3-6]", report.tasks_36);

    text << "[model values at the start state]\n";
    {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-14s %12.6f\n", "learned", report.learned_value);
        text << buf;
        for (const auto& [name, value] : report.baseline_values) {
            std::snprintf(buf, sizeof(buf), "%-14s %12.6f\n", name.c_str(), value);
            text << buf;
        }
    }
    text << '\n';

    if (!report.goodness.empty()) {
        text << "[model goodness: Monte Carlo vs model value over random policies]\n";
        text << "min_consistent  policies     corr            p        slope    intercept\n";
        for (const GoodnessRow& row : report.goodness) {
            char buf[160];
            if (row.insufficient) {
                std::snprintf(buf, sizeof(buf), "%14zu %9zu  insufficient\n", row.min_consistent,
                              row.qualifying);
            } else {
                std::snprintf(buf, sizeof(buf), "%14zu %9zu %9.6f %12.6g %12.6f %12.6f\n",
                              row.min_consistent, row.qualifying, row.corr, row.p, row.slope,
                              row.intercept);
            }
            text << buf;
        }
        text << '\n';
    }
    report.text = text.str();

    if (!config.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(config.out_dir);
        corpus::save_file(train, config.out_dir + "/train.jsonl");
        corpus::save_file(test, config.out_dir + "/test.jsonl");
        write_mdp_snapshot(model, domain.state_table, config.out_dir + "/mdp.txt");
        write_policy(learned, domain, config.out_dir + "/policy.txt");
        std::ofstream rep(config.out_dir + "/report.txt", std::ios::trunc);
        if (!rep) throw std::runtime_error("cannot write report");
        rep << report.text;
    }
    return report;
}

}  // namespace dialrl::harness
