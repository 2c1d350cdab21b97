// Acceptance gate: each numbered check prints one PASS/FAIL line; the exit
// status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dialrl/domain.hpp"
#include "dialrl/harness.hpp"
#include "dialrl/mdp.hpp"
#include "dialrl/rng.hpp"
#include "dialrl/stats.hpp"
#include "dialrl/user_sim.hpp"

using namespace dialrl;

namespace {

int g_failures = 0;

void criterion(int number, const char* name, const std::function<bool(std::string&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", number, name, seconds,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

const domain::Domain& dom() {
    static const domain::Domain d = domain::Domain::load(DIALRL_DATA_DIR);
    return d;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// --- independent statistics oracles (quadrature + long double formulas) ----

double t_tail_oracle(double t, double df) {
    // Simpson's rule after x = |t| + tan(theta), mapping the infinite tail onto
    // a finite interval so no mass is truncated.
    const double lo = std::fabs(t);
    const int n = 100000;  // even
    const double hi_theta = M_PI / 2.0 - 1e-9;
    const double h = hi_theta / n;
    const double log_norm =
        std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * M_PI);
    auto integrand = [&](double theta) {
        const double x = lo + std::tan(theta);
        const double sec2 = 1.0 + std::tan(theta) * std::tan(theta);
        return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df)) * sec2;
    };
    double sum = integrand(0.0) + integrand(hi_theta);
    for (int i = 1; i < n; ++i) sum += integrand(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return 2.0 * sum * h / 3.0;
}

long double mean_ld(const std::vector<double>& xs) {
    long double s = 0.0L;
    for (double x : xs) s += x;
    return s / static_cast<long double>(xs.size());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// ---------------------------------------------------------------------------

bool check_rewards(std::string& detail) {
    const domain::TaskSpec task{"wineries", "Lambertville", "morning"};
    domain::QueryBinding query;
    query.slots = {std::nullopt, std::nullopt, std::string("morning")};
    const auto partial = domain::evaluate_rewards(query, task);
    query.slots = {task.activity, task.location, task.time};
    const auto perfect = domain::evaluate_rewards(query, task);
    const auto empty = domain::evaluate_rewards(domain::QueryBinding{}, task);
    const bool ok = partial.binary_completion == -1 && partial.weak_completion == 1 &&
                    partial.asr_score == 2.0 && perfect.binary_completion == 1 &&
                    perfect.weak_completion == 3 && perfect.asr_score == 3.0 &&
                    empty.binary_completion == -1 && empty.weak_completion == 0 &&
                    empty.asr_score == 1.5;
    if (!ok) detail = "reward triples do not match the worked examples";
    return ok;
}

bool check_trace(std::string& detail) {
    using domain::Action;
    const domain::TaskSpec task{"museums", "Morristown", "afternoon"};
    const auto& table = dom().choice_table;
    domain::OperationsVector ops;
    std::vector<std::string> states;
    std::vector<std::string> actions;

    auto act = [&](Action action, const domain::AsrObservation* obs) {
        states.push_back(domain::estimate_state(ops).digits());
        actions.push_back(std::string(domain::action_name(action)));
        if (action != Action::kTell) {
            ops = domain::advance(ops, action, table, obs, nullptr).ops;
        }
    };

    domain::AsrObservation greeting;
    greeting.slots = {{1, task.activity}, {2, task.location}, {3, task.time}};
    greeting.confidence_bin = 2;
    act(Action::kGreetU, &greeting);
    act(Action::kNoConf, nullptr);
    domain::AsrObservation yes;
    yes.token = domain::ConfirmToken::kYes;
    act(Action::kExpConf2, &yes);
    act(Action::kExpConf3, &yes);
    act(Action::kTell, nullptr);

    const std::vector<std::string> want_states = {"0100000", "1121000", "1221001", "1321001",
                                                  "1400000"};
    const std::vector<std::string> want_actions = {"GreetU", "NoConf", "ExpConf2", "ExpConf3",
                                                   "Tell"};
    const auto rewards = domain::evaluate_rewards(domain::QueryBinding::from_ops(ops), task);
    if (states != want_states || actions != want_actions) {
        detail = "trace:";
        for (std::size_t i = 0; i < states.size(); ++i) detail += " " + states[i] + "/" + actions[i];
        return false;
    }
    if (rewards.binary_completion != 1) {
        detail = "terminal reward is not 1";
        return false;
    }
    return true;
}

bool check_structure(std::string& detail) {
    const auto states = domain::enumerate_reachable_states(dom().choice_table);
    int choice = 0;
    for (const auto& s : states) {
        if (dom().choice_table.is_choice_state(s)) ++choice;
    }
    detail = "states=" + std::to_string(states.size()) + " choice=" + std::to_string(choice);
    return states.size() == 62 && choice == 42;
}

bool check_solver(std::string& detail) {
    Rng rng(20260826);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n_states = 3 + rng.uniform_index(6);   // <= 8
        const std::size_t n_actions = 1 + rng.uniform_index(3);  // <= 3
        mdp::EmpiricalMdp model(n_states, n_actions);
        std::vector<std::vector<mdp::ActionId>> observed(n_states);
        for (mdp::StateId s = 0; s + 1 < n_states; ++s) {
            const std::size_t k = 1 + rng.uniform_index(n_actions);
            for (mdp::ActionId a = 0; a < k; ++a) {
                observed[s].push_back(a);
                const double reward = rng.uniform() * 2.0 - 1.0;
                const std::size_t samples = 1 + rng.uniform_index(4);
                for (std::size_t i = 0; i < samples; ++i) {
                    const auto next = static_cast<mdp::StateId>(
                        s + 1 + rng.uniform_index(n_states - s - 1));
                    model.add_step({s, a, reward, next});
                }
            }
        }

        // exhaustive enumeration of every deterministic policy
        std::vector<std::size_t> pick(n_states, 0);
        double best = -1e300;
        for (;;) {
            std::vector<double> value(n_states, 0.0);
            for (mdp::StateId s = static_cast<mdp::StateId>(n_states); s-- > 0;) {
                if (observed[s].empty()) continue;
                const mdp::ActionId a = observed[s][pick[s]];
                double v = model.reward(s, a);
                for (const auto& [next, count] : model.successors(s, a)) {
                    v += model.transition_prob(s, a, next) * value[next];
                }
                value[s] = v;
            }
            best = std::max(best, value[0]);
            // odometer over the policy space
            std::size_t i = 0;
            while (i < n_states && (observed[i].empty() || ++pick[i] == observed[i].size())) {
                pick[i] = 0;
                ++i;
            }
            if (i >= n_states) break;
        }

        const auto q = mdp::value_iterate(model, 1.0, 1e-12);
        const auto policy = mdp::greedy_policy(q, 1e-9);
        const double greedy_value = mdp::policy_value(model, policy, 1.0).v[0];
        if (!close(greedy_value, best, 1e-9) || !close(q.state_value(0), best, 1e-9)) {
            detail = "trial " + std::to_string(trial) + ": greedy " + std::to_string(greedy_value) +
                     " vs enumerated " + std::to_string(best);
            return false;
        }
    }
    return true;
}

bool check_exploration_balance(std::string& detail) {
    sim::SimConfig config;
    const auto corpus = harness::collect(311, dom(), config, nullptr, "exploratory", 1961);
    std::uint64_t greet_s = 0;
    for (const auto& record : corpus) {
        if (record.steps.front().action == "GreetS") ++greet_s;
    }
    const double p = stats::binomial_two_sided_p(greet_s, 311, 0.5);
    detail = "GreetS=" + std::to_string(greet_s) + "/311, binomial p=" + std::to_string(p);
    return p >= 0.001;
}

bool check_improvement(std::string& detail) {
    harness::PipelineConfig config;
    config.n_train = 2000;
    config.n_test = 2000;
    config.master_seed = 20250101;
    const auto report = harness::run_pipeline(config, dom());
    const auto& binary = report.rows[0];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "binary %.4f -> %.4f, p=%.4g", binary.train_mean,
                  binary.test_mean, binary.p);
    detail = buf;
    if (!(binary.test_mean > binary.train_mean) || !(binary.p < 0.05)) return false;
    for (const auto& [name, value] : report.baseline_values) {
        if (report.learned_value < value - 1e-9) {
            detail += "; learned value below " + name;
            return false;
        }
    }
    return true;
}

bool check_goodness(std::string& detail) {
    sim::SimConfig config;
    const auto train = harness::collect(2000, dom(), config, nullptr, "exploratory", 77007);
    const auto model = harness::estimate_from_corpus(train, dom().state_table);
    const auto synthetic = harness::sample_from_mdp(model, dom(), 5000, 555000111);
    Rng rng(424243);
    const auto rows =
        harness::goodness_check(synthetic, model, dom(), 1000, {0, 5, 10}, rng, "return");
    for (const auto& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "[k=%zu n=%zu corr=%.3f p=%.3g slope=%.3f] ",
                      row.min_consistent, row.qualifying, row.corr, row.p, row.slope);
        detail += buf;
        if (row.insufficient || row.corr <= 0.0 || row.p >= 0.01) return false;
    }
    const auto& last = rows.back();
    return last.slope >= 0.8 && last.slope <= 1.2;
}

bool check_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    harness::PipelineConfig config;
    config.n_train = 500;
    config.n_test = 500;
    config.master_seed = 31415926;
    config.n_goodness_policies = 50;
    config.out_dir = "acceptance_run_a";
    (void)harness::run_pipeline(config, dom());
    config.out_dir = "acceptance_run_b";
    (void)harness::run_pipeline(config, dom());
    bool ok = true;
    for (const char* name : {"train.jsonl", "test.jsonl", "mdp.txt", "policy.txt", "report.txt"}) {
        if (slurp("acceptance_run_a/" + std::string(name)) !=
            slurp("acceptance_run_b/" + std::string(name))) {
            detail += std::string(name) + " differs; ";
            ok = false;
        }
    }
    fs::remove_all("acceptance_run_a");
    fs::remove_all("acceptance_run_b");
    return ok;
}

bool check_stats_oracles(std::string& detail) {
    Rng rng(987654321);
    for (int trial = 0; trial < 50; ++trial) {
        const int na = 4 + static_cast<int>(rng.uniform_index(20));
        const int nb = 4 + static_cast<int>(rng.uniform_index(20));
        std::vector<double> a, b;
        for (int i = 0; i < na; ++i) a.push_back(rng.uniform() * 6.0 - 3.0);
        for (int i = 0; i < nb; ++i) b.push_back(rng.uniform() * 6.0 - 2.0);

        // Welch oracle from first principles
        const long double ma = mean_ld(a), mb = mean_ld(b);
        long double va = 0.0L, vb = 0.0L;
        for (double x : a) va += (x - ma) * (x - ma);
        for (double x : b) vb += (x - mb) * (x - mb);
        va /= na - 1;
        vb /= nb - 1;
        const long double sa = va / na, sb = vb / nb;
        const double t_oracle = static_cast<double>((ma - mb) / std::sqrt(sa + sb));
        const double df_oracle = static_cast<double>(
            (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1)));
        const auto welch = stats::welch_t_test(a, b);
        if (!close(welch.t, t_oracle, 1e-6) ||
            !close(welch.p, t_tail_oracle(t_oracle, df_oracle), 1e-6)) {
            detail = "welch mismatch at trial " + std::to_string(trial);
            return false;
        }

        // Pearson/least-squares oracle
        const int n = 5 + static_cast<int>(rng.uniform_index(26));
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform() * 8.0 - 4.0;
            xs.push_back(x);
            ys.push_back(-0.4 * x + (rng.uniform() - 0.5) * 3.0);
        }
        const long double mx = mean_ld(xs), my = mean_ld(ys);
        long double sxx = 0.0L, syy = 0.0L, sxy = 0.0L;
        for (int i = 0; i < n; ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            syy += (ys[i] - my) * (ys[i] - my);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        const double r_oracle = static_cast<double>(sxy / std::sqrt(sxx * syy));
        const double slope_oracle = static_cast<double>(sxy / sxx);
        const double intercept_oracle = static_cast<double>(my - sxy / sxx * mx);
        const auto pearson = stats::pearson(xs, ys);
        const auto fit = stats::linear_fit(xs, ys);
        const double t_r = r_oracle * std::sqrt((n - 2) / (1.0 - r_oracle * r_oracle));
        if (!close(pearson.r, r_oracle, 1e-6) || !close(fit.slope, slope_oracle, 1e-6) ||
            !close(fit.intercept, intercept_oracle, 1e-6) ||
            !close(pearson.p, t_tail_oracle(t_r, n - 2), 1e-6)) {
            detail = "pearson/ols mismatch at trial " + std::to_string(trial);
            return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    criterion(1, "reward measure golden examples", check_rewards);
    criterion(2, "scripted dialogue state trace", check_trace);
    criterion(3, "62 reachable states, 42 choice-states", check_structure);
    criterion(4, "solver matches exhaustive policy enumeration", check_solver);
    criterion(5, "exploratory initial-state split is balanced", check_exploration_balance);
    criterion(6, "learned policy improves binary completion", check_improvement);
    criterion(7, "model-goodness regression self-consistency", check_goodness);
    criterion(8, "pipeline byte-level determinism", check_determinism);
    criterion(9, "statistics match independent oracles", check_stats_oracles);
    return g_failures;
}
