#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dialrl/corpus.hpp"
#include "dialrl/domain.hpp"
#include "dialrl/harness.hpp"
#include "dialrl/mdp.hpp"
#include "dialrl/rng.hpp"
#include "dialrl/user_sim.hpp"

namespace {

using namespace dialrl;

sim::SimConfig load_config(const std::string& path) {
    if (path.empty()) return sim::SimConfig{};
    return sim::SimConfig::load(path);
}

void print_mc(const harness::McEstimate& estimate, const std::string& measure) {
    if (estimate.mean) {
        std::printf("measure=%s n_consistent=%zu mean=%.6f\n", measure.c_str(),
                    estimate.n_consistent, *estimate.mean);
    } else {
        std::printf("measure=%s n_consistent=0 mean=no-estimate\n", measure.c_str());
    }
}

// ---------------------------------------------------------------------------
// chat mode helpers

std::optional<int> classify_slot(const std::string& phrase, std::string& canonical) {
    for (int attribute = 1; attribute <= domain::kNumAttributes; ++attribute) {
        for (const std::string& value : domain::slot_vocabulary(attribute)) {
            if (phrase == value) {
                canonical = value;
                return attribute;
            }
        }
    }
    return std::nullopt;
}

std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t");
    if (from == std::string::npos) return "";
    return s.substr(from, s.find_last_not_of(" \t") - from + 1);
}

int run_chat(const domain::Domain& dom, const sim::SimConfig& config, std::uint64_t seed,
             bool verbatim) {
    Rng rng(seed);
    const auto thresholds = sim::calibrate_confidence(config);
    const domain::TaskSpec task = sim::sample_task(rng, config.generalize_tasks);
    std::printf("Your task: find %s in %s in the %s.\n", task.activity.c_str(),
                task.location.c_str(), task.time.c_str());
    std::printf("Answer prompts with slot values (separate several with ';'),\n");
    std::printf("empty line for silence, y/n for confirmations.\n\n");

    domain::OperationsVector ops;
    const auto ask_user = [&](const std::string& prompt) {
        std::printf("S: %s\nU: ", prompt.c_str());
        std::fflush(stdout);
        std::string line;
        if (!std::getline(std::cin, line)) line.clear();
        return line;
    };
    const auto confirm_cb = [&](int attribute, const std::string& perceived) {
        const std::string reply =
            trim(ask_user(domain::prompt_text(static_cast<domain::Action>(
                                                  static_cast<int>(domain::Action::kExpConf1) +
                                                  attribute - 1),
                                              perceived)));
        if (reply.empty()) return domain::ConfirmToken::kNone;
        return (reply[0] == 'y' || reply[0] == 'Y') ? domain::ConfirmToken::kYes
                                                    : domain::ConfirmToken::kNo;
    };

    for (;;) {
        const domain::DialogueState state = domain::estimate_state(ops);
        const auto legal = dom.choice_table.allowed(state);
        const domain::Action action = legal[rng.uniform_index(legal.size())];
        std::printf("[state %s, action %s]\n", state.digits().c_str(),
                    std::string(domain::action_name(action)).c_str());

        if (action == domain::Action::kTell) {
            const auto binding = domain::QueryBinding::from_ops(ops);
            const auto rewards = domain::evaluate_rewards(binding, task);
            std::printf("S: %s\n", domain::prompt_text(action).c_str());
            for (const auto& row : dom.database.query(binding)) {
                std::printf("   %s (%s, %s, %s)\n", row.name.c_str(), row.activity.c_str(),
                            row.location.c_str(), row.time.c_str());
            }
            std::printf("rewards: binary=%d weak=%d asr=%.1f\n", rewards.binary_completion,
                        rewards.weak_completion, rewards.asr_score);
            return 0;
        }

        const domain::ActionTraits& t = domain::traits(action);
        domain::AsrObservation obs;
        const domain::AsrObservation* obs_ptr = nullptr;
        if (t.elicits_user_turn) {
            if (t.is_confirm) {
                obs.token = confirm_cb(t.attribute, ops.slots[t.attribute - 1].value.value_or(""));
            } else {
                const std::string line = ask_user(domain::prompt_text(action));
                std::map<int, std::string> intent;
                std::stringstream parts(line);
                std::string phrase;
                while (std::getline(parts, phrase, ';')) {
                    phrase = trim(phrase);
                    if (phrase.empty()) continue;
                    std::string canonical;
                    const auto attribute = classify_slot(phrase, canonical);
                    if (attribute) {
                        intent[*attribute] = canonical;
                    } else {
                        std::printf("   (did not understand '%s')\n", phrase.c_str());
                    }
                }
                if (verbatim) {
                    obs.slots = intent;
                    if (!obs.slots.empty()) obs.confidence_bin = 2;
                } else {
                    const auto asr = sim::asr_decode(intent, t.attribute, t.grammar, config.asr, rng);
                    obs.slots = asr.slots;
                    if (asr.confidence) {
                        obs.confidence_bin = domain::bin_confidence(*asr.confidence, thresholds);
                    }
                }
            }
            obs_ptr = &obs;
        }
        ops = domain::advance(ops, action, dom.choice_table, obs_ptr, confirm_cb).ops;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dialogue policy optimization toolkit"};
    app.require_subcommand(1);

    std::string config_path, corpus_path, policy_path, out_dir, measure = "binary";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t n = 100, n_policies = 200;
    std::vector<std::size_t> thresholds = {0, 5, 10};
    std::string data_dir = domain::default_data_dir();
    bool verbatim = false;

    app.add_option("--data", data_dir, "Domain data directory");

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Master random seed")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    auto* cmd_collect = app.add_subcommand("collect", "Roll out dialogues into a corpus file");
    cmd_collect->add_option("--config", config_path, "Simulator config file");
    cmd_collect->add_option("--n", n, "Number of dialogues");
    cmd_collect->add_option("--corpus", corpus_path, "Output corpus path")->required();
    cmd_collect->add_option("--policy", policy_path, "Fixed policy file (default: exploratory)");
    add_seed(cmd_collect);

    auto* cmd_estimate = app.add_subcommand("estimate", "Estimate the empirical model from a corpus");
    cmd_estimate->add_option("--corpus", corpus_path, "Input corpus")->required();
    cmd_estimate->add_option("--out", out_dir, "Output snapshot file")->required();

    auto* cmd_optimize = app.add_subcommand("optimize", "Solve a model snapshot into a policy");
    std::string mdp_path;
    cmd_optimize->add_option("--mdp", mdp_path, "Model snapshot (from estimate)")->required();
    cmd_optimize->add_option("--out", out_dir, "Output policy file")->required();

    auto* cmd_evaluate = app.add_subcommand("evaluate", "Score a policy");
    cmd_evaluate->add_option("--corpus", corpus_path, "Exploratory corpus for Monte Carlo scoring");
    cmd_evaluate->add_option("--policy", policy_path, "Policy file")->required();
    cmd_evaluate->add_option("--measure", measure, "binary|weak|asr|web|return");
    cmd_evaluate->add_option("--config", config_path, "Simulator config (fresh-rollout mode)");
    cmd_evaluate->add_option("--n", n, "Fresh rollouts (fresh-rollout mode)");
    add_seed(cmd_evaluate);

    auto* cmd_baselines = app.add_subcommand("baselines", "Compare the standard fixed policies");
    cmd_baselines->add_option("--corpus", corpus_path, "Exploratory corpus")->required();
    cmd_baselines->add_option("--measure", measure, "binary|weak|asr|web|return");

    auto* cmd_goodness = app.add_subcommand("goodness", "Model-accuracy regression");
    cmd_goodness->add_option("--corpus", corpus_path, "Exploratory corpus")->required();
    cmd_goodness->add_option("--policies", n_policies, "Number of random policies");
    cmd_goodness->add_option("--thresholds", thresholds, "Consistency thresholds")->delimiter(',');
    cmd_goodness->add_option("--measure", measure, "binary|weak|asr|web|return");
    add_seed(cmd_goodness);

    auto* cmd_pipeline = app.add_subcommand("pipeline", "Full collect/estimate/optimize/evaluate run");
    cmd_pipeline->add_option("--config", config_path, "Simulator config file");
    cmd_pipeline->add_option("--n", n, "Dialogues per arm")->default_val(2000);
    cmd_pipeline->add_option("--out", out_dir, "Artifact directory");
    cmd_pipeline->add_option("--policies", n_policies, "Random policies for the goodness section");
    cmd_pipeline->add_option("--thresholds", thresholds, "Consistency thresholds")->delimiter(',');
    add_seed(cmd_pipeline);

    auto* cmd_chat = app.add_subcommand("chat", "Interactive dialogue through the simulated channel");
    cmd_chat->add_option("--config", config_path, "Simulator config file");
    cmd_chat->add_flag("--verbatim", verbatim, "Bypass the recognition channel");
    add_seed(cmd_chat);

    CLI11_PARSE(app, argc, argv);

    try {
        const domain::Domain dom = domain::Domain::load(data_dir);

        auto require_seed = [&](const char* what) {
            if (!seed_set) throw std::runtime_error(std::string(what) + " requires --seed");
        };

        if (cmd_collect->parsed()) {
            require_seed("collect");
            const auto config = load_config(config_path);
            std::optional<mdp::Policy> policy;
            std::string mode = "exploratory";
            if (!policy_path.empty()) {
                policy = harness::read_policy(policy_path, dom);
                mode = "fixed:" + policy_path;
            }
            const auto corpus = harness::collect(n, dom, config, policy ? &*policy : nullptr,
                                                 mode, seed);
            corpus::save_file(corpus, corpus_path);
            std::printf("wrote %zu dialogues to %s\n", corpus.size(), corpus_path.c_str());
        } else if (cmd_estimate->parsed()) {
            const auto data = corpus::load_file(corpus_path);
            if (data.empty()) {
                std::fprintf(stderr, "warning: empty corpus, writing an all-unobserved snapshot\n");
            }
            const auto model = harness::estimate_from_corpus(data, dom.state_table);
            const auto parent = std::filesystem::path(out_dir).parent_path();
            if (!parent.empty()) std::filesystem::create_directories(parent);
            harness::write_mdp_snapshot(model, dom.state_table, out_dir);
            std::printf("wrote %s\n", out_dir.c_str());
        } else if (cmd_optimize->parsed()) {
            const auto model = harness::read_mdp_snapshot(mdp_path, dom.state_table);
            const auto qtable = mdp::value_iterate(model, 1.0, 1e-9);
            const auto allowed = harness::allowed_table(dom);
            const auto policy = mdp::greedy_policy(qtable, 1e-9, &allowed);
            const auto parent = std::filesystem::path(out_dir).parent_path();
            if (!parent.empty()) std::filesystem::create_directories(parent);
            harness::write_policy(policy, dom, out_dir);
            std::printf("wrote %s\n", out_dir.c_str());
        } else if (cmd_evaluate->parsed()) {
            const auto policy = harness::read_policy(policy_path, dom);
            if (!corpus_path.empty()) {
                const auto data = corpus::load_file(corpus_path);
                print_mc(harness::mc_evaluate(data, policy, dom, measure), measure);
            } else {
                require_seed("evaluate --config");
                const auto config = load_config(config_path);
                const auto data = harness::collect(n, dom, config, &policy,
                                                   "fixed:" + policy_path, seed);
                double sum = 0.0;
                for (const auto& record : data) sum += harness::measure_value(record, measure);
                std::printf("measure=%s n=%zu mean=%.6f\n", measure.c_str(), data.size(),
                            sum / static_cast<double>(data.size()));
            }
        } else if (cmd_baselines->parsed()) {
            const auto data = corpus::load_file(corpus_path);
            const auto model = harness::estimate_from_corpus(data, dom.state_table);
            const std::size_t start = dom.state_table.initial_id();
            std::printf("%-14s %12s %14s %12s\n", "policy", "model_value", "n_consistent", "mc_mean");
            for (const auto& [name, policy] : harness::baseline_policies(dom)) {
                const double value = mdp::policy_value(model, policy, 1.0).v[start];
                const auto estimate = harness::mc_evaluate(data, policy, dom, measure);
                if (estimate.mean) {
                    std::printf("%-14s %12.6f %14zu %12.6f\n", name.c_str(), value,
                                estimate.n_consistent, *estimate.mean);
                } else {
                    std::printf("%-14s %12.6f %14zu %12s\n", name.c_str(), value,
                                estimate.n_consistent, "no-estimate");
                }
            }
        } else if (cmd_goodness->parsed()) {
            require_seed("goodness");
            const auto data = corpus::load_file(corpus_path);
            const auto model = harness::estimate_from_corpus(data, dom.state_table);
            Rng rng(seed);
            const auto rows =
                harness::goodness_check(data, model, dom, n_policies, thresholds, rng, measure);
            std::printf("%14s %9s %9s %12s %12s %12s\n", "min_consistent", "policies", "corr", "p",
                        "slope", "intercept");
            for (const auto& row : rows) {
                if (row.insufficient) {
                    std::printf("%14zu %9zu insufficient\n", row.min_consistent, row.qualifying);
                } else {
                    std::printf("%14zu %9zu %9.6f %12.6g %12.6f %12.6f\n", row.min_consistent,
                                row.qualifying, row.corr, row.p, row.slope, row.intercept);
                }
            }
        } else if (cmd_pipeline->parsed()) {
            require_seed("pipeline");
            harness::PipelineConfig pipeline;
            pipeline.sim = load_config(config_path);
            pipeline.n_train = n;
            pipeline.n_test = n;
            pipeline.master_seed = seed;
            pipeline.out_dir = out_dir;
            pipeline.n_goodness_policies = cmd_pipeline->count("--policies") ? n_policies : 0;
            pipeline.thresholds = thresholds;
            const auto report = harness::run_pipeline(pipeline, dom);
            std::fputs(report.text.c_str(), stdout);
        } else if (cmd_chat->parsed()) {
            require_seed("chat");
            return run_chat(dom, load_config(config_path), seed, verbatim);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
