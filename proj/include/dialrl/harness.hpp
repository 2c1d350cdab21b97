#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dialrl/corpus.hpp"
#include "dialrl/domain.hpp"
#include "dialrl/mdp.hpp"
#include "dialrl/rng.hpp"
#include "dialrl/user_sim.hpp"

// Orchestration of the five-step methodology: exploratory collection,
// model estimation, optimization, redeployment, and the evaluation suite
// (measure comparison, baselines, model-accuracy regression).

namespace dialrl::harness {

inline constexpr std::size_t kSubjectGroupSize = 6;  // one subject = six tasks

/// Dense action ids are the Action enum values; states index the StateTable.
mdp::ActionId action_id(domain::Action action);

/// Allowed-action table over the full state space (terminal entry empty).
std::vector<std::vector<mdp::ActionId>> allowed_table(const domain::Domain& domain);

/// Runs one complete dialogue. `policy` null means exploratory (uniform
/// over allowed actions); otherwise ties in the policy's choice set are
/// resolved uniformly. All randomness flows from `seed`.
corpus::TrajectoryRecord run_dialogue(const domain::Domain& domain, const sim::SimConfig& config,
                                      const domain::ConfidenceThresholds& thresholds,
                                      const mdp::Policy* policy, const std::string& policy_mode,
                                      int task_id, const domain::TaskSpec& task,
                                      std::uint64_t seed, std::uint64_t dialogue_id);

/// n dialogues with per-dialogue seeds derived from (master_seed, index) and
/// tasks assigned round-robin over the six scenarios (or sampled uniformly in
/// generalize mode). Results are independent of scheduling order.
corpus::Corpus collect(std::size_t n, const domain::Domain& domain, const sim::SimConfig& config,
                       const mdp::Policy* policy, const std::string& policy_mode,
                       std::uint64_t master_seed);

/// Corpus -> dense trajectories for model estimation.
std::vector<mdp::Trajectory> to_trajectories(const corpus::Corpus& corpus,
                                             const domain::StateTable& states);
mdp::EmpiricalMdp estimate_from_corpus(const corpus::Corpus& corpus,
                                       const domain::StateTable& states);

/// Measures: "binary", "weak", "asr", "web", or "return" (sum of step
/// rewards).
double measure_value(const corpus::TrajectoryRecord& record, const std::string& measure);

/// Per-subject means: consecutive groups of `group_size` dialogues.
std::vector<double> subject_means(const corpus::Corpus& corpus, const std::string& measure,
                                  std::size_t group_size = kSubjectGroupSize);

struct McEstimate {
    std::size_t n_consistent = 0;
    std::optional<double> mean;  // empty = no estimate
};

/// Unbiased Monte Carlo estimate over trajectories consistent with `policy`
/// (every logged choice-state action inside the policy's choice set).
/// Requires an exploratory corpus unless `allow_non_exploratory`.
McEstimate mc_evaluate(const corpus::Corpus& corpus, const mdp::Policy& policy,
                       const domain::Domain& domain, const std::string& measure,
                       bool allow_non_exploratory = false);

/// The five fixed comparison policies, in report order: SysNoconfirm,
/// SysConfirm, UserNoconfirm, UserConfirm, Mixed.
std::vector<std::pair<std::string, mdp::Policy>> baseline_policies(const domain::Domain& domain);

/// Deterministic policy drawn uniformly over the choice-state action pairs.
mdp::Policy random_policy(const domain::Domain& domain, Rng& rng);

struct GoodnessRow {
    std::size_t min_consistent = 0;
    std::size_t qualifying = 0;  // policies with > min_consistent trajectories
    bool insufficient = false;
    double corr = 0.0;
    double p = 1.0;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Model-accuracy regression: random deterministic policies scored both by
/// Monte Carlo over the corpus and by their start-state value in the model;
/// per threshold, correlation and the least-squares fit of MC on model value.
std::vector<GoodnessRow> goodness_check(const corpus::Corpus& corpus, const mdp::EmpiricalMdp& mdp,
                                        const domain::Domain& domain, std::size_t n_policies,
                                        const std::vector<std::size_t>& thresholds, Rng& rng,
                                        const std::string& measure = "binary");

/// Synthetic trajectories rolled out from the estimated model itself
/// (exploratory over observed actions; terminal reward sampled as +-1 with
/// the estimated mean). Ground truth for the goodness self-consistency test.
corpus::Corpus sample_from_mdp(const mdp::EmpiricalMdp& mdp, const domain::Domain& domain,
                               std::size_t n, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Artifacts

void write_mdp_snapshot(const mdp::EmpiricalMdp& mdp, const domain::StateTable& states,
                        const std::string& path);
mdp::EmpiricalMdp read_mdp_snapshot(const std::string& path, const domain::StateTable& states);

/// Policy file: one line per choice-state, feature digits then the chosen
/// action set. Fixed-action states are implied and filled on load.
void write_policy(const mdp::Policy& policy, const domain::Domain& domain,
                  const std::string& path);
mdp::Policy read_policy(const std::string& path, const domain::Domain& domain);

// ---------------------------------------------------------------------------
// Full pipeline

struct PipelineConfig {
    sim::SimConfig sim;
    std::size_t n_train = 2000;
    std::size_t n_test = 2000;
    std::uint64_t master_seed = 1;
    std::string out_dir;          // empty = no artifacts written
    std::size_t n_goodness_policies = 0;  // 0 = skip the goodness section
    std::vector<std::size_t> thresholds{0, 5, 10};
};

struct MeasureRow {
    std::string measure;
    double train_mean = 0.0;
    double test_mean = 0.0;
    double delta = 0.0;  // test - train
    double p = 1.0;      // Welch over subject means
};

struct EvaluationReport {
    std::vector<MeasureRow> rows;           // binary, weak, asr, web
    std::vector<MeasureRow> tasks_12;       // task-group split, tasks 1-2
    std::vector<MeasureRow> tasks_36;       // tasks 3-6
    double learned_value = 0.0;             // model value at the start state
    std::vector<std::pair<std::string, double>> baseline_values;
    std::vector<GoodnessRow> goodness;
    std::string text;                       // rendered report (byte-stable)
};

/// collect(exploratory) -> estimate -> optimize -> collect(fixed learned) ->
/// compare; writes corpora, model snapshot, policy and report when out_dir
/// is set.
EvaluationReport run_pipeline(const PipelineConfig& config, const domain::Domain& domain);

}  // namespace dialrl::harness
