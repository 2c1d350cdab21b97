#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialrl/domain.hpp"
#include "dialrl/rng.hpp"

// Stochastic stand-in for the user population and the speech channel:
// task-driven intents, grammar-dependent recognition noise, confidence
// scores correlated with correctness, and yes/no confirmation behavior.

namespace dialrl::sim {

struct UserProfile {
    double p_overanswer = 0.6;  // chance of volunteering each later slot
    double p_silent = 0.05;     // chance of a null response
    double p_yesno_flip = 0.05; // chance a yes/no answer is misrecognized
};

/// Per-grammar recognition outcome probabilities; must sum to 1.
struct GrammarNoise {
    double p_capture = 0.0;
    double p_substitute = 0.0;
    double p_delete = 0.0;
};

/// Triangular density on [lo, hi] with the given mode.
struct Triangular {
    double lo = 0.0;
    double mode = 0.5;
    double hi = 1.0;
};

struct AsrParams {
    GrammarNoise restrictive{0.92, 0.056, 0.024};
    GrammarNoise nonrestrictive{0.75, 0.175, 0.075};
    Triangular correct_confidence{0.0, 0.8, 1.0};
    Triangular corrupted_confidence{0.0, 0.35, 1.0};
};

struct SimConfig {
    UserProfile user;
    AsrParams asr;
    double p_feedback_noise = 0.1;  // chance the web-feedback proxy abstains
    bool generalize_tasks = false;  // sample from the full task grid

    /// Throws std::invalid_argument naming the first bad parameter.
    void validate() const;

    /// Flat key-value text ("key = value", '#' comments); unknown keys are
    /// rejected with the offending key and line number.
    static SimConfig load(const std::string& path);
    static SimConfig parse(std::istream& in, const std::string& origin);
};

/// One decoded user turn: perceived slot values, a raw confidence score when
/// anything was perceived, and the token for yes/no turns.
struct AsrResult {
    std::map<int, std::string> slots;
    std::optional<double> confidence;
    domain::ConfirmToken token = domain::ConfirmToken::kNone;
    bool any_substituted = false;
};

/// The six fixed task scenarios, in task-number order.
const std::vector<domain::TaskSpec>& fixed_tasks();

/// Uniform draw from the fixed tasks, or from the full grid when generalizing.
domain::TaskSpec sample_task(Rng& rng, bool generalize = false);

/// Intended slot values for one user turn answering an ask for
/// `asked_attribute`. Empty with probability p_silent; open prompts and
/// nonrestrictive grammars invite over-answering with later slots.
std::map<int, std::string> user_utterance(const domain::TaskSpec& task, int asked_attribute,
                                          domain::PromptType prompt, domain::GrammarType grammar,
                                          const UserProfile& profile, Rng& rng);

/// Passes an intent through the recognition channel for an ask of
/// `asked_attribute` under the given grammar.
AsrResult asr_decode(const std::map<int, std::string>& intent, int asked_attribute,
                     domain::GrammarType grammar, const AsrParams& params, Rng& rng);

/// Answer to an explicit confirmation of `perceived` when the truth is
/// `true_value`.
domain::ConfirmToken confirm_response(const std::string& true_value,
                                      const std::string& perceived, const UserProfile& profile,
                                      Rng& rng);

/// Noisy post-hoc feedback: echoes the binary outcome, abstaining (0) with
/// probability p_feedback_noise.
int web_feedback(int binary_completion, double p_feedback_noise, Rng& rng);

double sample_triangular(const Triangular& dist, Rng& rng);

/// Tertile confidence thresholds for a config, calibrated once over a fixed
/// 9999-sample draw from the induced correct/corrupted mixture.
domain::ConfidenceThresholds calibrate_confidence(const SimConfig& config);

}  // namespace dialrl::sim
