#include "dialrl/user_sim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dialrl::sim {

namespace {

void check_prob(double p, const std::string& name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("sim config: " + name + " must be in [0,1]");
    }
}

void check_noise(const GrammarNoise& g, const std::string& name) {
    check_prob(g.p_capture, name + ".p_capture");
    check_prob(g.p_substitute, name + ".p_substitute");
    check_prob(g.p_delete, name + ".p_delete");
    if (std::abs(g.p_capture + g.p_substitute + g.p_delete - 1.0) > 1e-9) {
        throw std::invalid_argument("sim config: " + name + " outcome probabilities must sum to 1");
    }
}

void check_mode(const Triangular& t, const std::string& name) {
    if (!(t.lo <= t.mode && t.mode <= t.hi && t.lo < t.hi)) {
        throw std::invalid_argument("sim config: " + name + " must satisfy lo <= mode <= hi");
    }
}

}  // namespace

void SimConfig::validate() const {
    check_prob(user.p_overanswer, "p_overanswer");
    check_prob(user.p_silent, "p_silent");
    check_prob(user.p_yesno_flip, "p_yesno_flip");
    check_noise(asr.restrictive, "restrictive");
    check_noise(asr.nonrestrictive, "nonrestrictive");
    check_mode(asr.correct_confidence, "correct_confidence");
    check_mode(asr.corrupted_confidence, "corrupted_confidence");
    check_prob(p_feedback_noise, "p_feedback_noise");
}

SimConfig SimConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sim config: " + path);
    return parse(in, path);
}

SimConfig SimConfig::parse(std::istream& in, const std::string& origin) {
    SimConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string key, eq, value;
        if (!(row >> key)) continue;  // blank line
        if (!(row >> eq >> value) || eq != "=") {
            throw std::runtime_error(origin + ": expected 'key = value' at line " +
                                     std::to_string(lineno));
        }
        double* target = nullptr;
        if (key == "p_overanswer") target = &config.user.p_overanswer;
        else if (key == "p_silent") target = &config.user.p_silent;
        else if (key == "p_yesno_flip") target = &config.user.p_yesno_flip;
        else if (key == "restrictive.p_capture") target = &config.asr.restrictive.p_capture;
        else if (key == "restrictive.p_substitute") target = &config.asr.restrictive.p_substitute;
        else if (key == "restrictive.p_delete") target = &config.asr.restrictive.p_delete;
        else if (key == "nonrestrictive.p_capture") target = &config.asr.nonrestrictive.p_capture;
        else if (key == "nonrestrictive.p_substitute")
            target = &config.asr.nonrestrictive.p_substitute;
        else if (key == "nonrestrictive.p_delete") target = &config.asr.nonrestrictive.p_delete;
        else if (key == "correct_confidence.mode") target = &config.asr.correct_confidence.mode;
        else if (key == "corrupted_confidence.mode") target = &config.asr.corrupted_confidence.mode;
        else if (key == "p_feedback_noise") target = &config.p_feedback_noise;
        else if (key == "generalize_tasks") {
            config.generalize_tasks = value != "0" && value != "false";
            continue;
        } else {
            throw std::runtime_error(origin + ": unknown key '" + key + "' at line " +
                                     std::to_string(lineno));
        }
        try {
            *target = std::stod(value);
        } catch (const std::exception&) {
            throw std::runtime_error(origin + ": bad value for '" + key + "' at line " +
                                     std::to_string(lineno));
        }
    }
    config.validate();
    return config;
}

// ---------------------------------------------------------------------------

const std::vector<domain::TaskSpec>& fixed_tasks() {
    static const std::vector<domain::TaskSpec> kTasks = {
        {"museums", "Morristown", "afternoon"},
        {"cruises", "Cape May", "evening"},
        {"historic sites", "Stanhope", "morning"},
        {"wineries", "Lambertville", "morning"},
        {"theaters", "Florham Park", "evening"},
        {"parks", "Jersey City", "afternoon"},
    };
    return kTasks;
}

domain::TaskSpec sample_task(Rng& rng, bool generalize) {
    if (!generalize) return rng.pick(fixed_tasks());
    domain::TaskSpec task;
    task.activity = rng.pick(domain::activity_vocabulary());
    task.location = rng.pick(domain::location_vocabulary());
    task.time = rng.pick(domain::time_vocabulary());
    return task;
}

std::map<int, std::string> user_utterance(const domain::TaskSpec& task, int asked_attribute,
                                          domain::PromptType prompt, domain::GrammarType grammar,
                                          const UserProfile& profile, Rng& rng) {
    if (asked_attribute < 1 || asked_attribute > domain::kNumAttributes) {
        throw std::invalid_argument("user_utterance: asked_attribute out of range");
    }
    std::map<int, std::string> intent;
    if (rng.bernoulli(profile.p_silent)) return intent;
    intent[asked_attribute] = task.slot(asked_attribute);
    const bool invites_more = prompt == domain::PromptType::kOpen ||
                              grammar == domain::GrammarType::kNonRestrictive;
    if (invites_more) {
        for (int j = asked_attribute + 1; j <= domain::kNumAttributes; ++j) {
            if (rng.bernoulli(profile.p_overanswer)) intent[j] = task.slot(j);
        }
    }
    return intent;
}

namespace {

std::string substitute_value(const std::string& truth, int attribute, Rng& rng) {
    const auto& vocab = domain::slot_vocabulary(attribute);
    // rejection-sample a wrong value; vocabularies all have >= 2 entries
    for (;;) {
        const std::string& candidate = rng.pick(vocab);
        if (candidate != truth) return candidate;
    }
}

}  // namespace

double sample_triangular(const Triangular& dist, Rng& rng) {
    const double u = rng.uniform();
    const double span = dist.hi - dist.lo;
    const double cut = (dist.mode - dist.lo) / span;
    if (u < cut) return dist.lo + std::sqrt(u * span * (dist.mode - dist.lo));
    return dist.hi - std::sqrt((1.0 - u) * span * (dist.hi - dist.mode));
}

AsrResult asr_decode(const std::map<int, std::string>& intent, int asked_attribute,
                     domain::GrammarType grammar, const AsrParams& params, Rng& rng) {
    const GrammarNoise& noise =
        grammar == domain::GrammarType::kRestrictive ? params.restrictive : params.nonrestrictive;
    AsrResult result;
    for (const auto& [attribute, value] : intent) {
        // the grammar only recognizes the asked slot (restrictive) or the
        // asked slot plus later ones (nonrestrictive)
        const bool in_grammar = grammar == domain::GrammarType::kRestrictive
                                    ? attribute == asked_attribute
                                    : attribute >= asked_attribute;
        if (!in_grammar) continue;
        const double u = rng.uniform();
        if (u < noise.p_capture) {
            result.slots[attribute] = value;
        } else if (u < noise.p_capture + noise.p_substitute) {
            result.slots[attribute] = substitute_value(value, attribute, rng);
            result.any_substituted = true;
        }
        // else deleted
    }
    if (!result.slots.empty()) {
        const Triangular& dist =
            result.any_substituted ? params.corrupted_confidence : params.correct_confidence;
        result.confidence = sample_triangular(dist, rng);
    }
    return result;
}

domain::ConfirmToken confirm_response(const std::string& true_value, const std::string& perceived,
                                      const UserProfile& profile, Rng& rng) {
    if (rng.bernoulli(profile.p_silent)) return domain::ConfirmToken::kNone;
    bool yes = true_value == perceived;
    if (rng.bernoulli(profile.p_yesno_flip)) yes = !yes;
    return yes ? domain::ConfirmToken::kYes : domain::ConfirmToken::kNo;
}

int web_feedback(int binary_completion, double p_feedback_noise, Rng& rng) {
    if (rng.bernoulli(p_feedback_noise)) return 0;
    return binary_completion > 0 ? 1 : -1;
}

domain::ConfidenceThresholds calibrate_confidence(const SimConfig& config) {
    // fixed-seed draw from the induced mixture; weight = the mean substitution
    // share between the two grammars
    constexpr std::uint64_t kCalibrationSeed = 0x5eedca11b8a7e5ULL;
    constexpr int kSamples = 9999;
    const double w_corrupted =
        0.5 * (config.asr.restrictive.p_substitute + config.asr.nonrestrictive.p_substitute);
    Rng rng(kCalibrationSeed);
    std::vector<double> sample;
    sample.reserve(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        const Triangular& dist = rng.bernoulli(w_corrupted) ? config.asr.corrupted_confidence
                                                            : config.asr.correct_confidence;
        sample.push_back(sample_triangular(dist, rng));
    }
    return domain::calibrate_thresholds(std::move(sample));
}

}  // namespace dialrl::sim
