#include "dialrl/domain.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dialrl::domain {

namespace {

struct ActionInfo {
    std::string_view name;
    ActionTraits traits;
    std::string_view prompt;
};

// Prompt wording, prompt type, and grammar follow the NJFun action
// inventory; greeting counts as asking for the first attribute.
constexpr ActionTraits ask(int attr, PromptType p, GrammarType g) {
    return ActionTraits{attr, true, false, false, true, p, g};
}
constexpr ActionTraits reask(int attr, PromptType p, GrammarType g) {
    return ActionTraits{attr, false, true, false, true, p, g};
}
constexpr ActionTraits confirm(int attr) {
    return ActionTraits{attr, false, false, true, true, PromptType::kDirective,
                        GrammarType::kRestrictive};
}

const std::array<ActionInfo, kNumActions> kActions = {{
    {"GreetS", ask(1, PromptType::kDirective, GrammarType::kRestrictive),
     "Welcome to NJFun. Please say an activity name or say 'list activities' for a list of "
     "activities I know about."},
    {"GreetU", ask(1, PromptType::kOpen, GrammarType::kNonRestrictive),
     "Welcome to NJFun. How may I help you?"},
    {"ReAsk1S", reask(1, PromptType::kDirective, GrammarType::kRestrictive),
     "I know about amusement parks, aquariums, cruises, historic sites, museums, parks, "
     "theaters, wineries and zoos. Please say an activity name from this list."},
    {"ReAsk1M", reask(1, PromptType::kDirective, GrammarType::kNonRestrictive),
     "Please tell me the activity type. You can also tell me the location and time."},
    {"Ask2S", ask(2, PromptType::kDirective, GrammarType::kRestrictive),
     "Please say the name of the town or city that you are interested in."},
    {"Ask2U", ask(2, PromptType::kOpen, GrammarType::kNonRestrictive),
     "Please give me more information."},
    {"ReAsk2S", reask(2, PromptType::kDirective, GrammarType::kRestrictive),
     "Please tell me the name of the town or city that you are interested in."},
    {"ReAsk2M", reask(2, PromptType::kDirective, GrammarType::kNonRestrictive),
     "Please tell me the location that you are interested in. You can also tell me the time."},
    {"Ask3S", ask(3, PromptType::kDirective, GrammarType::kRestrictive),
     "What time of the day do you want to go?"},
    {"ReAsk3S", reask(3, PromptType::kDirective, GrammarType::kRestrictive),
     "Do you want to go in the morning, in the afternoon, or in the evening?"},
    {"ExpConf1", confirm(1), "Did you say you are interested in going to <value>?"},
    {"ExpConf2", confirm(2), "Did you say you are interested in <value>?"},
    {"ExpConf3", confirm(3), "Did you say you want to go in the <value>?"},
    {"NoConf", ActionTraits{}, ""},
    {"Tell", ActionTraits{}, "I found the following matches for your request:"},
}};

int grammar_code(GrammarType g) { return g == GrammarType::kRestrictive ? 1 : 0; }

[[noreturn]] void illegal(const DialogueState& state, Action action) {
    throw std::invalid_argument("action " + std::string(action_name(action)) +
                                " is not legal in state " + state.digits());
}

std::string ops_key(const OperationsVector& ops) {
    std::string key;
    key += ops.greeted ? 'g' : '-';
    key += static_cast<char>('0' + ops.current_attribute);
    for (const auto& slot : ops.slots) {
        key += slot.value ? *slot.value : std::string("~");
        key += '/';
        key += std::to_string(slot.confidence);
        key += std::to_string(slot.tries);
        key += std::to_string(slot.grammar + 1);
        key += '|';
    }
    return key;
}

}  // namespace

const ActionTraits& traits(Action action) {
    return kActions[static_cast<std::size_t>(action)].traits;
}

Initiative initiative(Action action) {
    const ActionTraits& t = traits(action);
    // open + restrictive is not constructible; see the initiative grid.
    if (t.grammar == GrammarType::kRestrictive) return Initiative::kSystem;
    return t.prompt == PromptType::kOpen ? Initiative::kUser : Initiative::kMixed;
}

std::string_view action_name(Action action) {
    return kActions[static_cast<std::size_t>(action)].name;
}

std::optional<Action> action_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kActions.size(); ++i) {
        if (kActions[i].name == name) return static_cast<Action>(i);
    }
    return std::nullopt;
}

std::string prompt_text(Action action, std::string_view value) {
    std::string text(kActions[static_cast<std::size_t>(action)].prompt);
    const auto pos = text.find("<value>");
    if (pos != std::string::npos) text.replace(pos, 7, value);
    return text;
}

// ---------------------------------------------------------------------------

std::string DialogueState::digits() const {
    std::string out(7, '0');
    out[0] = static_cast<char>('0' + greet);
    out[1] = static_cast<char>('0' + attribute);
    out[2] = static_cast<char>('0' + confidence);
    out[3] = static_cast<char>('0' + value);
    out[4] = static_cast<char>('0' + tries);
    out[5] = static_cast<char>('0' + grammar);
    out[6] = static_cast<char>('0' + history);
    return out;
}

std::string DialogueState::validate(std::string_view digits) {
    if (digits.size() != 7) return "length";
    for (char c : digits)
        if (c < '0' || c > '9') return "digit";
    auto d = [&](int i) { return digits[i] - '0'; };
    if (d(0) > 1) return "greet";
    if (d(1) < 1 || d(1) > 4) return "attribute";
    if (d(2) > 4) return "confidence_confirmed";
    if (d(3) > 1) return "value";
    if (d(4) > 2) return "tries";
    if (d(5) > 1) return "grammar";
    if (d(6) > 1) return "history";
    return "";
}

std::optional<DialogueState> DialogueState::parse(std::string_view digits) {
    if (!validate(digits).empty()) return std::nullopt;
    DialogueState s;
    s.greet = static_cast<std::uint8_t>(digits[0] - '0');
    s.attribute = static_cast<std::uint8_t>(digits[1] - '0');
    s.confidence = static_cast<std::uint8_t>(digits[2] - '0');
    s.value = static_cast<std::uint8_t>(digits[3] - '0');
    s.tries = static_cast<std::uint8_t>(digits[4] - '0');
    s.grammar = static_cast<std::uint8_t>(digits[5] - '0');
    s.history = static_cast<std::uint8_t>(digits[6] - '0');
    return s;
}

int compute_history(const OperationsVector& ops) {
    if (ops.current_attribute == 1) return 1;  // no earlier attributes to go wrong
    for (int j = 0; j < ops.current_attribute - 1 && j < kNumAttributes; ++j) {
        const auto& slot = ops.slots[j];
        if (!slot.value) return 0;
        if (slot.confidence == 0) return 0;
        if (slot.tries == 2) return 0;
    }
    return 1;
}

DialogueState estimate_state(const OperationsVector& ops) {
    DialogueState s;
    s.greet = ops.greeted ? 1 : 0;
    s.attribute = static_cast<std::uint8_t>(ops.current_attribute);
    if (ops.current_attribute == 4) return kDoneState;
    const auto& slot = ops.slots[ops.current_attribute - 1];
    s.confidence = static_cast<std::uint8_t>(slot.confidence < 0 ? 0 : slot.confidence);
    s.value = slot.value ? 1 : 0;
    s.tries = static_cast<std::uint8_t>(slot.tries);
    s.grammar = slot.grammar == 1 ? 1 : 0;
    // The history feature is inert while working on the first attribute: the
    // state digit is 0 there (and in the done state).
    s.history = (ops.current_attribute == 2 || ops.current_attribute == 3)
                    ? static_cast<std::uint8_t>(compute_history(ops))
                    : 0;
    return s;
}

// ---------------------------------------------------------------------------

ChoiceTable ChoiceTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open choice table: " + path);
    ChoiceTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string d[7], first, second;
        for (auto& digit : d) row >> digit;
        row >> first >> second;
        if (!row) {
            throw std::runtime_error("choice table " + path + ": malformed line " +
                                     std::to_string(lineno));
        }
        std::string digits = d[0] + d[1] + d[2] + d[3] + d[4] + d[5] + d[6];
        auto state = DialogueState::parse(digits);
        auto a = action_from_name(first);
        auto b = action_from_name(second);
        if (!state || !a || !b) {
            throw std::runtime_error("choice table " + path + ": invalid entry at line " +
                                     std::to_string(lineno));
        }
        table.choices_[*state] = {*a, *b};
    }
    return table;
}

bool ChoiceTable::is_choice_state(const DialogueState& state) const {
    return choices_.count(state) > 0;
}

std::vector<Action> ChoiceTable::allowed(const DialogueState& state) const {
    auto it = choices_.find(state);
    if (it != choices_.end()) return {it->second.first, it->second.second};
    if (state.attribute == 4) return {Action::kTell};
    if (state.tries == 2) return {Action::kNoConf};  // tries exhausted: move on
    if (state.attribute == 3 && state.value == 0) {
        // system initiative is fixed for the third attribute
        if (state.confidence == 0 && state.tries == 0) return {Action::kAsk3S};
        if (state.tries == 1 || state.confidence == 4) return {Action::kReAsk3S};
    }
    throw std::invalid_argument("no allowed actions for state " + state.digits());
}

// ---------------------------------------------------------------------------

namespace {

void move_on(OperationsVector& ops) {
    if (ops.current_attribute < 4) ++ops.current_attribute;
}

void clear_value(OperationsVector::Slot& slot) {
    slot.value.reset();
    slot.grammar = -1;
}

}  // namespace

AdvanceResult advance(const OperationsVector& ops, Action action, const ChoiceTable& table,
                      const AsrObservation* asr, const ConfirmCallback& confirm) {
    const DialogueState state = estimate_state(ops);
    const auto legal = table.allowed(state);
    if (std::find(legal.begin(), legal.end(), action) == legal.end()) illegal(state, action);

    const ActionTraits& t = traits(action);
    if (t.elicits_user_turn && asr == nullptr) {
        throw std::invalid_argument("action " + std::string(action_name(action)) +
                                    " requires an ASR observation");
    }
    if (!t.elicits_user_turn && asr != nullptr) {
        throw std::invalid_argument("action " + std::string(action_name(action)) +
                                    " does not elicit a user turn");
    }

    AdvanceResult result;
    result.ops = ops;
    OperationsVector& next = result.ops;

    if (action == Action::kTell) {
        return result;  // terminal; the engine computes rewards
    }
    if (action == Action::kNoConf) {
        // accept the current binding (or lack of one) and move on
        move_on(next);
        return result;
    }

    if (t.is_confirm) {
        auto& slot = next.slots[t.attribute - 1];
        result.user_turns = 1;
        if (asr->token == ConfirmToken::kYes) {
            slot.confidence = 3;  // explicitly confirmed
            move_on(next);
        } else {
            slot.confidence = 4;  // disconfirmed
            clear_value(slot);
        }
        return result;
    }

    // ask / reask
    const int attr = t.attribute;
    auto& slot = next.slots[attr - 1];
    const bool was_disconfirmed = slot.confidence == 4;
    next.greeted = true;
    result.user_turns = 1;

    if (asr->slots.count(attr) && (asr->confidence_bin < 0 || asr->confidence_bin > 2)) {
        throw std::invalid_argument("ask observation requires a binned confidence in 0..2");
    }

    // nonrestrictive grammars may also capture later, not-yet-confirmed slots
    if (t.grammar == GrammarType::kNonRestrictive) {
        for (const auto& [j, value] : asr->slots) {
            if (j <= attr || j > kNumAttributes) continue;
            auto& later = next.slots[j - 1];
            if (later.confidence == 3) continue;  // confirmed slots are never refilled
            later.value = value;
            later.confidence = asr->confidence_bin;
            later.grammar = grammar_code(t.grammar);
        }
    }

    auto captured = asr->slots.find(attr);
    if (captured == asr->slots.end()) {
        // no value for the asked attribute
        slot.tries = t.is_reask ? 2 : 1;
        return result;
    }

    slot.value = captured->second;
    slot.confidence = asr->confidence_bin;
    slot.grammar = grammar_code(t.grammar);

    if (!t.is_reask) return result;  // first-ask capture: confirmation is a learnable choice

    if (was_disconfirmed && slot.tries == 1) {
        // second re-acquisition: accept as-is and move on
        move_on(next);
        return result;
    }

    // A re-acquired value that has not survived a confirmation yet is
    // verified immediately; the verification consumes a second user turn.
    if (!confirm) throw std::invalid_argument("reask capture requires a confirmation callback");
    result.user_turns = 2;
    const ConfirmToken token = confirm(attr, *slot.value);
    if (token == ConfirmToken::kYes) {
        slot.confidence = 3;
        move_on(next);
    } else {
        slot.confidence = 4;
        clear_value(slot);
        if (was_disconfirmed) slot.tries = 2;  // rejected twice: give up on the attribute
    }
    return result;
}

// ---------------------------------------------------------------------------

std::vector<DialogueState> enumerate_reachable_states(const ChoiceTable& table) {
    std::set<DialogueState> seen;
    std::set<std::string> visited;
    std::deque<OperationsVector> frontier;

    OperationsVector initial;
    frontier.push_back(initial);
    visited.insert(ops_key(initial));

    auto expand = [&](const OperationsVector& ops) {
        const DialogueState state = estimate_state(ops);
        seen.insert(state);
        std::vector<OperationsVector> nexts;

        for (Action action : table.allowed(state)) {
            const ActionTraits& t = traits(action);
            if (action == Action::kTell) continue;  // dialogue over

            auto run = [&](const AsrObservation& obs) {
                // branch both answers of any automatic verification
                bool invoked = false;
                auto cb_yes = [&](int, const std::string&) {
                    invoked = true;
                    return ConfirmToken::kYes;
                };
                nexts.push_back(advance(ops, action, table, &obs, cb_yes).ops);
                if (invoked) {
                    auto cb_no = [&](int, const std::string&) { return ConfirmToken::kNo; };
                    nexts.push_back(advance(ops, action, table, &obs, cb_no).ops);
                }
            };

            if (action == Action::kNoConf) {
                nexts.push_back(advance(ops, action, table, nullptr, nullptr).ops);
            } else if (t.is_confirm) {
                for (ConfirmToken token : {ConfirmToken::kYes, ConfirmToken::kNo}) {
                    AsrObservation obs;
                    obs.token = token;
                    run(obs);
                }
            } else {
                // every outcome class: each in-grammar slot perceived or not,
                // crossed with the three confidence bins
                std::vector<int> in_grammar{t.attribute};
                if (t.grammar == GrammarType::kNonRestrictive) {
                    for (int j = t.attribute + 1; j <= kNumAttributes; ++j) in_grammar.push_back(j);
                }
                const std::size_t combos = std::size_t{1} << in_grammar.size();
                for (std::size_t mask = 0; mask < combos; ++mask) {
                    AsrObservation obs;
                    for (std::size_t i = 0; i < in_grammar.size(); ++i) {
                        if (mask & (std::size_t{1} << i)) obs.slots[in_grammar[i]] = "v";
                    }
                    if (obs.slots.empty()) {
                        run(obs);
                        continue;
                    }
                    for (int bin = 0; bin <= 2; ++bin) {
                        obs.confidence_bin = bin;
                        run(obs);
                    }
                }
            }
        }
        return nexts;
    };

    while (!frontier.empty()) {
        OperationsVector ops = frontier.front();
        frontier.pop_front();
        for (OperationsVector& next : expand(ops)) {
            if (visited.insert(ops_key(next)).second) frontier.push_back(next);
        }
    }

    std::vector<DialogueState> states(seen.begin(), seen.end());
    states.push_back(DialogueState{0, 0, 0, 0, 0, 0, 0});  // terminal sentinel
    return states;
}

StateTable::StateTable(const ChoiceTable& table) {
    states_ = enumerate_reachable_states(table);
    for (std::size_t i = 0; i + 1 < states_.size(); ++i) index_[states_[i]] = i;
    initial_ = index_.at(kInitialState);
}

std::optional<std::size_t> StateTable::index_of(const DialogueState& state) const {
    auto it = index_.find(state);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------

int bin_confidence(double raw, const ConfidenceThresholds& thresholds) {
    if (thresholds.t_low > thresholds.t_high) {
        throw std::invalid_argument("bin_confidence: t_low must be <= t_high");
    }
    if (raw < thresholds.t_low) return 0;
    if (raw < thresholds.t_high) return 1;
    return 2;
}

ConfidenceThresholds calibrate_thresholds(std::vector<double> sample) {
    if (sample.size() < 3) throw std::invalid_argument("calibrate_thresholds: sample too small");
    std::sort(sample.begin(), sample.end());
    ConfidenceThresholds t;
    t.t_low = sample[sample.size() / 3];
    t.t_high = sample[2 * sample.size() / 3];
    return t;
}

// ---------------------------------------------------------------------------

const std::string& TaskSpec::slot(int attribute) const {
    switch (attribute) {
        case 1: return activity;
        case 2: return location;
        case 3: return time;
        default: throw std::invalid_argument("TaskSpec::slot: attribute out of range");
    }
}

const std::vector<std::string>& activity_vocabulary() {
    static const std::vector<std::string> kActivities = {
        "amusement parks", "aquariums", "cruises",  "historic sites", "museums",
        "parks",           "theaters",  "wineries", "zoos"};
    return kActivities;
}

const std::vector<std::string>& location_vocabulary() {
    static const std::vector<std::string> kLocations = {
        "Morristown", "Cape May",      "Stanhope", "Lambertville", "Florham Park", "Jersey City",
        "Princeton",  "Atlantic City", "Trenton",  "Hoboken",      "Newark",       "Camden"};
    return kLocations;
}

const std::vector<std::string>& time_vocabulary() {
    static const std::vector<std::string> kTimes = {"morning", "afternoon", "evening"};
    return kTimes;
}

const std::vector<std::string>& slot_vocabulary(int attribute) {
    switch (attribute) {
        case 1: return activity_vocabulary();
        case 2: return location_vocabulary();
        case 3: return time_vocabulary();
        default: throw std::invalid_argument("slot_vocabulary: attribute out of range");
    }
}

QueryBinding QueryBinding::from_ops(const OperationsVector& ops) {
    QueryBinding binding;
    for (int i = 0; i < kNumAttributes; ++i) {
        if (ops.slots[i].value) binding.slots[i] = *ops.slots[i].value;
    }
    return binding;
}

RewardBundle evaluate_rewards(const QueryBinding& query, const TaskSpec& task) {
    RewardBundle bundle;
    int correct = 0;
    int wildcards = 0;
    bool any_wrong = false;
    for (int i = 0; i < kNumAttributes; ++i) {
        const auto& slot = query.slots[i];
        if (!slot) {
            ++wildcards;
        } else if (*slot == task.slot(i + 1)) {
            ++correct;
        } else {
            any_wrong = true;
        }
    }
    bundle.binary_completion = (correct == kNumAttributes) ? 1 : -1;
    bundle.weak_completion = any_wrong ? -1 : correct;
    bundle.asr_score = correct + 0.5 * wildcards;
    return bundle;
}

ActivityDatabase ActivityDatabase::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open activity database: " + path);
    ActivityDatabase db;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        ActivityRow entry;
        if (!std::getline(row, entry.activity, '\t') || !std::getline(row, entry.location, '\t') ||
            !std::getline(row, entry.time, '\t') || !std::getline(row, entry.name)) {
            throw std::runtime_error("activity database " + path + ": malformed line " +
                                     std::to_string(lineno));
        }
        const auto& acts = activity_vocabulary();
        const auto& times = time_vocabulary();
        if (std::find(acts.begin(), acts.end(), entry.activity) == acts.end() ||
            std::find(times.begin(), times.end(), entry.time) == times.end()) {
            throw std::runtime_error("activity database " + path + ": out-of-domain field at line " +
                                     std::to_string(lineno));
        }
        db.rows_.push_back(std::move(entry));
    }
    return db;
}

std::vector<ActivityRow> ActivityDatabase::query(const QueryBinding& binding) const {
    std::vector<ActivityRow> out;
    for (const ActivityRow& row : rows_) {
        const std::array<const std::string*, 3> fields = {&row.activity, &row.location, &row.time};
        bool match = true;
        for (int i = 0; i < kNumAttributes; ++i) {
            if (binding.slots[i] && *binding.slots[i] != *fields[i]) {
                match = false;
                break;
            }
        }
        if (match) out.push_back(row);
    }
    return out;
}

Domain Domain::load(const std::string& data_dir) {
    ChoiceTable table = ChoiceTable::load(data_dir + "/choice_table.txt");
    StateTable states(table);
    ActivityDatabase db = ActivityDatabase::load(data_dir + "/activities.tsv");
    return Domain{std::move(table), std::move(states), std::move(db)};
}

std::string default_data_dir() {
#ifdef DIALRL_DATA_DIR
    return DIALRL_DATA_DIR;
#else
    return "data";
#endif
}

}  // namespace dialrl::domain
