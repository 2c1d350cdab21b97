#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// The NJFun-style slot-filling dialogue machine: three attributes (activity,
// location, time of day) acquired in order, with learnable initiative and
// confirmation choices, a 7-feature learning state estimated from a
// 14-variable operations vector, and the objective reward measures computed
// from the final database query.

namespace dialrl::domain {

inline constexpr int kNumAttributes = 3;

// ---------------------------------------------------------------------------
// Actions

enum class Action : std::uint8_t {
    kGreetS,
    kGreetU,
    kReAsk1S,
    kReAsk1M,
    kAsk2S,
    kAsk2U,
    kReAsk2S,
    kReAsk2M,
    kAsk3S,
    kReAsk3S,
    kExpConf1,
    kExpConf2,
    kExpConf3,
    kNoConf,
    kTell,
};
inline constexpr int kNumActions = 15;

enum class PromptType : std::uint8_t { kOpen, kDirective };
enum class GrammarType : std::uint8_t { kRestrictive, kNonRestrictive };
enum class Initiative : std::uint8_t { kSystem, kUser, kMixed };

struct ActionTraits {
    int attribute = 0;  // 1..3 for asks/confirms, 0 = not attribute-specific
    bool is_ask = false;
    bool is_reask = false;
    bool is_confirm = false;
    bool elicits_user_turn = false;
    PromptType prompt = PromptType::kDirective;
    GrammarType grammar = GrammarType::kRestrictive;
};

const ActionTraits& traits(Action action);
Initiative initiative(Action action);
std::string_view action_name(Action action);
std::optional<Action> action_from_name(std::string_view name);
/// Prompt wording; confirmation templates have "<value>" substituted.
std::string prompt_text(Action action, std::string_view value = "");

// ---------------------------------------------------------------------------
// Learning state

/// The 7-feature learning state. `digits()` renders the canonical 7-digit
/// form, e.g. "0100000" for the initial state.
struct DialogueState {
    std::uint8_t greet = 0;       // 0,1
    std::uint8_t attribute = 1;   // 1..4 (4 = done with attributes)
    std::uint8_t confidence = 0;  // 0,1,2 binned ASR confidence; 3 confirmed; 4 disconfirmed
    std::uint8_t value = 0;       // 0,1
    std::uint8_t tries = 0;       // 0,1,2
    std::uint8_t grammar = 0;     // 0 nonrestrictive, 1 restrictive
    std::uint8_t history = 0;     // 0 bad, 1 good

    std::string digits() const;
    static std::optional<DialogueState> parse(std::string_view digits);
    /// Names the first out-of-range feature, or empty when valid.
    static std::string validate(std::string_view digits);

    auto operator<=>(const DialogueState&) const = default;
};

inline const DialogueState kInitialState{0, 1, 0, 0, 0, 0, 0};
inline const DialogueState kDoneState{1, 4, 0, 0, 0, 0, 0};

// ---------------------------------------------------------------------------
// Operations vector

/// The internal dialogue record: greeted flag, current attribute, and four
/// variables per attribute (14 variables total).
struct OperationsVector {
    struct Slot {
        std::optional<std::string> value;
        int confidence = -1;  // -1 unset; else 0..4
        int tries = 0;        // 0..2
        int grammar = -1;     // -1 unset; 0 nonrestrictive, 1 restrictive
    };

    bool greeted = false;
    int current_attribute = 1;  // 1..4
    std::array<Slot, kNumAttributes> slots;

    bool operator==(const OperationsVector&) const = default;
};

/// Hand-designed estimator from the operations vector to the learning state.
DialogueState estimate_state(const OperationsVector& ops);

/// 0 (bad) iff some earlier attribute has no value, was accepted at zero
/// confidence, or exhausted its tries; defined for current attribute 2 or 3.
int compute_history(const OperationsVector& ops);

// ---------------------------------------------------------------------------
// ASR observation fed into the machine

enum class ConfirmToken : std::uint8_t { kYes, kNo, kNone };

/// What the recognizer perceived for one user turn, already binned.
struct AsrObservation {
    std::map<int, std::string> slots;  // attribute (1-based) -> perceived value
    int confidence_bin = -1;           // 0..2 when any slot perceived
    ConfirmToken token = ConfirmToken::kNone;  // for yes/no turns
};

/// Answers the follow-up verification question a reask may trigger; receives
/// the perceived value being verified.
using ConfirmCallback = std::function<ConfirmToken(int attribute, const std::string& perceived)>;

struct AdvanceResult {
    OperationsVector ops;
    int user_turns = 0;  // turns consumed by this action (0, 1, or 2)
};

// ---------------------------------------------------------------------------
// Choice table and state space

/// Allowed actions per state: the learnable choice-states carry two actions,
/// everything else is fixed. Loaded from the bundled choice-table file.
class ChoiceTable {
  public:
    /// File format: one row per choice-state, seven feature digits then the
    /// two action names.
    static ChoiceTable load(const std::string& path);

    /// Allowed actions at a state, fixed entries included. Throws on states
    /// the machine cannot reach.
    std::vector<Action> allowed(const DialogueState& state) const;

    bool is_choice_state(const DialogueState& state) const;
    const std::map<DialogueState, std::pair<Action, Action>>& choices() const { return choices_; }

  private:
    std::map<DialogueState, std::pair<Action, Action>> choices_;
};

/// Applies one system action to the operations vector. `asr` must be present
/// iff the action elicits a user turn; `confirm` answers the automatic
/// verification of re-acquired values. Illegal action/state pairings are
/// rejected with std::invalid_argument naming both.
AdvanceResult advance(const OperationsVector& ops, Action action, const ChoiceTable& table,
                      const AsrObservation* asr, const ConfirmCallback& confirm);

/// Exhaustive closure from the initial state under the choice table and all
/// ASR outcome classes. Includes the done state; the post-Tell terminal is
/// appended as the final entry.
std::vector<DialogueState> enumerate_reachable_states(const ChoiceTable& table);

/// Dense index over the reachable state set (terminal last).
class StateTable {
  public:
    explicit StateTable(const ChoiceTable& table);

    std::size_t size() const { return states_.size(); }  // includes terminal
    std::size_t terminal_id() const { return states_.size() - 1; }
    std::size_t initial_id() const { return initial_; }

    std::optional<std::size_t> index_of(const DialogueState& state) const;
    const DialogueState& state(std::size_t id) const { return states_[id]; }
    bool is_terminal(std::size_t id) const { return id == terminal_id(); }
    const std::vector<DialogueState>& states() const { return states_; }

  private:
    std::vector<DialogueState> states_;  // sorted by digits; terminal sentinel last
    std::map<DialogueState, std::size_t> index_;
    std::size_t initial_ = 0;
};

// ---------------------------------------------------------------------------
// Confidence binning

struct ConfidenceThresholds {
    double t_low = 0.0;
    double t_high = 0.0;
};

/// raw < t_low -> 0; t_low <= raw < t_high -> 1; raw >= t_high -> 2.
int bin_confidence(double raw, const ConfidenceThresholds& thresholds);

/// Empirical tertiles of a calibration sample.
ConfidenceThresholds calibrate_thresholds(std::vector<double> sample);

// ---------------------------------------------------------------------------
// Tasks, database and rewards

struct TaskSpec {
    std::string activity;
    std::string location;
    std::string time;

    const std::string& slot(int attribute) const;
    bool operator==(const TaskSpec&) const = default;
};

/// In-domain vocabularies used by tasks, the database and the ASR channel.
const std::vector<std::string>& activity_vocabulary();  // the 9 activity types
const std::vector<std::string>& location_vocabulary();
const std::vector<std::string>& time_vocabulary();
const std::vector<std::string>& slot_vocabulary(int attribute);

/// Per-attribute bindings for the final database query; nullopt = wildcard.
struct QueryBinding {
    std::array<std::optional<std::string>, kNumAttributes> slots;

    static QueryBinding from_ops(const OperationsVector& ops);
};

struct RewardBundle {
    int binary_completion = -1;  // -1 or 1
    int weak_completion = 0;     // -1..3
    double asr_score = 0.0;      // 0..3 in half steps
    int web_feedback = 0;        // -1, 0, 1 (recorded only)
};

/// The three objective measures computed from the query against the task.
RewardBundle evaluate_rewards(const QueryBinding& query, const TaskSpec& task);

struct ActivityRow {
    std::string activity;
    std::string location;
    std::string time;
    std::string name;
};

class ActivityDatabase {
  public:
    /// Loads the tab-separated (activity, location, time, name) file.
    static ActivityDatabase load(const std::string& path);

    const std::vector<ActivityRow>& rows() const { return rows_; }
    /// Rows matching every concrete slot; wildcards match all. Input order.
    std::vector<ActivityRow> query(const QueryBinding& binding) const;

  private:
    std::vector<ActivityRow> rows_;
};

// ---------------------------------------------------------------------------

/// Everything the rollout engine needs about the domain, bundled.
struct Domain {
    ChoiceTable choice_table;
    StateTable state_table;
    ActivityDatabase database;

    static Domain load(const std::string& data_dir);
};

/// Compile-time default location of the bundled data files.
std::string default_data_dir();

}  // namespace dialrl::domain
