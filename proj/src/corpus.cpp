#include "dialrl/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dialrl::corpus {

using nlohmann::json;

std::string TrajectoryRecord::validate() const {
    if (steps.empty()) return "steps";
    for (const TrajStep& step : steps) {
        const std::string bad = domain::DialogueState::validate(step.state);
        if (!bad.empty()) return bad;
        if (!domain::action_from_name(step.action)) return "action";
    }
    if (steps.back().action != "Tell") return "final_action";
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
        if (steps[i].reward != 0.0) return "reward";  // only terminal rewards
    }
    if (rewards.binary_completion != -1 && rewards.binary_completion != 1) return "binary";
    if (rewards.weak_completion < -1 || rewards.weak_completion > 3) return "weak";
    if (rewards.asr_score < 0.0 || rewards.asr_score > 3.0) return "asr";
    if (rewards.web_feedback < -1 || rewards.web_feedback > 1) return "web";
    if (policy_mode != "exploratory" && policy_mode.rfind("fixed:", 0) != 0) return "policy_mode";
    return "";
}

namespace {

json to_json(const TrajectoryRecord& record) {
    json steps = json::array();
    for (const TrajStep& step : record.steps) {
        steps.push_back({{"s", step.state}, {"a", step.action}, {"r", step.reward}});
    }
    return json{
        {"dialogue_id", record.dialogue_id},
        {"task_id", record.task_id},
        {"seed", record.seed},
        {"policy_mode", record.policy_mode},
        {"steps", std::move(steps)},
        {"rewards",
         {{"binary", record.rewards.binary_completion},
          {"weak", record.rewards.weak_completion},
          {"asr", record.rewards.asr_score},
          {"web", record.rewards.web_feedback}}},
    };
}

TrajectoryRecord from_json(const json& j) {
    TrajectoryRecord record;
    record.dialogue_id = j.at("dialogue_id").get<std::uint64_t>();
    record.task_id = j.at("task_id").get<int>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.policy_mode = j.at("policy_mode").get<std::string>();
    for (const json& step : j.at("steps")) {
        record.steps.push_back(TrajStep{step.at("s").get<std::string>(),
                                        step.at("a").get<std::string>(),
                                        step.at("r").get<double>()});
    }
    const json& rewards = j.at("rewards");
    record.rewards.binary_completion = rewards.at("binary").get<int>();
    record.rewards.weak_completion = rewards.at("weak").get<int>();
    record.rewards.asr_score = rewards.at("asr").get<double>();
    record.rewards.web_feedback = rewards.at("web").get<int>();
    return record;
}

}  // namespace

void append(const TrajectoryRecord& record, std::ostream& sink) {
    const std::string bad = record.validate();
    if (!bad.empty()) throw std::invalid_argument("invalid trajectory record: " + bad);
    sink << to_json(record).dump() << '\n';
}

void append_file(const TrajectoryRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open corpus file for append: " + path);
    append(record, out);
}

Corpus load(std::istream& source, const std::string& origin) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (line.empty()) continue;
        TrajectoryRecord record;
        try {
            record = from_json(json::parse(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + ": malformed record at line " +
                                     std::to_string(lineno) + ": " + e.what());
        }
        const std::string bad = record.validate();
        if (!bad.empty()) {
            throw std::runtime_error(origin + ": invalid record at line " + std::to_string(lineno) +
                                     ": " + bad);
        }
        corpus.push_back(std::move(record));
    }
    return corpus;
}

Corpus load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    return load(in, path);
}

void save_file(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open corpus file for write: " + path);
    for (const TrajectoryRecord& record : corpus) append(record, out);
}

std::map<std::pair<std::string, std::string>, std::uint64_t> tally(const Corpus& corpus) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
    for (const TrajectoryRecord& record : corpus) {
        for (const TrajStep& step : record.steps) ++counts[{step.state, step.action}];
    }
    return counts;
}

}  // namespace dialrl::corpus
