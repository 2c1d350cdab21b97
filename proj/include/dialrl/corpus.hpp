#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dialrl/domain.hpp"

// Line-delimited trajectory logging: one self-describing JSON record per
// line, validated on both write and read.

namespace dialrl::corpus {

struct TrajStep {
    std::string state;   // 7 feature digits
    std::string action;  // action name
    double reward = 0.0;
};

struct TrajectoryRecord {
    std::uint64_t dialogue_id = 0;
    int task_id = 0;
    std::uint64_t seed = 0;
    std::vector<TrajStep> steps;
    domain::RewardBundle rewards;
    std::string policy_mode;  // "exploratory" or "fixed:<name>"

    /// Names the first violated field, or empty when valid. Checks digit
    /// ranges, action names, a final Tell, and zero rewards before the end.
    std::string validate() const;
};

using Corpus = std::vector<TrajectoryRecord>;

/// Appends one validated record as a single line. Invalid records are
/// rejected with std::invalid_argument naming the field.
void append(const TrajectoryRecord& record, std::ostream& sink);
void append_file(const TrajectoryRecord& record, const std::string& path);

/// Reads and validates records in file order. Malformed or invalid lines are
/// rejected with std::runtime_error citing the line number. Empty -> empty.
Corpus load(std::istream& source, const std::string& origin = "corpus");
Corpus load_file(const std::string& path);

void save_file(const Corpus& corpus, const std::string& path);

/// Visit counts per (state digits, action name).
std::map<std::pair<std::string, std::string>, std::uint64_t> tally(const Corpus& corpus);

}  // namespace dialrl::corpus
