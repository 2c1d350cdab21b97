#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

#include "dialrl/corpus.hpp"

using namespace dialrl;
using corpus::TrajectoryRecord;
using corpus::TrajStep;

namespace {

TrajectoryRecord valid_record(std::uint64_t id) {
    TrajectoryRecord record;
    record.dialogue_id = id;
    record.task_id = 1;
    record.seed = 42 + id;
    record.policy_mode = "exploratory";
    record.steps = {
        {"0100000", "GreetU", 0.0},
        {"1121000", "NoConf", 0.0},
        {"1221001", "NoConf", 0.0},
        {"1321001", "NoConf", 0.0},
        {"1400000", "Tell", 1.0},
    };
    record.rewards.binary_completion = 1;
    record.rewards.weak_completion = 3;
    record.rewards.asr_score = 3.0;
    record.rewards.web_feedback = 1;
    return record;
}

}  // namespace

TEST_CASE("append and load round trip byte-equal") {
    std::ostringstream sink;
    for (int i = 0; i < 5; ++i) corpus::append(valid_record(i), sink);
    const std::string bytes = sink.str();
    CHECK(std::count(bytes.begin(), bytes.end(), '\n') == 5);

    std::istringstream source(bytes);
    const auto loaded = corpus::load(source);
    REQUIRE(loaded.size() == 5);
    CHECK(loaded[2].dialogue_id == 2);
    CHECK(loaded[2].steps.size() == 5);
    CHECK(loaded[2].rewards.binary_completion == 1);

    std::ostringstream again;
    for (const auto& record : loaded) corpus::append(record, again);
    CHECK(again.str() == bytes);
}

TEST_CASE("record validation names the offending field") {
    auto record = valid_record(0);
    record.steps[1].state = "1151000";  // confidence digit out of range
    CHECK(record.validate() == "confidence_confirmed");

    record = valid_record(0);
    record.steps.back().action = "NoConf";
    CHECK(record.validate() == "final_action");

    record = valid_record(0);
    record.steps[1].reward = 0.5;  // nonzero before the end
    CHECK(record.validate() == "reward");

    record = valid_record(0);
    record.steps[0].action = "Jump";
    CHECK(record.validate() == "action");

    record = valid_record(0);
    record.policy_mode = "whatever";
    CHECK(record.validate() == "policy_mode");

    record = valid_record(0);
    record.rewards.binary_completion = 0;
    CHECK(record.validate() == "binary");

    CHECK(valid_record(0).validate().empty());
}

TEST_CASE("append rejects invalid records") {
    auto record = valid_record(0);
    record.steps[0].state = "0150000";
    std::ostringstream sink;
    try {
        corpus::append(record, sink);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("confidence_confirmed") != std::string::npos);
    }
    CHECK(sink.str().empty());
}

TEST_CASE("load cites the line number on malformed input") {
    std::ostringstream sink;
    corpus::append(valid_record(0), sink);
    corpus::append(valid_record(1), sink);
    std::string bytes = sink.str();
    bytes.resize(bytes.size() - 30);  // truncate the final record mid-line
    std::istringstream source(bytes);
    try {
        (void)corpus::load(source, "test");
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::istringstream invalid(R"({"dialogue_id":0})" "\n");
    CHECK_THROWS_AS((void)corpus::load(invalid), std::runtime_error);
}

TEST_CASE("empty source yields an empty corpus") {
    std::istringstream empty("");
    CHECK(corpus::load(empty).empty());
}

TEST_CASE("file round trip") {
    const std::string path = "corpus_test_tmp.jsonl";
    std::remove(path.c_str());
    corpus::append_file(valid_record(0), path);
    corpus::append_file(valid_record(1), path);
    auto loaded = corpus::load_file(path);
    CHECK(loaded.size() == 2);
    corpus::save_file(loaded, path);  // truncating save
    loaded = corpus::load_file(path);
    CHECK(loaded.size() == 2);
    std::remove(path.c_str());
}

TEST_CASE("tally matches a hand count") {
    corpus::Corpus corpus = {valid_record(0), valid_record(1), valid_record(2)};
    corpus[2].steps[1] = {"1121000", "ExpConf1", 0.0};
    corpus[2].steps[2] = {"1200001", "Ask2U", 0.0};
    corpus[2].steps[3] = {"1221001", "NoConf", 0.0};
    const auto counts = corpus::tally(corpus);
    CHECK(counts.at({"0100000", "GreetU"}) == 3);
    CHECK(counts.at({"1121000", "NoConf"}) == 2);
    CHECK(counts.at({"1121000", "ExpConf1"}) == 1);
    CHECK(counts.at({"1400000", "Tell"}) == 3);
    CHECK(counts.count({"1200001", "NoConf"}) == 0);
}
