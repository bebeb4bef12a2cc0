#include <doctest.h>

#include <filesystem>

#include "sgrl/errors.hpp"
#include "sgrl/label.hpp"

using namespace sgrl;
using namespace sgrl::label;

namespace {

struct ScriptedVlm final : VlmClient {
    std::string response;
    std::string last_context, last_payload, last_query;
    std::string ask(const std::string& context, const std::string& payload,
                    const std::string& query) override {
        last_context = context;
        last_payload = payload;
        last_query = query;
        return response;
    }
};

}  // namespace

TEST_CASE("noiseless oracle reproduces the ground truth exactly") {
    Rng rng(1, "labeler");
    auto yes = label_oracle(true, 0.0, rng);
    auto no = label_oracle(false, 0.0, rng);
    CHECK(yes.success);
    CHECK_FALSE(no.success);
    CHECK(yes.source == LabelSource::oracle);
    CHECK_FALSE(yes.raw_response.has_value());
}

TEST_CASE("oracle error rate outside [0, 0.5) is rejected") {
    Rng rng(1, "labeler");
    CHECK_THROWS_AS(label_oracle(true, -0.1, rng), std::invalid_argument);
    CHECK_THROWS_AS(label_oracle(true, 0.5, rng), std::invalid_argument);
}

TEST_CASE("noised oracle flips at the configured rate") {
    Rng rng(20240902, "labeler");
    int flips = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto d = label_oracle(true, 0.1, rng);
        CHECK(d.source == LabelSource::oracle_noised);
        if (!d.success) ++flips;
    }
    double rate = static_cast<double>(flips) / n;
    CHECK(rate > 0.09);
    CHECK(rate < 0.11);
}

TEST_CASE("binary answers parse by their last standalone digit") {
    CHECK(parse_binary_answer("1"));
    CHECK_FALSE(parse_binary_answer("0"));
    CHECK(parse_binary_answer("The output of this image is 1."));
    CHECK_FALSE(parse_binary_answer("I would say 1 at first, but the answer is 0"));
    CHECK(parse_binary_answer("output: 1\n"));
}

TEST_CASE("answers without a standalone binary digit raise ParseError") {
    for (const char* s : {"", "maybe", "the output is 10", "a1b", "100"}) {
        CHECK_THROWS_AS(parse_binary_answer(s), ParseError);
    }
    try {
        parse_binary_answer("no digits here");
    } catch (const ParseError& e) {
        CHECK(e.raw == "no digits here");
    }
}

TEST_CASE("label_vlm runs the two-stage protocol and keeps the raw response") {
    ScriptedVlm client;
    client.response = "The output of this image is 1.";
    auto d = label_vlm("payload-bytes", "context prompt", kLabelQuery, client);
    CHECK(d.success);
    CHECK(d.source == LabelSource::vlm);
    REQUIRE(d.raw_response.has_value());
    CHECK(*d.raw_response == client.response);
    CHECK(client.last_context == "context prompt");
    CHECK(client.last_payload == "payload-bytes");
    CHECK(client.last_query == std::string(kLabelQuery));

    client.response = "0";
    CHECK_FALSE(label_vlm("p", "c", kLabelQuery, client).success);
}

TEST_CASE("audit log appends records and summarizes them") {
    auto path = std::filesystem::temp_directory_path() / "sgrl_label_audit.jsonl";
    std::filesystem::remove(path);
    LabelAuditLog log(path);

    Rng rng(3, "labeler");
    log.append(1, label_oracle(true, 0.0, rng));
    log.append(2, label_oracle(false, 0.0, rng));
    ScriptedVlm client;
    client.response = "1";
    log.append(3, label_vlm("p", "c", kLabelQuery, client));

    auto summary = summarize_audit(path);
    CHECK(summary.total == 3);
    CHECK(summary.successes == 2);
    CHECK(summary.by_source[0] == 2);
    CHECK(summary.by_source[2] == 1);
    std::filesystem::remove(path);
}
