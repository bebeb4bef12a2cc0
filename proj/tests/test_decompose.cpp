#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "sgrl/decompose.hpp"
#include "sgrl/encoder.hpp"
#include "sgrl/errors.hpp"

using namespace sgrl;
using namespace sgrl::decompose;

namespace {

struct ScriptedClient final : LlmClient {
    std::string response;
    int calls = 0;
    std::string last_request;
    std::string complete(const std::string& request) override {
        ++calls;
        last_request = request;
        return response;
    }
};

struct RefusingClient final : LlmClient {
    std::string complete(const std::string&) override {
        throw TransportError("client must not be called");
    }
};

std::filesystem::path temp_cache_path(const char* tag) {
    auto p = std::filesystem::temp_directory_path() / (std::string("sgrl_cache_") + tag + ".jsonl");
    std::filesystem::remove(p);
    return p;
}

const embed::SyntheticEncoder& fixture_encoder() {
    static const embed::SyntheticEncoder enc(
        embed::PromptTable::load(SGRL_FIXTURE_DIR "/prompts.tsv"));
    return enc;
}

FailurePrompts fixture_failures() {
    return FailurePrompts::load(SGRL_FIXTURE_DIR "/failures.tsv");
}

}  // namespace

TEST_CASE("fixture decomposition of the door task is served verbatim") {
    auto cache = std::make_shared<DecompositionCache>(SGRL_FIXTURE_DIR "/decompositions.jsonl");
    Decomposer dec(cache, fixture_failures(), "");
    auto d = dec.decompose("open the door", DecomposeMode::fixture);
    REQUIRE(d.subgoals.size() == 4);
    CHECK(d.subgoals[0] == "the robot hand approaches the door's handle");
    CHECK(d.subgoals[1] == "the robot hand grasps the door's handle");
    CHECK(d.subgoals[2] == "the robot hand pulls the door's handle back");
    CHECK(d.subgoals[3] == "the robot hand opens the door");
    CHECK(d.source == DecompositionSource::fixture);
    CHECK(d.failures.size() == 2);
}

TEST_CASE("fixture mode misses raise NotFoundError and never touch the client") {
    auto cache = std::make_shared<DecompositionCache>(temp_cache_path("miss"));
    Decomposer dec(cache, {}, "", std::make_shared<RefusingClient>());
    CHECK_THROWS_AS(dec.decompose("juggle three balls", DecomposeMode::fixture), NotFoundError);
}

TEST_CASE("cache hits answer live-mode calls without the client") {
    auto cache = std::make_shared<DecompositionCache>(SGRL_FIXTURE_DIR "/decompositions.jsonl");
    auto refusing = std::make_shared<RefusingClient>();
    Decomposer dec(cache, fixture_failures(), "", refusing);
    auto d = dec.decompose("open the door", DecomposeMode::live);
    CHECK(d.subgoals.size() == 4);
}

TEST_CASE("live mode parses a numbered list and persists the record") {
    auto path = temp_cache_path("live");
    auto cache = std::make_shared<DecompositionCache>(path);
    auto client = std::make_shared<ScriptedClient>();
    client->response = "1. reach 2. grasp";
    Decomposer dec(cache, fixture_failures(), "Decompose this.\nTask: {task}", client);

    auto d = dec.decompose("open the door", DecomposeMode::live);
    CHECK(client->calls == 1);
    CHECK(client->last_request == "Decompose this.\nTask: open the door");
    REQUIRE(d.subgoals.size() == 2);
    CHECK(d.subgoals[0] == "reach");
    CHECK(d.subgoals[1] == "grasp");
    CHECK(d.source == DecompositionSource::live);
    // Failure prompts come from the human-edited configuration, not the LLM.
    CHECK(d.failures == fixture_failures().for_task("open the door"));

    // Round-trip through the cache file, byte-for-byte field equality.
    DecompositionCache reloaded(path);
    auto hit = reloaded.lookup("open the door");
    REQUIRE(hit.has_value());
    CHECK(hit->task == d.task);
    CHECK(hit->subgoals == d.subgoals);
    CHECK(hit->failures == d.failures);
    std::filesystem::remove(path);
}

TEST_CASE("numbered lists across lines and with parentheses parse in order") {
    auto items = parse_numbered_list("1. approach the handle\n2) grasp it\n 3. pull back\n");
    REQUIRE(items.size() == 3);
    CHECK(items[0] == "approach the handle");
    CHECK(items[1] == "grasp it");
    CHECK(items[2] == "pull back");
}

TEST_CASE("unparseable responses raise ParseError with the raw text attached") {
    auto path = temp_cache_path("garbage");
    auto cache = std::make_shared<DecompositionCache>(path);
    auto client = std::make_shared<ScriptedClient>();
    client->response = "I'd rather not answer that.";
    Decomposer dec(cache, {}, "", client);
    try {
        dec.decompose("open the door", DecomposeMode::live);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.raw == "I'd rather not answer that.");
    }
    CHECK(cache->size() == 0);  // nothing persisted on failure
}

TEST_CASE("empty task is rejected") {
    auto cache = std::make_shared<DecompositionCache>(temp_cache_path("empty"));
    Decomposer dec(cache, {}, "");
    CHECK_THROWS_AS(dec.decompose("", DecomposeMode::fixture), std::invalid_argument);
}

TEST_CASE("build_prompt_set embeds sub-goals, failures and the coarse prompt") {
    const auto& enc = fixture_encoder();
    SubgoalDecomposition d;
    d.task = "open the door";
    d.subgoals = {"a", "b", "c", "d"};
    d.failures = {"x", "y"};
    auto set = build_prompt_set(d, enc, "open the door");
    CHECK(set.positives.size() == 4);
    CHECK(set.negatives.size() == 2);
    CHECK(set.coarse.first == "open the door");
    CHECK(set.coarse.second.values == enc.encode_text("open the door").values);
}

TEST_CASE("empty failure lists produce empty negatives") {
    const auto& enc = fixture_encoder();
    SubgoalDecomposition d;
    d.task = "press the button";
    d.subgoals = {"approach", "press"};
    auto set = build_prompt_set(d, enc, "press the button");
    CHECK(set.negatives.empty());
}

TEST_CASE("duplicate prompts are dropped with a warning, order kept") {
    const auto& enc = fixture_encoder();
    SubgoalDecomposition d;
    d.task = "t";
    d.subgoals = {"first", "second", "first", "third"};
    std::vector<std::string> warnings;
    auto set = build_prompt_set(d, enc, "t",
                                [&](const std::string& w) { warnings.push_back(w); });
    REQUIRE(set.positives.size() == 3);
    CHECK(set.positives[0].first == "first");
    CHECK(set.positives[1].first == "second");
    CHECK(set.positives[2].first == "third");
    REQUIRE(warnings.size() == 1);
}

TEST_CASE("failure prompt config maps tasks to their prompt lists") {
    auto failures = fixture_failures();
    auto door = failures.for_task("open the door");
    REQUIRE(door.size() == 2);
    CHECK(door[0] == "the robot hand releases the door's handle early");
    CHECK(failures.for_task("no such task").empty());
}
