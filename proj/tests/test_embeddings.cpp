#include <doctest.h>

#include <set>

#include "sgrl/encoder.hpp"
#include "sgrl/errors.hpp"

using namespace sgrl;
using embed::Embedding;
using embed::FrameFeature;
using embed::PromptTable;
using embed::SyntheticEncoder;

namespace {

const PromptTable& fixture_table() {
    static const PromptTable table = PromptTable::load(SGRL_FIXTURE_DIR "/prompts.tsv");
    return table;
}

const SyntheticEncoder& fixture_encoder() {
    static const SyntheticEncoder enc(fixture_table());
    return enc;
}

std::vector<std::string> fixture_events() {
    std::set<std::string> events;
    for (const auto& e : fixture_table().events()) events.insert(e);
    return {events.begin(), events.end()};
}

FrameFeature frame_with(std::vector<std::string> tags) {
    FrameFeature f;
    f.values = {0.0, 0.0};
    f.event_tags = std::move(tags);
    return f;
}

}  // namespace

TEST_CASE("encode_text is deterministic and unit-norm") {
    const auto& enc = fixture_encoder();
    auto a = enc.encode_text("the robot hand grasps the door's handle");
    auto b = enc.encode_text("the robot hand grasps the door's handle");
    REQUIRE(a.dim() == SyntheticEncoder::kDefaultDim);
    CHECK(a.values == b.values);  // bit-identical
    CHECK(std::abs(embed::norm(a) - 1.0) < 1e-6);

    for (const auto& [prompt, event] : std::map<std::string, std::string>{
             {"open the door", "door-open"}, {"press the button", "button-pressed"}}) {
        auto z = enc.encode_text(prompt);
        CHECK(std::abs(embed::norm(z) - 1.0) < 1e-6);
        CHECK(z.values == enc.anchor(event).values);
    }
}

TEST_CASE("encode_text rejects empty prompts") {
    CHECK_THROWS_AS(fixture_encoder().encode_text(""), std::invalid_argument);
}

TEST_CASE("unmapped prompts fall back to a deterministic anchor") {
    const auto& enc = fixture_encoder();
    auto a = enc.encode_text("wiggle the antenna");
    auto b = enc.encode_text("wiggle the antenna");
    CHECK(a.values == b.values);
    CHECK(std::abs(embed::norm(a) - 1.0) < 1e-6);
}

TEST_CASE("event anchors keep a 0.3 cosine margin across the vocabulary") {
    const auto& enc = fixture_encoder();
    auto events = fixture_events();
    REQUIRE(events.size() >= 20);
    double worst = -1.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            double c = embed::cosine(enc.anchor(events[i]), enc.anchor(events[j]));
            worst = std::max(worst, c);
        }
    }
    CHECK(worst <= 1.0 - 0.3);
}

TEST_CASE("a pure-event window is nearest to its own event's prompt") {
    const auto& enc = fixture_encoder();
    auto events = fixture_events();
    for (const auto& event : events) {
        std::vector<FrameFeature> window(4, frame_with({event}));
        auto z = enc.encode_segment(window);
        double own = embed::cosine(z, enc.anchor(event));
        for (const auto& other : events) {
            if (other == event) continue;
            double c = embed::cosine(z, enc.anchor(other));
            CHECK(own >= c + 0.3);  // alignment margin
        }
    }
}

TEST_CASE("window without event tags lands exactly on the idle anchor") {
    const auto& enc = fixture_encoder();
    std::vector<FrameFeature> window(3, frame_with({}));
    auto z = enc.encode_segment(window);
    auto idle = enc.idle_anchor();
    for (std::size_t i = 0; i < z.dim(); ++i)
        CHECK(z.values[i] == doctest::Approx(idle.values[i]).epsilon(1e-12));
}

TEST_CASE("segment embedding has multiset semantics over tag frequencies") {
    const auto& enc = fixture_encoder();
    std::vector<FrameFeature> once{frame_with({"door-open"})};
    std::vector<FrameFeature> repeated(16, frame_with({"door-open"}));
    auto a = enc.encode_segment(once);
    auto b = enc.encode_segment(repeated);
    CHECK(a.values == b.values);
}

TEST_CASE("encode_segment rejects an empty window") {
    std::vector<FrameFeature> empty;
    CHECK_THROWS_AS(fixture_encoder().encode_segment(empty), std::invalid_argument);
}

TEST_CASE("segment embeddings are unit-norm for mixed windows") {
    const auto& enc = fixture_encoder();
    std::vector<FrameFeature> window{frame_with({"approach-door-handle"}),
                                     frame_with({"grasp-door-handle"}),
                                     frame_with({"grasp-door-handle", "door-handle-released"}),
                                     frame_with({})};
    auto z = enc.encode_segment(window);
    CHECK(std::abs(embed::norm(z) - 1.0) < 1e-6);
}

TEST_CASE("prompt table surfaces events and rejects malformed files") {
    const auto& table = fixture_table();
    CHECK(table.event_for("open the door") == "door-open");
    CHECK(table.event_for("no such prompt") == "");
    CHECK(table.size() > 30);
}
