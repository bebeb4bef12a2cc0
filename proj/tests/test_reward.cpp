#include <doctest.h>

#include <cmath>

#include "sgrl/encoder.hpp"
#include "sgrl/reward.hpp"
#include "sgrl/rng.hpp"

using namespace sgrl;
using embed::Embedding;
using embed::FrameFeature;

namespace {

// Direct linear-space evaluation of the decomposed reward in extended
// precision; the independent oracle for the log-space implementation.
double naive_decomposed(const std::vector<double>& pos, const std::vector<double>& neg,
                        double tau) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pos.size(); ++i)
        if (pos[i] > pos[best]) best = i;
    long double num = std::exp(static_cast<long double>(pos[best]) / tau);
    long double den = num;
    if (!neg.empty()) {
        for (double n : neg) den += std::exp(static_cast<long double>(n) / tau);
    } else {
        for (std::size_t i = 0; i < pos.size(); ++i)
            if (i != best) den += std::exp(static_cast<long double>(pos[i]) / tau);
    }
    return static_cast<double>(num / den);
}

Embedding unit2(double x, double y) {
    Embedding e;
    e.values = {x, y};
    embed::normalize(e);
    return e;
}

Embedding random_unit(Rng& rng, std::size_t dim) {
    Embedding e;
    e.values.resize(dim);
    for (auto& v : e.values) v = rng.normal();
    embed::normalize(e);
    return e;
}

const embed::SyntheticEncoder& fixture_encoder() {
    static const embed::SyntheticEncoder enc(
        embed::PromptTable::load(SGRL_FIXTURE_DIR "/prompts.tsv"));
    return enc;
}

FrameFeature tagged(std::vector<std::string> tags) {
    FrameFeature f;
    f.values = {0.0};
    f.event_tags = std::move(tags);
    return f;
}

}  // namespace

TEST_CASE("nce_similarity with no negatives is exactly 1") {
    auto z = unit2(1, 0);
    CHECK(reward::nce_similarity(z, z, {}, 0.1) == 1.0);
}

TEST_CASE("nce_similarity with the positive as its own negative is 0.5") {
    auto z = unit2(0.6, -0.8);
    std::vector<Embedding> negs{z};
    for (double tau : {0.05, 0.1, 1.0})
        CHECK(reward::nce_similarity(z, z, negs, tau) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("nce_similarity matches the closed form on opposed unit vectors") {
    auto zv = unit2(1, 0);
    auto zpos = unit2(1, 0);
    std::vector<Embedding> negs{unit2(-1, 0)};
    double expected = static_cast<double>(1.0L / (1.0L + std::exp(-2.0L)));
    CHECK(reward::nce_similarity(zv, zpos, negs, 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("decomposed reward: single positive and no negatives is 1") {
    reward::PromptSet prompts;
    prompts.positives.emplace_back("p", unit2(1, 0));
    CHECK(reward::decomposed_reward(unit2(0, 1), prompts, 0.1) == 1.0);
}

TEST_CASE("decomposed reward: tiny temperature saturates toward 1") {
    double r = reward::decomposed_reward_logits(std::vector<double>{0.9},
                                                std::vector<double>{0.1}, 1e-3);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decomposed reward matches the term-by-term oracle on the 2-d example") {
    reward::PromptSet prompts;
    prompts.positives.emplace_back("a", unit2(1, 0));
    prompts.positives.emplace_back("b", unit2(0, 1));
    prompts.negatives.emplace_back("n", unit2(-1, 0));
    double got = reward::decomposed_reward(unit2(1, 0), prompts, 1.0);
    // logits: positives {1, 0}, negative {-1}
    double expected = naive_decomposed({1.0, 0.0}, {-1.0}, 1.0);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("log-space implementation tracks the naive oracle over random cases") {
    Rng rng(20240901, "reward-oracle");
    for (int i = 0; i < 1000; ++i) {
        std::size_t np = 1 + rng.below(5);
        std::size_t nn = rng.below(6);
        double tau = std::vector<double>{0.05, 0.1, 1.0}[rng.below(3)];
        std::vector<double> pos(np), neg(nn);
        for (auto& p : pos) p = rng.uniform(-1.0, 1.0);
        for (auto& n : neg) n = rng.uniform(-1.0, 1.0);
        double got = reward::decomposed_reward_logits(pos, neg, tau);
        double want = naive_decomposed(pos, neg, tau);
        CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
    }
}

TEST_CASE("decomposed reward stays finite and bounded under extreme logits") {
    std::vector<double> pos{1e4};
    std::vector<double> neg{-1e4, 9.9e3};
    double r = reward::decomposed_reward_logits(pos, neg, 1e-4);
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);

    // tau -> 0 limits
    CHECK(reward::decomposed_reward_logits(std::vector<double>{0.9},
                                           std::vector<double>{0.1, 0.5}, 1e-3) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(reward::decomposed_reward_logits(std::vector<double>{0.1},
                                           std::vector<double>{0.9}, 1e-3) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("decomposed reward is invariant to joint scaling of logits and tau") {
    std::vector<double> pos{0.4, 0.1};
    std::vector<double> neg{-0.2, 0.3};
    double base = reward::decomposed_reward_logits(pos, neg, 0.1);
    for (double c : {0.5, 2.0, 100.0}) {
        std::vector<double> ps = pos, ns = neg;
        for (auto& p : ps) p *= c;
        for (auto& n : ns) n *= c;
        CHECK(reward::decomposed_reward_logits(ps, ns, 0.1 * c) ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("decomposed reward increases strictly with the best positive logit") {
    Rng rng(77, "monotonic");
    for (int i = 0; i < 500; ++i) {
        std::size_t np = 1 + rng.below(4);
        std::size_t nn = 1 + rng.below(4);
        std::vector<double> pos(np), neg(nn);
        for (auto& p : pos) p = rng.uniform(-1.0, 1.0);
        for (auto& n : neg) n = rng.uniform(-1.0, 1.0);
        double before = reward::decomposed_reward_logits(pos, neg, 0.1);
        std::size_t best = 0;
        for (std::size_t k = 1; k < np; ++k)
            if (pos[k] > pos[best]) best = k;
        pos[best] += rng.uniform(1e-4, 0.5);
        double after = reward::decomposed_reward_logits(pos, neg, 0.1);
        CHECK(after > before);
    }
}

TEST_CASE("decomposed reward lies in (0,1], strictly below 1 with a contrast set") {
    Rng rng(42, "range");
    for (int i = 0; i < 300; ++i) {
        std::vector<double> pos{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        std::vector<double> neg{rng.uniform(-1.0, 1.0)};
        double r = reward::decomposed_reward_logits(pos, neg, 0.1);
        CHECK(r > 0.0);
        CHECK(r < 1.0);  // contrast set nonempty (negative present)
        double r2 = reward::decomposed_reward_logits(pos, std::span<const double>{}, 0.1);
        CHECK(r2 > 0.0);
        CHECK(r2 < 1.0);  // fallback contrast from the second positive
    }
}

TEST_CASE("decomposed reward requires positives and positive tau") {
    CHECK_THROWS_AS(
        reward::decomposed_reward_logits({}, std::vector<double>{0.1}, 0.1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        reward::decomposed_reward_logits(std::vector<double>{0.1}, {}, 0.0),
        std::invalid_argument);
    reward::PromptSet empty;
    CHECK_THROWS_AS(reward::decomposed_reward(unit2(1, 0), empty, 0.1), std::invalid_argument);
}

// ---- windowing ----

namespace {

reward::PromptSet simple_prompts(const embed::Encoder& enc) {
    reward::PromptSet prompts;
    prompts.positives.emplace_back("the robot hand approaches the door's handle",
                                   enc.encode_text("the robot hand approaches the door's handle"));
    prompts.positives.emplace_back("the robot hand opens the door",
                                   enc.encode_text("the robot hand opens the door"));
    prompts.negatives.emplace_back("the robot hand pushes the door shut",
                                   enc.encode_text("the robot hand pushes the door shut"));
    prompts.coarse = {"open the door", enc.encode_text("open the door")};
    return prompts;
}

// Frames tagged so that consecutive windows score differently.
std::vector<FrameFeature> varied_frames(std::size_t n) {
    std::vector<FrameFeature> frames;
    for (std::size_t i = 0; i < n; ++i)
        frames.push_back(tagged(i % 3 == 0 ? std::vector<std::string>{"approach-door-handle"}
                                           : std::vector<std::string>{"door-open"}));
    return frames;
}

}  // namespace

TEST_CASE("window assignment matches the hand-enumerated placements") {
    const auto& enc = fixture_encoder();
    auto prompts = simple_prompts(enc);
    reward::RewardConfig cfg;

    SUBCASE("T+1=24, W=16, s=4: three windows") {
        auto frames = varied_frames(24);
        auto trace = reward::window_rewards(frames, prompts, cfg, enc);
        REQUIRE(trace.window_scores.size() == 3);
        CHECK(trace.window_scores[0].first == 0);
        CHECK(trace.window_scores[1].first == 4);
        CHECK(trace.window_scores[2].first == 8);
        for (std::size_t i = 0; i <= 15; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[0].second);
        for (std::size_t i = 16; i <= 19; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[1].second);
        for (std::size_t i = 20; i <= 23; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[2].second);
    }

    SUBCASE("T+1=16, W=16, s=4: single window, constant trace") {
        auto frames = varied_frames(16);
        auto trace = reward::window_rewards(frames, prompts, cfg, enc);
        REQUIRE(trace.window_scores.size() == 1);
        for (double v : trace.per_step) CHECK(v == trace.window_scores[0].second);
    }

    SUBCASE("T+1=7, W=16, s=4: short trajectory is one window") {
        auto frames = varied_frames(7);
        auto trace = reward::window_rewards(frames, prompts, cfg, enc);
        REQUIRE(trace.window_scores.size() == 1);
        REQUIRE(trace.per_step.size() == 7);
        for (double v : trace.per_step) CHECK(v == trace.window_scores[0].second);
    }

    SUBCASE("T+1=30, W=8, s=8: three full windows plus a short tail") {
        reward::RewardConfig c8 = cfg;
        c8.window = 8;
        c8.stride = 8;
        auto frames = varied_frames(30);
        auto trace = reward::window_rewards(frames, prompts, c8, enc);
        REQUIRE(trace.window_scores.size() == 4);
        CHECK(trace.window_scores[3].first == 24);
        for (std::size_t i = 0; i <= 7; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[0].second);
        for (std::size_t i = 8; i <= 15; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[1].second);
        for (std::size_t i = 16; i <= 23; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[2].second);
        for (std::size_t i = 24; i <= 29; ++i)
            CHECK(trace.per_step[i] == trace.window_scores[3].second);
    }
}

TEST_CASE("every per-step entry is assigned exactly once across window shapes") {
    const auto& enc = fixture_encoder();
    auto prompts = simple_prompts(enc);
    Rng rng(5, "window-cover");
    for (int rep = 0; rep < 50; ++rep) {
        reward::RewardConfig cfg;
        cfg.window = 1 + rng.below(20);
        cfg.stride = 1 + rng.below(cfg.window);
        std::size_t n = 1 + rng.below(60);
        auto frames = varied_frames(n);
        auto trace = reward::window_rewards(frames, prompts, cfg, enc);
        REQUIRE(trace.per_step.size() == n);
        // Constant segments must tile [0, n) in window order; verify each
        // entry matches some window score and boundaries are contiguous.
        for (double v : trace.per_step) {
            bool matched = false;
            for (const auto& [start, r] : trace.window_scores) matched |= (v == r);
            CHECK(matched);
        }
    }
}

TEST_CASE("all-idle trajectory yields a constant trace at the idle reward") {
    const auto& enc = fixture_encoder();
    auto prompts = simple_prompts(enc);
    reward::RewardConfig cfg;
    std::vector<FrameFeature> frames(40, tagged({}));
    auto trace = reward::window_rewards(frames, prompts, cfg, enc);

    // Closed form: every window embeds to the idle anchor, so the reward is
    // the decomposed score of the idle embedding itself.
    double expected = reward::decomposed_reward(enc.idle_anchor(), prompts, cfg.tau);
    for (double v : trace.per_step) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single_prompt_reward is cosine against the coarse prompt") {
    const auto& enc = fixture_encoder();
    auto prompts = simple_prompts(enc);

    SUBCASE("frame embedding equal to the coarse embedding gives 1") {
        FrameFeature idle = tagged({});
        reward::PromptSet p = prompts;
        p.coarse.second = enc.encode_segment(std::vector<FrameFeature>{idle});
        CHECK(reward::single_prompt_reward(idle, p, enc) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("orthogonal coarse embedding gives 0") {
        FrameFeature idle = tagged({});
        auto z = enc.encode_segment(std::vector<FrameFeature>{idle});
        // Gram-Schmidt an anchor against z.
        auto w = enc.anchor("door-open");
        double d = embed::dot(w, z);
        for (std::size_t i = 0; i < w.dim(); ++i) w.values[i] -= d * z.values[i];
        embed::normalize(w);
        reward::PromptSet p = prompts;
        p.coarse.second = w;
        CHECK(reward::single_prompt_reward(idle, p, enc) == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("missing coarse prompt is an error") {
        reward::PromptSet p = prompts;
        p.coarse = {};
        CHECK_THROWS_AS(reward::single_prompt_reward(tagged({}), p, enc), std::invalid_argument);
    }
}

TEST_CASE("final_segment_reward is sparse-terminal") {
    const auto& enc = fixture_encoder();
    auto prompts = simple_prompts(enc);
    std::vector<FrameFeature> frames(12, tagged({"approach-door-handle"}));
    frames.back() = tagged({"door-open"});
    auto trace = reward::final_segment_reward(frames, prompts, enc);
    REQUIRE(trace.per_step.size() == 12);
    for (std::size_t i = 0; i + 1 < trace.per_step.size(); ++i) CHECK(trace.per_step[i] == 0.0);
    CHECK(trace.per_step.back() > 0.0);  // trajectory exhibits the coarse event

    SUBCASE("length-1 trajectory matches single_prompt_reward at index 0") {
        std::vector<FrameFeature> one{tagged({"door-open"})};
        auto t1 = reward::final_segment_reward(one, prompts, enc);
        REQUIRE(t1.per_step.size() == 1);
        CHECK(t1.per_step[0] ==
              doctest::Approx(reward::single_prompt_reward(one[0], prompts, enc)).epsilon(1e-12));
    }
}

TEST_CASE("reward config validation") {
    reward::RewardConfig cfg;
    cfg.tau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.tau = 0.1;
    cfg.stride = 20;
    cfg.window = 16;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.stride = 16;
    CHECK_NOTHROW(cfg.validate());
}
