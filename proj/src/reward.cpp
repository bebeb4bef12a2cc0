#include "sgrl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgrl::reward {

RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "decomposed") return RewardMode::decomposed;
    if (s == "single_prompt") return RewardMode::single_prompt;
    if (s == "final_segment") return RewardMode::final_segment;
    throw std::invalid_argument("unknown reward mode: " + s);
}

std::string to_string(RewardMode m) {
    switch (m) {
        case RewardMode::decomposed: return "decomposed";
        case RewardMode::single_prompt: return "single_prompt";
        case RewardMode::final_segment: return "final_segment";
    }
    throw std::logic_error("unreachable");
}

void RewardConfig::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (window == 0) throw std::invalid_argument("window must be positive");
    if (stride == 0 || stride > window)
        throw std::invalid_argument("stride must satisfy 1 <= stride <= window");
}

namespace {

// 1 / (1 + sum_i exp((contrast_i - best) / tau)), all math in log space so
// that exp(100/tau)-scale terms cannot overflow.
double contrast_score(double best, std::span<const double> contrast, double tau) {
    if (contrast.empty()) return 1.0;
    // log(sum exp((c_i - best)/tau)) via the usual max shift.
    double m = -std::numeric_limits<double>::infinity();
    for (double c : contrast) m = std::max(m, (c - best) / tau);
    double s = 0.0;
    for (double c : contrast) s += std::exp((c - best) / tau - m);
    double log_sum = m + std::log(s);
    // r = 1 / (1 + e^log_sum) = sigmoid(-log_sum)
    if (log_sum > 0.0) {
        double e = std::exp(-log_sum);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(log_sum));
}

}  // namespace

double nce_similarity(const embed::Embedding& z_v, const embed::Embedding& z_pos,
                      std::span<const embed::Embedding> z_negs, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    double p = embed::dot(z_v, z_pos);
    std::vector<double> negs;
    negs.reserve(z_negs.size());
    for (const auto& z : z_negs) negs.push_back(embed::dot(z_v, z));
    return contrast_score(p, negs, tau);
}

double decomposed_reward_logits(std::span<const double> positive_logits,
                                std::span<const double> negative_logits, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (positive_logits.empty())
        throw std::invalid_argument("decomposed reward needs at least one positive");

    // Ties break toward the lowest index: sub-goal order is earliest-first.
    std::size_t best = 0;
    for (std::size_t i = 1; i < positive_logits.size(); ++i)
        if (positive_logits[i] > positive_logits[best]) best = i;

    std::vector<double> contrast(negative_logits.begin(), negative_logits.end());
    if (contrast.empty()) {
        // Without failure guidance the non-maximal positives carry the contrast;
        // the plain formula would be constant 1 and useless as a signal.
        for (std::size_t i = 0; i < positive_logits.size(); ++i)
            if (i != best) contrast.push_back(positive_logits[i]);
    }
    return contrast_score(positive_logits[best], contrast, tau);
}

double decomposed_reward(const embed::Embedding& z_v, const PromptSet& prompts, double tau) {
    if (prompts.positives.empty())
        throw std::invalid_argument("decomposed reward needs at least one positive prompt");
    std::vector<double> pos, neg;
    pos.reserve(prompts.positives.size());
    neg.reserve(prompts.negatives.size());
    for (const auto& [text, z] : prompts.positives) pos.push_back(embed::dot(z_v, z));
    for (const auto& [text, z] : prompts.negatives) neg.push_back(embed::dot(z_v, z));
    return decomposed_reward_logits(pos, neg, tau);
}

RewardTrace window_rewards(std::span<const embed::FrameFeature> frames,
                           const PromptSet& prompts, const RewardConfig& cfg,
                           const embed::Encoder& encoder) {
    cfg.validate();
    if (frames.empty()) throw std::invalid_argument("window_rewards: empty trajectory");

    const std::size_t n = frames.size();  // T + 1
    const std::size_t w = cfg.window;
    const std::size_t s = cfg.stride;

    RewardTrace trace;
    trace.per_step.assign(n, 0.0);

    auto score = [&](std::size_t start, std::size_t len) {
        auto z = encoder.encode_segment(frames.subspan(start, len));
        return decomposed_reward(z, prompts, cfg.tau);
    };

    if (n <= w) {
        double r = score(0, n);
        trace.window_scores.emplace_back(0, r);
        std::fill(trace.per_step.begin(), trace.per_step.end(), r);
        return trace;
    }

    std::size_t covered = 0;  // entries [0, covered) already assigned
    std::size_t start = 0;
    for (; start + w <= n; start += s) {
        double r = score(start, w);
        trace.window_scores.emplace_back(start, r);
        std::size_t end = start + w;  // window ends at frame end-1
        std::size_t from = (start == 0) ? 0 : end - s;
        for (std::size_t i = from; i < end; ++i) trace.per_step[i] = r;
        covered = end;
    }
    if (covered < n) {
        // Final short window from the next stride position to the end; it
        // fills exactly the uncovered tail.
        double r = score(start, n - start);
        trace.window_scores.emplace_back(start, r);
        for (std::size_t i = covered; i < n; ++i) trace.per_step[i] = r;
    }
    return trace;
}

double single_prompt_reward(const embed::FrameFeature& frame, const PromptSet& prompts,
                            const embed::Encoder& encoder) {
    if (prompts.coarse.first.empty())
        throw std::invalid_argument("single_prompt_reward: missing coarse prompt");
    auto z = encoder.encode_segment(std::span<const embed::FrameFeature>(&frame, 1));
    return embed::cosine(z, prompts.coarse.second);
}

RewardTrace final_segment_reward(std::span<const embed::FrameFeature> frames,
                                 const PromptSet& prompts, const embed::Encoder& encoder) {
    if (frames.empty()) throw std::invalid_argument("final_segment_reward: empty trajectory");
    if (prompts.coarse.first.empty())
        throw std::invalid_argument("final_segment_reward: missing coarse prompt");
    RewardTrace trace;
    trace.per_step.assign(frames.size(), 0.0);
    auto z = encoder.encode_segment(frames);
    trace.per_step.back() = embed::cosine(z, prompts.coarse.second);
    trace.window_scores.emplace_back(0, trace.per_step.back());
    return trace;
}

}  // namespace sgrl::reward
