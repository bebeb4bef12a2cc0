#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgrl/embedding.hpp"
#include "sgrl/encoder.hpp"

namespace sgrl::reward {

enum class RewardMode { decomposed, single_prompt, final_segment };

RewardMode reward_mode_from_string(const std::string& s);
std::string to_string(RewardMode m);

// Ordered sub-goal prompts (positives), failure prompts (negatives) and the
// coarse instruction used by the baseline reward modes.
struct PromptSet {
    std::vector<std::pair<std::string, embed::Embedding>> positives;
    std::vector<std::pair<std::string, embed::Embedding>> negatives;
    std::pair<std::string, embed::Embedding> coarse;
};

struct RewardConfig {
    double tau = 0.1;           // softmax temperature, > 0
    std::size_t window = 16;    // window length W in frames
    std::size_t stride = 4;     // stride s, 1 <= s <= W
    double success_bonus = 100.0;
    RewardMode mode = RewardMode::decomposed;

    void validate() const;
};

// Per-step rewards aligned to trajectory observations, plus the raw window
// scores they derive from.
struct RewardTrace {
    std::vector<double> per_step;                           // length T+1
    std::vector<std::pair<std::size_t, double>> window_scores;  // (start, r)
    bool bonus_applied = false;
};

// Softmax contrast of one positive against a negative set at temperature tau,
// evaluated in log space:  1 / (1 + sum_i exp((n_i - p) / tau)).
// Empty negatives give exactly 1.
double nce_similarity(const embed::Embedding& z_v, const embed::Embedding& z_pos,
                      std::span<const embed::Embedding> z_negs, double tau);

// Logit-space core of the decomposed reward: best positive logit contrasted
// against all negative logits. Ties in the positive max break toward the
// lowest index; when negatives are empty and at least two positives exist,
// the non-maximal positives serve as the contrast set (a single positive
// with no negatives scores exactly 1).
double decomposed_reward_logits(std::span<const double> positive_logits,
                                std::span<const double> negative_logits, double tau);

double decomposed_reward(const embed::Embedding& z_v, const PromptSet& prompts, double tau);

// Sliding-window reward over a whole trajectory. Full windows start at
// 0, s, 2s, ... while start + W <= T+1; if entries remain uncovered, one
// short window from the next stride position to the end covers them. The
// window ending at frame t fills per_step[t-s+1 .. t]; the first window also
// fills the leading entries, and a trajectory shorter than W is one window.
RewardTrace window_rewards(std::span<const embed::FrameFeature> frames,
                           const PromptSet& prompts, const RewardConfig& cfg,
                           const embed::Encoder& encoder);

// Per-step baseline: cosine of the single-frame embedding against the coarse
// prompt. Throws std::invalid_argument when the coarse prompt is missing.
double single_prompt_reward(const embed::FrameFeature& frame, const PromptSet& prompts,
                            const embed::Encoder& encoder);

// Trajectory-final baseline: zero everywhere except the last entry, which is
// the cosine of the whole-trajectory embedding against the coarse prompt.
RewardTrace final_segment_reward(std::span<const embed::FrameFeature> frames,
                                 const PromptSet& prompts, const embed::Encoder& encoder);

}  // namespace sgrl::reward
