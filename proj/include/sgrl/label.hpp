#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sgrl/decompose.hpp"
#include "sgrl/rng.hpp"

namespace sgrl::label {

enum class LabelSource { oracle, oracle_noised, vlm };

struct LabelDecision {
    bool success = false;
    LabelSource source = LabelSource::oracle;
    std::optional<std::string> raw_response;  // present iff source == vlm
};

// Ground-truth labeler, optionally noised: the truth is flipped with
// probability error_rate drawn from the labeler's own stream. error_rate
// must lie in [0, 0.5).
LabelDecision label_oracle(bool env_truth, double error_rate, Rng& rng);

// Image-query client. `ask` sends the context prompt first, then the image
// payload with the query, and returns the model's free-text answer.
class VlmClient {
public:
    virtual ~VlmClient() = default;
    virtual std::string ask(const std::string& context_prompt, const std::string& image_payload,
                            const std::string& query) = 0;
};

// Fixed query of the two-stage labeling protocol.
inline constexpr const char* kLabelQuery = "What is the output of this image?";

// Parses the response to 0/1 by its last standalone digit token. Anything
// else raises ParseError; callers treat those trajectories as unlabeled,
// never as failed.
bool parse_binary_answer(const std::string& response);

LabelDecision label_vlm(const std::string& final_image, const std::string& context_prompt,
                        const std::string& query, VlmClient& client);

// Line-delimited audit record per decision.
class LabelAuditLog {
public:
    explicit LabelAuditLog(std::filesystem::path file);
    void append(std::uint64_t trajectory_id, const LabelDecision& decision);

private:
    std::filesystem::path file_;
};

struct AuditSummary {
    std::size_t total = 0;
    std::size_t successes = 0;
    std::size_t by_source[3] = {0, 0, 0};
};

AuditSummary summarize_audit(const std::filesystem::path& file);

std::string to_string(LabelSource s);

}  // namespace sgrl::label
