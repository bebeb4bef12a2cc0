#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sgrl/encoder.hpp"
#include "sgrl/reward.hpp"

namespace sgrl::decompose {

enum class DecomposeMode { fixture, live };
enum class DecompositionSource { fixture, live };

// Coarse instruction broken into ordered sub-goal prompts, plus the
// human-authored failure prompts attached to the task.
struct SubgoalDecomposition {
    std::string task;
    std::vector<std::string> subgoals;
    std::vector<std::string> failures;
    DecompositionSource source = DecompositionSource::fixture;
};

// Minimal completion client. Implementations: HTTP adapter (tools), scripted
// doubles (tests).
class LlmClient {
public:
    virtual ~LlmClient() = default;
    // Free-text completion for one request. Throws TransportError on failure.
    virtual std::string complete(const std::string& request) = 0;
};

// OpenAI-compatible chat endpoint over HTTP. Credentials come from the
// environment (SGRL_LLM_API_KEY, SGRL_LLM_ENDPOINT, SGRL_LLM_MODEL); when the
// key is absent, configured() is false and callers stay in fixture mode.
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient();
    static bool configured();
    std::string complete(const std::string& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_;
};

// One JSON record per task, line-delimited, keyed by the exact task string.
class DecompositionCache {
public:
    explicit DecompositionCache(std::filesystem::path file);

    std::optional<SubgoalDecomposition> lookup(const std::string& task) const;
    void store(const SubgoalDecomposition& dec);  // serialized through one writer
    std::size_t size() const { return records_.size(); }

private:
    void save_locked() const;

    std::filesystem::path file_;
    std::map<std::string, SubgoalDecomposition> records_;
    mutable std::mutex write_mutex_;
};

// Per-task failure prompts, one "task TAB prompt" per line. Failure guidance
// is human-edited configuration and never comes from the LLM.
class FailurePrompts {
public:
    FailurePrompts() = default;
    static FailurePrompts load(const std::filesystem::path& file);
    std::vector<std::string> for_task(const std::string& task) const;

private:
    std::map<std::string, std::vector<std::string>> by_task_;
};

// Splits a free-text numbered list ("1. reach 2. grasp", one or many lines)
// into its items. Throws ParseError (raw text attached) when no items parse.
std::vector<std::string> parse_numbered_list(const std::string& text);

class Decomposer {
public:
    Decomposer(std::shared_ptr<DecompositionCache> cache, FailurePrompts failures,
               std::string instruction_template, std::shared_ptr<LlmClient> client = nullptr);

    // Fixture mode serves the cache verbatim (miss -> NotFoundError). Live
    // mode asks the client once per uncached task, parses a numbered list,
    // attaches configured failure prompts and persists the record.
    SubgoalDecomposition decompose(const std::string& task, DecomposeMode mode);

private:
    std::shared_ptr<DecompositionCache> cache_;
    FailurePrompts failures_;
    std::string template_;
    std::shared_ptr<LlmClient> client_;
};

// Embeds a decomposition into the PromptSet consumed by the rewarder:
// sub-goals as positives (de-duplicated, order kept), failures as negatives,
// the coarse instruction as the baseline prompt. `warn` receives a message
// per dropped duplicate.
reward::PromptSet build_prompt_set(const SubgoalDecomposition& dec,
                                   const embed::Encoder& encoder, const std::string& coarse,
                                   const std::function<void(const std::string&)>& warn = {});

}  // namespace sgrl::decompose
