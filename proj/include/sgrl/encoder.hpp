#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sgrl/embedding.hpp"

namespace sgrl::embed {

// Text/video-segment encoder pair behind one interface. Implementations are
// immutable after construction and safe for concurrent reads.
class Encoder {
public:
    virtual ~Encoder() = default;

    virtual std::size_t dim() const = 0;

    // Deterministic: identical prompt yields a bit-identical unit-norm
    // embedding. Throws std::invalid_argument on an empty prompt.
    virtual Embedding encode_text(const std::string& prompt) const = 0;

    // Embeds one window of frames. Throws std::invalid_argument on an
    // empty window.
    virtual Embedding encode_segment(std::span<const FrameFeature> frames) const = 0;
};

// prompt -> canonical event table, one "prompt TAB event" per line, UTF-8.
// '#' starts a comment line.
class PromptTable {
public:
    PromptTable() = default;
    static PromptTable load(const std::filesystem::path& file);

    void add(const std::string& prompt, const std::string& event);
    // Event for a prompt, or empty string when the prompt is unmapped.
    std::string event_for(const std::string& prompt) const;
    std::vector<std::string> events() const;
    std::size_t size() const { return table_.size(); }

private:
    std::map<std::string, std::string> table_;
};

// Deterministic synthetic backend. Every canonical event owns a fixed random
// unit anchor derived from the event name; a segment embedding is the
// normalized tag-frequency-weighted sum of anchors plus a small idle anchor,
// so repeating a frame leaves the embedding unchanged and a tag-free window
// lands exactly on the idle anchor. Text prompts resolve to their event's
// anchor through the prompt table; unmapped prompts fall back to an anchor
// hashed from the prompt text itself, which keeps encode_text total.
class SyntheticEncoder : public Encoder {
public:
    static constexpr std::size_t kDefaultDim = 64;
    static constexpr double kIdleWeight = 0.05;

    explicit SyntheticEncoder(PromptTable table,
                              std::size_t dim = kDefaultDim,
                              std::uint64_t seed = 0);

    std::size_t dim() const override { return dim_; }
    Embedding encode_text(const std::string& prompt) const override;
    Embedding encode_segment(std::span<const FrameFeature> frames) const override;

    // Unit anchor owned by a canonical event (or any name).
    Embedding anchor(const std::string& name) const;
    Embedding idle_anchor() const { return anchor(kIdleName); }

    const PromptTable& prompts() const { return table_; }

    static constexpr const char* kIdleName = "idle";

private:
    PromptTable table_;
    std::size_t dim_;
    std::uint64_t seed_;
};

}  // namespace sgrl::embed
