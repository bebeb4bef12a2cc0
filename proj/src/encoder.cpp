#include "sgrl/encoder.hpp"

#include <fstream>
#include <stdexcept>

#include "sgrl/rng.hpp"

namespace sgrl::embed {

PromptTable PromptTable::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open prompt table: " + file.string());
    PromptTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("prompt table line without TAB: " + line);
        t.add(line.substr(0, tab), line.substr(tab + 1));
    }
    return t;
}

void PromptTable::add(const std::string& prompt, const std::string& event) {
    table_[prompt] = event;
}

std::string PromptTable::event_for(const std::string& prompt) const {
    auto it = table_.find(prompt);
    return it == table_.end() ? std::string{} : it->second;
}

std::vector<std::string> PromptTable::events() const {
    std::vector<std::string> out;
    for (const auto& [prompt, event] : table_) out.push_back(event);
    return out;
}

SyntheticEncoder::SyntheticEncoder(PromptTable table, std::size_t dim, std::uint64_t seed)
    : table_(std::move(table)), dim_(dim), seed_(seed) {
    if (dim_ == 0) throw std::invalid_argument("encoder dimension must be positive");
}

Embedding SyntheticEncoder::anchor(const std::string& name) const {
    Rng rng(seed_ ^ fnv1a(name), "anchor");
    Embedding e;
    e.values.resize(dim_);
    for (double& v : e.values) v = rng.normal();
    normalize(e);
    return e;
}

Embedding SyntheticEncoder::encode_text(const std::string& prompt) const {
    if (prompt.empty()) throw std::invalid_argument("encode_text: empty prompt");
    std::string event = table_.event_for(prompt);
    if (event.empty()) return anchor("prompt:" + prompt);
    return anchor(event);
}

Embedding SyntheticEncoder::encode_segment(std::span<const FrameFeature> frames) const {
    if (frames.empty()) throw std::invalid_argument("encode_segment: empty window");

    // Every frame carries equal weight, split across its tags; untagged
    // frames contribute the idle anchor. Events far apart in a long window
    // dilute accordingly, and a frame repeated W times embeds identically
    // to the frame alone.
    std::map<std::string, double> weights;
    double idle_mass = 0.0;
    const double per_frame = 1.0 / static_cast<double>(frames.size());
    for (const auto& f : frames) {
        if (f.event_tags.empty()) {
            idle_mass += per_frame;
            continue;
        }
        double share = per_frame / static_cast<double>(f.event_tags.size());
        for (const auto& tag : f.event_tags) weights[tag] += share;
    }

    Embedding out;
    out.values.assign(dim_, 0.0);
    for (const auto& [tag, w] : weights) {
        Embedding a = anchor(tag);
        for (std::size_t i = 0; i < dim_; ++i) out.values[i] += w * a.values[i];
    }
    Embedding idle = idle_anchor();
    for (std::size_t i = 0; i < dim_; ++i)
        out.values[i] += (idle_mass + kIdleWeight) * idle.values[i];
    normalize(out);
    return out;
}

}  // namespace sgrl::embed
