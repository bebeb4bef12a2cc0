#include "sgrl/decompose.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgrl/errors.hpp"

namespace sgrl::decompose {

using nlohmann::json;

DecompositionCache::DecompositionCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    if (!in) return;  // empty cache until first store
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        SubgoalDecomposition dec;
        dec.task = j.at("task").get<std::string>();
        dec.subgoals = j.at("subgoals").get<std::vector<std::string>>();
        dec.failures = j.value("failures", std::vector<std::string>{});
        dec.source = DecompositionSource::fixture;
        records_[dec.task] = dec;
    }
}

std::optional<SubgoalDecomposition> DecompositionCache::lookup(const std::string& task) const {
    auto it = records_.find(task);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void DecompositionCache::store(const SubgoalDecomposition& dec) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    records_[dec.task] = dec;
    save_locked();
}

void DecompositionCache::save_locked() const {
    std::ofstream out(file_, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache: " + file_.string());
    for (const auto& [task, dec] : records_) {
        json j;
        j["task"] = dec.task;
        j["subgoals"] = dec.subgoals;
        j["failures"] = dec.failures;
        out << j.dump() << '\n';
    }
}

FailurePrompts FailurePrompts::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open failure prompts: " + file.string());
    FailurePrompts fp;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("failure prompt line without TAB: " + line);
        fp.by_task_[line.substr(0, tab)].push_back(line.substr(tab + 1));
    }
    return fp;
}

std::vector<std::string> FailurePrompts::for_task(const std::string& task) const {
    auto it = by_task_.find(task);
    return it == by_task_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> parse_numbered_list(const std::string& text) {
    // Items are delimited by "<number>." or "<number>)" markers; everything
    // between two markers belongs to the first.
    std::vector<std::string> items;
    std::vector<std::size_t> marker_starts, item_starts;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])))) continue;
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j < text.size() && (text[j] == '.' || text[j] == ')')) {
            marker_starts.push_back(i);
            item_starts.push_back(j + 1);
            i = j;
        }
    }
    auto trim = [](std::string s) {
        auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
        while (!s.empty() && issp(s.front())) s.erase(s.begin());
        while (!s.empty() && issp(s.back())) s.pop_back();
        return s;
    };
    for (std::size_t k = 0; k < marker_starts.size(); ++k) {
        std::size_t end = (k + 1 < marker_starts.size()) ? marker_starts[k + 1] : text.size();
        std::string item = trim(text.substr(item_starts[k], end - item_starts[k]));
        if (!item.empty()) items.push_back(item);
    }
    if (items.empty()) throw ParseError("no numbered list items in response", text);
    return items;
}

Decomposer::Decomposer(std::shared_ptr<DecompositionCache> cache, FailurePrompts failures,
                       std::string instruction_template, std::shared_ptr<LlmClient> client)
    : cache_(std::move(cache)),
      failures_(std::move(failures)),
      template_(std::move(instruction_template)),
      client_(std::move(client)) {}

SubgoalDecomposition Decomposer::decompose(const std::string& task, DecomposeMode mode) {
    if (task.empty()) throw std::invalid_argument("decompose: empty task");

    if (auto hit = cache_->lookup(task)) return *hit;  // cache hit, no client call

    if (mode == DecomposeMode::fixture)
        throw NotFoundError("no fixture decomposition for task: " + task);

    if (!client_) throw TransportError("live decomposition requested without a client");

    std::string request = template_;
    auto pos = request.find("{task}");
    if (pos != std::string::npos) request.replace(pos, 6, task);
    else request += "\nTask: " + task;

    std::string response = client_->complete(request);
    SubgoalDecomposition dec;
    dec.task = task;
    dec.subgoals = parse_numbered_list(response);
    dec.failures = failures_.for_task(task);  // humans author negatives, not the LLM
    dec.source = DecompositionSource::live;
    cache_->store(dec);
    return dec;
}

reward::PromptSet build_prompt_set(const SubgoalDecomposition& dec,
                                   const embed::Encoder& encoder, const std::string& coarse,
                                   const std::function<void(const std::string&)>& warn) {
    if (dec.subgoals.empty()) throw std::invalid_argument("decomposition has no sub-goals");

    reward::PromptSet set;
    auto add_unique = [&](std::vector<std::pair<std::string, embed::Embedding>>& list,
                          const std::string& text) {
        for (const auto& [existing, z] : list) {
            if (existing == text) {
                if (warn) warn("duplicate prompt dropped: " + text);
                return;
            }
        }
        list.emplace_back(text, encoder.encode_text(text));
    };

    for (const auto& s : dec.subgoals) add_unique(set.positives, s);
    for (const auto& f : dec.failures) add_unique(set.negatives, f);
    set.coarse = {coarse, encoder.encode_text(coarse)};
    return set;
}

}  // namespace sgrl::decompose
