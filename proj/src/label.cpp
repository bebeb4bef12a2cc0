#include "sgrl/label.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

#include "sgrl/errors.hpp"

namespace sgrl::label {

using nlohmann::json;

LabelDecision label_oracle(bool env_truth, double error_rate, Rng& rng) {
    if (error_rate < 0.0 || error_rate >= 0.5)
        throw std::invalid_argument("error_rate must lie in [0, 0.5)");
    LabelDecision d;
    if (error_rate == 0.0) {
        d.success = env_truth;
        d.source = LabelSource::oracle;
        return d;
    }
    bool flip = rng.uniform() < error_rate;
    d.success = flip ? !env_truth : env_truth;
    d.source = LabelSource::oracle_noised;
    return d;
}

bool parse_binary_answer(const std::string& response) {
    // Last standalone '0' or '1' token decides; no silent default.
    std::optional<bool> answer;
    for (std::size_t i = 0; i < response.size(); ++i) {
        char c = response[i];
        if (c != '0' && c != '1') continue;
        bool left_ok = (i == 0) || !std::isalnum(static_cast<unsigned char>(response[i - 1]));
        bool right_ok =
            (i + 1 == response.size()) || !std::isalnum(static_cast<unsigned char>(response[i + 1]));
        if (left_ok && right_ok) answer = (c == '1');
    }
    if (!answer) throw ParseError("no standalone 0/1 in labeler response", response);
    return *answer;
}

LabelDecision label_vlm(const std::string& final_image, const std::string& context_prompt,
                        const std::string& query, VlmClient& client) {
    std::string response = client.ask(context_prompt, final_image, query);
    LabelDecision d;
    d.success = parse_binary_answer(response);
    d.source = LabelSource::vlm;
    d.raw_response = response;
    return d;
}

LabelAuditLog::LabelAuditLog(std::filesystem::path file) : file_(std::move(file)) {}

void LabelAuditLog::append(std::uint64_t trajectory_id, const LabelDecision& decision) {
    std::ofstream out(file_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append audit log: " + file_.string());
    json j;
    j["trajectory_id"] = trajectory_id;
    j["source"] = to_string(decision.source);
    j["success"] = decision.success;
    if (decision.raw_response) j["raw_response"] = *decision.raw_response;
    out << j.dump() << '\n';
}

AuditSummary summarize_audit(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open audit log: " + file.string());
    AuditSummary s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ++s.total;
        if (j.at("success").get<bool>()) ++s.successes;
        std::string src = j.at("source").get<std::string>();
        if (src == "oracle") ++s.by_source[0];
        else if (src == "oracle_noised") ++s.by_source[1];
        else ++s.by_source[2];
    }
    return s;
}

std::string to_string(LabelSource s) {
    switch (s) {
        case LabelSource::oracle: return "oracle";
        case LabelSource::oracle_noised: return "oracle_noised";
        case LabelSource::vlm: return "vlm";
    }
    throw std::logic_error("unreachable");
}

}  // namespace sgrl::label
