#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "sgrl/decompose.hpp"
#include "sgrl/errors.hpp"

namespace sgrl::decompose {

using nlohmann::json;

namespace {
std::string env_or(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}
}  // namespace

HttpLlmClient::HttpLlmClient()
    : endpoint_(env_or("SGRL_LLM_ENDPOINT", "https://api.openai.com")),
      api_key_(env_or("SGRL_LLM_API_KEY", "")),
      model_(env_or("SGRL_LLM_MODEL", "gpt-4o")) {}

bool HttpLlmClient::configured() {
    const char* key = std::getenv("SGRL_LLM_API_KEY");
    return key != nullptr && key[0] != '\0';
}

std::string HttpLlmClient::complete(const std::string& request) {
    if (api_key_.empty()) throw TransportError("SGRL_LLM_API_KEY is not set");

    json body;
    body["model"] = model_;
    body["messages"] = json::array({{{"role", "user"}, {"content", request}}});

    httplib::Client cli(endpoint_);
    cli.set_connection_timeout(30);
    cli.set_read_timeout(120);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    auto res = cli.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to " + endpoint_ + " failed");
    if (res->status != 200)
        throw TransportError("completion endpoint returned status " +
                             std::to_string(res->status));
    try {
        json j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed completion response: ") + e.what(), res->body);
    }
}

}  // namespace sgrl::decompose
