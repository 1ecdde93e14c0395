#include "editbench/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "editbench/error.hpp"
#include "editbench/hash.hpp"
#include "editbench/http.hpp"
#include "editbench/qa.hpp"
#include "editbench/text.hpp"

namespace editbench {

HttpChatProvider::HttpChatProvider(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
    if (endpoint_.empty()) throw ConfigError("qa.endpoint", "required for the http provider");
    if (const char* key = std::getenv("QAFORGE_API_KEY")) api_key_ = key;
}

GenerationResponse HttpChatProvider::generate(const GenerationRequest& request) {
    nlohmann::json body{{"model", request.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
                        {"temperature", request.params.temperature},
                        {"max_tokens", request.params.max_tokens}};
    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
    auto reply = http::post_json(endpoint_, body, headers, timeout_);
    GenerationResponse resp;
    try {
        const auto& choice = reply.at("choices").at(0);
        if (choice.contains("message")) {
            resp.text = choice.at("message").at("content").get<std::string>();
        } else {
            resp.text = choice.at("text").get<std::string>();
        }
    } catch (const nlohmann::json::exception&) {
        throw ProviderError("completion endpoint returned an unexpected reply shape", false);
    }
    if (resp.text.empty()) throw ProviderError("completion endpoint returned empty text");
    resp.provider_meta = {{"provider", "http"}, {"model", request.model}};
    if (reply.contains("usage")) resp.provider_meta["usage"] = reply["usage"];
    return resp;
}

std::string request_hash(const GenerationRequest& request) {
    return sha256_hex(request.model + '\n' + request.prompt);
}

ReplayProvider::ReplayProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
        throw ConfigError("qa.replay_dir", "not a directory: " + dir_.string());
}

GenerationResponse ReplayProvider::generate(const GenerationRequest& request) {
    const auto key = request_hash(request);
    std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
    if (!in) throw ProviderError("no replay entry for request " + key, false);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {ss.str(), {{"provider", "replay"}, {"key", key}}};
}

RecordingProvider::RecordingProvider(std::shared_ptr<GenerationProvider> upstream, std::filesystem::path dir)
    : upstream_(std::move(upstream)), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

GenerationResponse RecordingProvider::generate(const GenerationRequest& request) {
    auto resp = upstream_->generate(request);
    std::lock_guard lock(write_mutex_);
    std::ofstream out(dir_ / (request_hash(request) + ".txt"), std::ios::binary);
    out << resp.text;
    return resp;
}

namespace {

// Text after the last occurrence of `label` up to the end of that line.
std::optional<std::string> last_field(const std::string& prompt, std::string_view label) {
    const auto pos = prompt.rfind(label);
    if (pos == std::string::npos) return std::nullopt;
    const auto start = pos + label.size();
    const auto end = prompt.find('\n', start);
    return text::trim(std::string_view(prompt).substr(start, end == std::string::npos ? end : end - start));
}

std::string strip_question_mark(std::string q) {
    while (!q.empty() && (q.back() == '?' || q.back() == ' ')) q.pop_back();
    return q;
}

std::string lower_first(std::string q) {
    if (!q.empty() && q[0] >= 'A' && q[0] <= 'Z') q[0] = static_cast<char>(q[0] - 'A' + 'a');
    return q;
}

std::string persona_voice(const std::string& name, const std::string& question) {
    const auto q = lower_first(strip_question_mark(question));
    if (name == "Detective") return "The trail runs cold, so tell me: " + q + "?";
    if (name == "Casual") return "Hey, quick one for you: " + q + "?";
    if (name == "Pirate") return "Arr, matey, tell this old sea dog: " + q + "?";
    if (name == "Philosopher") return "Pray, in the contemplation of truth, " + q + "?";
    return "Me ask. " + q + "?";
}

}  // namespace

GenerationResponse FormulaicProvider::generate(const GenerationRequest& request) {
    const auto& prompt = request.prompt;
    GenerationResponse resp;
    resp.provider_meta = {{"provider", "formulaic"}};
    if (auto tuple = last_field(prompt, "Fact Tuple:")) {
        constexpr std::string_view mask = ", [MASKED-ENTITY-1], ";
        const auto m = tuple->find(mask);
        if (m == std::string::npos) throw ProviderError("formulaic: malformed multi-hop task", false);
        const auto left = tuple->substr(0, m);
        const auto right = tuple->substr(m + mask.size());
        const auto l = left.rfind(", ");
        const auto r = right.find(", ");
        if (l == std::string::npos || r == std::string::npos)
            throw ProviderError("formulaic: malformed multi-hop task", false);
        resp.text = "Q: What is the " + right.substr(0, r) + " of the " + left.substr(l + 2) + " of " +
                    left.substr(0, l) + "?\nA: " + right.substr(r + 2) + "\n";
        return resp;
    }
    if (auto fact = last_field(prompt, "Fact Triplet:")) {
        const auto last = fact->rfind(", ");
        if (last == std::string::npos || last == 0) throw ProviderError("formulaic: malformed triplet task", false);
        const auto mid = fact->rfind(", ", last - 1);
        if (mid == std::string::npos) throw ProviderError("formulaic: malformed triplet task", false);
        resp.text = "Q: What is the " + fact->substr(mid + 2, last - mid - 2) + " of " + fact->substr(0, mid) +
                    "?\nA: " + fact->substr(last + 2) + "\n";
        return resp;
    }
    if (auto question = last_field(prompt, "Original Question:")) {
        for (const auto& persona : default_personas()) {
            if (prompt.rfind(persona.description, 0) == 0) {
                resp.text = "Reformulated Question: " + persona_voice(persona.name, *question) + "\n";
                return resp;
            }
        }
        resp.text = "Reformulated Question: Could you tell me " + lower_first(strip_question_mark(*question)) + "?\n";
        return resp;
    }
    throw ProviderError("formulaic: unrecognized prompt", false);
}

}  // namespace editbench
