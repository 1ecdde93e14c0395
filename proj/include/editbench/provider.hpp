#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"

namespace editbench {

struct GenerationParams {
    double temperature = 0.7;
    int max_tokens = 256;
};

struct GenerationRequest {
    std::string model;
    std::string prompt;
    GenerationParams params;
};

struct GenerationResponse {
    std::string text;
    nlohmann::json provider_meta = nlohmann::json::object();
};

/// Text-generation backend. Implementations must be safe to call concurrently.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

/// Chat-completions endpoint. The bearer token comes from QAFORGE_API_KEY when set.
class HttpChatProvider final : public GenerationProvider {
public:
    explicit HttpChatProvider(std::string endpoint,
                              std::chrono::seconds timeout = std::chrono::seconds(60));
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

/// SHA-256 hex of model + '\n' + prompt; names replay files.
std::string request_hash(const GenerationRequest& request);

/// Serves canned responses from `<dir>/<request_hash>.txt`. A miss is a non-retryable error.
class ReplayProvider final : public GenerationProvider {
public:
    explicit ReplayProvider(std::filesystem::path dir);
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    std::filesystem::path dir_;
};

/// Forwards to `upstream` and stores every response as a replay file.
class RecordingProvider final : public GenerationProvider {
public:
    RecordingProvider(std::shared_ptr<GenerationProvider> upstream, std::filesystem::path dir);
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    std::shared_ptr<GenerationProvider> upstream_;
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

/// Offline, deterministic stand-in for a language model. It reads the task section of
/// the default prompt templates and answers with fixed phrasings: "What is the <relation>
/// of <subject>?" for triplets, "What is the <r2> of the <r1> of <e0>?" for multi-hop
/// tuples, and a prefixed restatement for rephrase and persona prompts.
class FormulaicProvider final : public GenerationProvider {
public:
    GenerationResponse generate(const GenerationRequest& request) override;
};

class CallbackProvider final : public GenerationProvider {
public:
    using Fn = std::function<std::string(const GenerationRequest&)>;
    explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}
    GenerationResponse generate(const GenerationRequest& request) override { return {fn_(request), {}}; }

private:
    Fn fn_;
};

}  // namespace editbench
