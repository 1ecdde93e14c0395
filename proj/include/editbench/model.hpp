#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "editbench/retry.hpp"

namespace editbench {

/// Answer-producing model under evaluation. Implementations must tolerate concurrent calls.
class ModelProvider {
public:
    virtual ~ModelProvider() = default;
    virtual std::string answer(const std::string& question, const std::optional<std::string>& context) = 0;
    virtual std::string identity() const = 0;
};

/// POST {"question", "context"?} -> {"answer"}.
class HttpModelProvider final : public ModelProvider {
public:
    HttpModelProvider(std::string endpoint, std::string identity = "http",
                      std::chrono::seconds timeout = std::chrono::seconds(60));
    std::string answer(const std::string& question, const std::optional<std::string>& context) override;
    std::string identity() const override { return identity_; }

private:
    std::string endpoint_;
    std::string identity_;
    std::chrono::seconds timeout_;
};

/// Long-running child process speaking one JSON request line ({"question","context"?})
/// and reading one plain-text answer line per call. Calls are serialized.
class SubprocessModelProvider final : public ModelProvider {
public:
    explicit SubprocessModelProvider(std::string command);
    ~SubprocessModelProvider() override;
    SubprocessModelProvider(const SubprocessModelProvider&) = delete;
    SubprocessModelProvider& operator=(const SubprocessModelProvider&) = delete;

    std::string answer(const std::string& question, const std::optional<std::string>& context) override;
    std::string identity() const override { return "subprocess:" + command_; }

private:
    std::string command_;
    int pid_ = -1;
    std::FILE* to_child_ = nullptr;
    std::FILE* from_child_ = nullptr;
    std::mutex mutex_;
};

/// Answers from a question -> answer table; unknown questions get `fallback`.
class LookupModel final : public ModelProvider {
public:
    explicit LookupModel(std::map<std::string, std::string> table, std::string fallback = "unknown",
                         std::string identity = "lookup");
    std::string answer(const std::string& question, const std::optional<std::string>& context) override;
    std::string identity() const override { return identity_; }

private:
    std::map<std::string, std::string> table_;
    std::string fallback_;
    std::string identity_;
};

class ConstantModel final : public ModelProvider {
public:
    explicit ConstantModel(std::string text) : text_(std::move(text)) {}
    std::string answer(const std::string&, const std::optional<std::string>&) override { return text_; }
    std::string identity() const override { return "constant:" + text_; }

private:
    std::string text_;
};

/// Returns the first "A: " line of the context, i.e. the rank-1 retrieved answer.
/// Without a retrieved answer it returns `fallback`.
class CopyFirstAnswerModel final : public ModelProvider {
public:
    explicit CopyFirstAnswerModel(std::string fallback = "unknown") : fallback_(std::move(fallback)) {}
    std::string answer(const std::string& question, const std::optional<std::string>& context) override;
    std::string identity() const override { return "copy-first-answer"; }

private:
    std::string fallback_;
};

class CallbackModel final : public ModelProvider {
public:
    using Fn = std::function<std::string(const std::string&, const std::optional<std::string>&)>;
    CallbackModel(Fn fn, std::string identity) : fn_(std::move(fn)), identity_(std::move(identity)) {}
    std::string answer(const std::string& q, const std::optional<std::string>& c) override { return fn_(q, c); }
    std::string identity() const override { return identity_; }

private:
    Fn fn_;
    std::string identity_;
};

}  // namespace editbench
