#include "editbench/model.hpp"

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

#include "editbench/error.hpp"
#include "editbench/http.hpp"
#include "editbench/text.hpp"
#include "json.hpp"

namespace editbench {

HttpModelProvider::HttpModelProvider(std::string endpoint, std::string identity, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), identity_(std::move(identity)), timeout_(timeout) {
    if (endpoint_.empty()) throw ConfigError("eval.model_endpoint", "required for the http model");
}

std::string HttpModelProvider::answer(const std::string& question, const std::optional<std::string>& context) {
    nlohmann::json body{{"question", question}};
    if (context) body["context"] = *context;
    auto reply = http::post_json(endpoint_, body, {}, timeout_);
    if (!reply.is_object() || !reply.contains("answer") || !reply["answer"].is_string())
        throw ProviderError("model endpoint reply lacks a string \"answer\"", false);
    return reply["answer"].get<std::string>();
}

SubprocessModelProvider::SubprocessModelProvider(std::string command) : command_(std::move(command)) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw ConfigError("eval.model_command", "pipe failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw ConfigError("eval.model_command", "pipe failed");
    }
    std::signal(SIGPIPE, SIG_IGN);
    pid_ = ::fork();
    if (pid_ < 0) throw ConfigError("eval.model_command", "fork failed");
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = ::fdopen(in_pipe[1], "w");
    from_child_ = ::fdopen(out_pipe[0], "r");
}

SubprocessModelProvider::~SubprocessModelProvider() {
    if (to_child_ != nullptr) std::fclose(to_child_);
    if (from_child_ != nullptr) std::fclose(from_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

std::string SubprocessModelProvider::answer(const std::string& question, const std::optional<std::string>& context) {
    nlohmann::json request{{"question", question}};
    if (context) request["context"] = *context;
    const auto line = request.dump() + "\n";

    std::lock_guard lock(mutex_);
    if (std::fwrite(line.data(), 1, line.size(), to_child_) != line.size() || std::fflush(to_child_) != 0)
        throw ProviderError("model subprocess closed its input", false);
    std::string out;
    for (int c = std::fgetc(from_child_); c != '\n'; c = std::fgetc(from_child_)) {
        if (c == EOF) {
            if (out.empty()) throw ProviderError("model subprocess exited", false);
            break;
        }
        out.push_back(static_cast<char>(c));
    }
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return out;
}

LookupModel::LookupModel(std::map<std::string, std::string> table, std::string fallback, std::string identity)
    : table_(std::move(table)), fallback_(std::move(fallback)), identity_(std::move(identity)) {}

std::string LookupModel::answer(const std::string& question, const std::optional<std::string>&) {
    auto it = table_.find(question);
    return it == table_.end() ? fallback_ : it->second;
}

std::string CopyFirstAnswerModel::answer(const std::string& question, const std::optional<std::string>& context) {
    if (!context) return fallback_;
    const std::string& ctx = *context;
    // The final "A:" belongs to the test question, so a retrieved answer is an "A: "
    // line that is followed by more context.
    std::size_t pos = 0;
    while (pos < ctx.size()) {
        auto end = ctx.find('\n', pos);
        if (end == std::string::npos) end = ctx.size();
        std::string_view line(ctx.data() + pos, end - pos);
        if (line.substr(0, 3) == "A: " && end < ctx.size()) return std::string(line.substr(3));
        pos = end + 1;
    }
    (void)question;
    return fallback_;
}

}  // namespace editbench
