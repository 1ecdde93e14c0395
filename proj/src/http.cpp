#include "editbench/http.hpp"

#include "editbench/error.hpp"
#include "httplib.h"

namespace editbench::http {

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ProviderError("invalid endpoint URL: " + url, false);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::seconds timeout) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(parts.path, hdrs, body.dump(), "application/json");
    if (!res) throw ProviderError("request to " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw ProviderError("endpoint " + url + " returned HTTP " + std::to_string(res->status));
    if (res->status < 200 || res->status >= 300)
        throw ProviderError("endpoint " + url + " returned HTTP " + std::to_string(res->status), false);
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw ProviderError("endpoint " + url + " returned invalid JSON", false);
    return parsed;
}

}  // namespace editbench::http
