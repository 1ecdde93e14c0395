#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace editbench::http {

/// POSTs a JSON body and parses the JSON reply. Transport failures, 429 and 5xx raise
/// a retryable ProviderError; other non-2xx statuses raise a non-retryable one.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::vector<std::pair<std::string, std::string>>& headers = {},
                         std::chrono::seconds timeout = std::chrono::seconds(60));

}  // namespace editbench::http
