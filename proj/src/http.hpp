#pragma once

// Thin wrapper over cpp-httplib so only one translation unit pulls it in.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "novelty/http_providers.hpp"

namespace novelty::http {

struct Response {
    int status = 0;  // 0 when the connection failed
    std::string body;
    std::string error;  // transport error description
};

using Params = std::vector<std::pair<std::string, std::string>>;
using Headers = std::map<std::string, std::string>;

Response get(const BaseUrl& base, const std::string& path, const Params& params, const Headers& headers,
             double timeout_seconds);
Response post_json(const BaseUrl& base, const std::string& path, const Params& params,
                   const Headers& headers, const std::string& body, double timeout_seconds);

std::string url_encode(const std::string& value);

}  // namespace novelty::http
