#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "http.hpp"

namespace novelty::http {

namespace {

httplib::Headers to_headers(const Headers& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) {
        out.emplace(k, v);
    }
    return out;
}

std::string with_query(const std::string& path, const Params& params) {
    if (params.empty()) {
        return path;
    }
    std::string out = path + "?";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i > 0) out += "&";
        out += url_encode(params[i].first) + "=" + url_encode(params[i].second);
    }
    return out;
}

Response convert(const httplib::Result& res) {
    Response out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

httplib::Client make_client(const BaseUrl& base, double timeout_seconds) {
    httplib::Client client(base.origin);
    auto secs = static_cast<time_t>(timeout_seconds);
    auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(std::min<time_t>(secs, 10), usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    return client;
}

}  // namespace

std::string url_encode(const std::string& value) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xf]);
        }
    }
    return out;
}

Response get(const BaseUrl& base, const std::string& path, const Params& params, const Headers& headers,
             double timeout_seconds) {
    auto client = make_client(base, timeout_seconds);
    return convert(client.Get(with_query(base.prefix + path, params), to_headers(headers)));
}

Response post_json(const BaseUrl& base, const std::string& path, const Params& params,
                   const Headers& headers, const std::string& body, double timeout_seconds) {
    auto client = make_client(base, timeout_seconds);
    return convert(
        client.Post(with_query(base.prefix + path, params), to_headers(headers), body, "application/json"));
}

}  // namespace novelty::http
