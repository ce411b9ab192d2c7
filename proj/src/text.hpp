#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace novelty::text {

/// Replaces each "{name}" placeholder; unknown braces are left alone.
inline std::string render(std::string_view tpl,
                          const std::vector<std::pair<std::string_view, std::string>>& values) {
    std::string out(tpl);
    for (const auto& [name, value] : values) {
        const std::string key = "{" + std::string(name) + "}";
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    }
    return out;
}

/// Runs of whitespace become a single space; ends are trimmed.
inline std::string collapse_whitespace(std::string_view in) {
    std::string out;
    bool space = false;
    for (char c : in) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            space = !out.empty();
        } else {
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace novelty::text
