#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "novelty/domain.hpp"

namespace novelty::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitPipeline = 2,
    kExitConfig = 3,
    kExitInput = 4,
};

/// Everything the commands need, resolved from defaults < config file <
/// environment < flags.
struct Settings {
    PipelineConfig pipeline;
    std::string examples_path;
    std::string llm_base_url = "https://api.openai.com/v1";
    std::string embed_base_url = "https://api.openai.com/v1";
    std::string s2_base_url = "https://api.semanticscholar.org";
    std::string llm_api_key;
    std::string embed_api_key;
    std::string s2_api_key;
};

/// Sets one key (PipelineConfig field name, N / k aliases, examples_path or
/// *_base_url). Throws Error(InvalidConfig) for unknown keys or bad values.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

/// Reads `key = value` lines; '#' starts a comment, values may be quoted.
void apply_config_text(Settings& settings, const std::string& text);

/// NOVELTY_{LLM,EMBED,S2}_API_KEY and NOVELTY_{LLM,EMBED,S2}_BASE_URL.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_environment(Settings& settings, const EnvLookup& env);
EnvLookup process_environment();

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_environment());

}  // namespace novelty::cli
