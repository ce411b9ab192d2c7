#include "novelty/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "novelty/digest.hpp"
#include "novelty/evaluation.hpp"
#include "novelty/http_providers.hpp"
#include "novelty/json_io.hpp"
#include "novelty/mock_providers.hpp"
#include "novelty/pipeline.hpp"
#include "novelty/scholar.hpp"

namespace fs = std::filesystem;

namespace novelty::cli {

namespace {

/// Bad invocation or unreadable file: exit 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input that was read but does not parse or validate: exit 4.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string unquote(std::string value) {
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorKind::InvalidConfig, "setting '" + key + "': '" + value + "' is not a valid number");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double d = std::stod(value, &used);
        if (used == value.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidConfig, "setting '" + key + "': '" + value + "' is not a valid number");
}

}  // namespace

void apply_setting(Settings& s, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = unquote(trim(raw_value));
    auto& p = s.pipeline;
    auto as_int = [&] { return parse_number<int>(key, value); };

    if (key == "N" || key == "filter_size") p.filter_size = as_int();
    else if (key == "k" || key == "evidence_size") p.evidence_size = as_int();
    else if (key == "n_examples") p.n_examples = as_int();
    else if (key == "example_seed") p.example_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "query_model_id") p.query_model_id = value;
    else if (key == "rerank_model_id") p.rerank_model_id = value;
    else if (key == "judge_model_id") p.judge_model_id = value;
    else if (key == "embedding_model_id") p.embedding_model_id = value;
    else if (key == "window") p.window = as_int();
    else if (key == "stride") p.stride = as_int();
    else if (key == "max_queries") p.max_queries = as_int();
    else if (key == "per_query_limit") p.per_query_limit = as_int();
    else if (key == "snippet_limit") p.snippet_limit = as_int();
    else if (key == "recommendation_limit") p.recommendation_limit = as_int();
    else if (key == "temperature") p.temperature = parse_double(key, value);
    else if (key == "rate_limit") p.rate_limit = parse_double(key, value);
    else if (key == "judge_repair_attempts") p.judge_repair_attempts = as_int();
    else if (key == "query_repair_attempts") p.query_repair_attempts = as_int();
    else if (key == "max_retries") p.max_retries = as_int();
    else if (key == "retry_backoff_seconds") p.retry_backoff_seconds = parse_double(key, value);
    else if (key == "judge_prompt_char_budget") p.judge_prompt_char_budget = parse_number<std::size_t>(key, value);
    else if (key == "examples_path") s.examples_path = value;
    else if (key == "llm_base_url") s.llm_base_url = value;
    else if (key == "embed_base_url") s.embed_base_url = value;
    else if (key == "s2_base_url") s.s2_base_url = value;
    else throw Error(ErrorKind::InvalidConfig, "unknown setting '" + key + "'");
}

void apply_config_text(Settings& settings, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(n) + ": expected 'key = value'");
        }
        try {
            apply_setting(settings, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(n) + ": " + e.what());
        }
    }
}

void apply_environment(Settings& s, const EnvLookup& env) {
    auto take = [&](const char* name, std::string& into) {
        if (auto v = env(name); v && !v->empty()) into = *v;
    };
    take("NOVELTY_LLM_BASE_URL", s.llm_base_url);
    take("NOVELTY_EMBED_BASE_URL", s.embed_base_url);
    take("NOVELTY_S2_BASE_URL", s.s2_base_url);
    take("NOVELTY_LLM_API_KEY", s.llm_api_key);
    take("NOVELTY_EMBED_API_KEY", s.embed_api_key);
    take("NOVELTY_S2_API_KEY", s.s2_api_key);
}

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

namespace {

struct Options {
    std::string config_path;
    std::string cache_dir = ".novelty-cache";
    bool no_cache = false;
    std::string mock_dir;
    bool live = false;
    std::string out_path;
    std::string format = "json";
    std::string log_level = "warn";
    std::string s2_base_url;
    std::vector<std::string> sets;

    // idea input
    std::string idea_path;
    std::string idea_id;
    std::vector<std::string> seeds;
    std::vector<std::string> exclusions;
    std::string sources = "keyword,snippet,recommendation";

    std::string ranked_path;
    std::string pool_path;
    std::string mode = "facet";
    std::string dataset_path;
    bool fixed_papers = false;
    std::string variants;
};

std::string read_file(const std::string& path, const char* what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError(std::string("cannot read ") + what + " '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json parse_json_file(const std::string& path, const char* what) {
    auto text = read_file(path, what);
    auto j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError(std::string(what) + " '" + path + "' is not valid JSON");
    return j;
}

/// Runs `fn`, reporting library errors as malformed input.
template <typename Fn>
auto as_input(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw InputError(what + ": " + e.what());
    } catch (const json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << content;
}

SourceSelection parse_sources(const std::string& text) {
    SourceSelection s{false, false, false};
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item == "keyword") s.keyword = true;
        else if (item == "snippet") s.snippet = true;
        else if (item == "recommendation") s.recommendation = true;
        else if (!item.empty()) throw UsageError("unknown source '" + item + "' (keyword, snippet, recommendation)");
    }
    return s;
}

/// Providers, cache and examples for one invocation.
struct Runtime {
    Settings settings;
    SystemClock system_clock;
    VirtualClock virtual_clock;
    std::shared_ptr<ResponseCache> cache;
    std::unique_ptr<RateLimiter> s2_limiter;
    std::unique_ptr<Gateway> gateway;
    std::unique_ptr<ScholarClient> scholar;
    std::vector<LabeledExample> examples;

    PipelineContext context() { return PipelineContext{*gateway, *scholar, examples}; }
};

void load_examples(Runtime& rt, const std::string& path) {
    auto records = as_input("examples file '" + path + "'", [&] { return load_dataset(path); });
    for (const auto& r : records) {
        rt.examples.push_back(as_input("examples file '" + path + "' line " + std::to_string(r.line),
                                       [&] { return r.to_example(); }));
    }
}

std::unique_ptr<Runtime> make_runtime(const Options& opt, Settings settings) {
    if (opt.mock_dir.empty() == !opt.live) {
        throw UsageError(opt.live ? "--mock and --live are mutually exclusive"
                                  : "choose --mock <dir> for fixture providers or --live for real APIs");
    }
    auto rt = std::make_unique<Runtime>();
    rt->settings = std::move(settings);
    auto& cfg = rt->settings.pipeline;
    cfg.validate();

    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::string cache_namespace;
    Clock* clock = nullptr;
    std::string examples_path = rt->settings.examples_path;

    if (!opt.mock_dir.empty()) {
        const fs::path dir(opt.mock_dir);
        if (!fs::is_directory(dir)) throw UsageError("mock fixture directory '" + opt.mock_dir + "' not found");
        const auto corpus_text = read_file((dir / "corpus.json").string(), "mock corpus");
        const auto chat_text = read_file((dir / "chat.json").string(), "mock chat table");
        std::string embed_text;
        if (fs::exists(dir / "embeddings.json")) embed_text = read_file((dir / "embeddings.json").string(), "mock embeddings");

        auto corpus = parse_json_file((dir / "corpus.json").string(), "mock corpus");
        auto chat_json = parse_json_file((dir / "chat.json").string(), "mock chat table");
        rt->scholar = as_input("mock corpus", [&] { return std::make_unique<FixtureScholarClient>(corpus); });
        chat = as_input("mock chat table", [&] { return MockChatProvider::from_json(chat_json); });
        if (embed_text.empty()) {
            embedder = std::make_shared<MockEmbeddingProvider>();
        } else {
            auto ej = parse_json_file((dir / "embeddings.json").string(), "mock embeddings");
            embedder = as_input("mock embeddings", [&] { return MockEmbeddingProvider::from_json(ej); });
        }
        cache_namespace = "mock-" + sha256_hex(corpus_text + '\0' + chat_text + '\0' + embed_text).substr(0, 16);
        // fixture runs pace and back off on a virtual clock
        clock = &rt->virtual_clock;
        if (examples_path.empty() && fs::exists(dir / "examples.jsonl")) {
            examples_path = (dir / "examples.jsonl").string();
        }
    } else {
        const auto& s = rt->settings;
        if (s.llm_api_key.empty()) throw Error(ErrorKind::InvalidConfig, "live mode needs NOVELTY_LLM_API_KEY");
        chat = std::make_shared<OpenAiChatProvider>(s.llm_base_url, s.llm_api_key);
        embedder = std::make_shared<OpenAiEmbeddingProvider>(s.embed_base_url,
                                                             s.embed_api_key.empty() ? s.llm_api_key : s.embed_api_key);
        cache_namespace = "live";
        clock = &rt->system_clock;
    }

    fs::path cache_path;
    if (!opt.no_cache && !opt.cache_dir.empty()) cache_path = fs::path(opt.cache_dir) / cache_namespace;
    rt->cache = std::make_shared<ResponseCache>(cache_path);

    RetryPolicy retry{cfg.max_retries, cfg.retry_backoff_seconds};
    rt->gateway = std::make_unique<Gateway>(chat, embedder, rt->cache, *clock, retry, cfg.rate_limit);
    if (!rt->scholar) {
        rt->s2_limiter = std::make_unique<RateLimiter>(*clock, cfg.rate_limit);
        HttpScholarClient::Options so;
        so.base_url = rt->settings.s2_base_url;
        so.api_key = rt->settings.s2_api_key;
        so.retry = retry;
        rt->scholar = std::make_unique<HttpScholarClient>(so, *clock, *rt->s2_limiter, rt->cache);
    }

    if (!examples_path.empty()) {
        load_examples(*rt, examples_path);
    } else if (cfg.n_examples > 0) {
        spdlog::warn("no in-context examples configured (examples_path); judging zero-shot");
        cfg.n_examples = 0;
    }
    return rt;
}

Settings resolve_settings(const Options& opt, const EnvLookup& env) {
    Settings s;
    if (!opt.config_path.empty()) apply_config_text(s, read_file(opt.config_path, "config file"));
    apply_environment(s, env);
    if (!opt.s2_base_url.empty()) s.s2_base_url = opt.s2_base_url;
    for (const auto& kv : opt.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        apply_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
    }
    s.pipeline.validate();
    return s;
}

Idea read_idea(const Options& opt, std::istream& in) {
    std::string text;
    if (opt.idea_path.empty() || opt.idea_path == "-") {
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    } else {
        text = read_file(opt.idea_path, "idea file");
    }
    return as_input("idea", [&] { return validate_idea(text, opt.seeds, opt.exclusions, opt.idea_id); });
}

std::string render_report(const NoveltyReport& report, const std::string& format) {
    if (format == "md") return to_markdown(report);
    return to_json(report).dump(2) + "\n";
}

int cmd_check(const Options& opt, const Settings& settings, std::istream& in, std::ostream& out) {
    std::optional<RerankStage> ranked;
    std::optional<Idea> idea;
    if (!opt.ranked_path.empty()) {
        auto doc = parse_json_file(opt.ranked_path, "rerank document");
        ranked = as_input("rerank document '" + opt.ranked_path + "'", [&] { return rerank_stage_from_json(doc); });
    } else {
        idea = read_idea(opt, in);
    }
    auto sources = parse_sources(opt.sources);
    auto rt = make_runtime(opt, settings);
    auto ctx = rt->context();
    const auto& cfg = rt->settings.pipeline;
    auto report = ranked ? run_judge(ctx, *ranked, cfg) : check_novelty(ctx, *idea, cfg, sources);
    if (!opt.out_path.empty()) write_output(opt.out_path, render_report(report, opt.format), out);
    out << display_name(report.verdict.decision) << "\n";
    return kExitOk;
}

int cmd_retrieve(const Options& opt, const Settings& settings, std::istream& in, std::ostream& out) {
    auto idea = read_idea(opt, in);
    auto sources = parse_sources(opt.sources);
    auto rt = make_runtime(opt, settings);
    auto ctx = rt->context();
    auto stage = run_retrieve(ctx, idea, rt->settings.pipeline, sources);
    write_output(opt.out_path, to_json(stage).dump(2) + "\n", out);
    return kExitOk;
}

int cmd_rerank(const Options& opt, const Settings& settings, std::ostream& out) {
    auto doc = parse_json_file(opt.pool_path, "pool document");
    auto retrieved = as_input("pool document '" + opt.pool_path + "'", [&] { return retrieve_stage_from_json(doc); });
    auto mode = parse_rerank_mode(opt.mode);
    auto rt = make_runtime(opt, settings);
    auto ctx = rt->context();
    auto stage = run_rerank(ctx, retrieved.idea, retrieved.retrieval.pool, rt->settings.pipeline, mode,
                            retrieved.trace);
    write_output(opt.out_path, to_json(stage).dump(2) + "\n", out);
    return kExitOk;
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
    auto text = read_file(path, "dataset");
    auto records = as_input("dataset '" + path + "'", [&] { return parse_dataset(text); });
    if (records.empty()) throw InputError("dataset '" + path + "' holds no records");
    return records;
}

Verdict judge_fixed(PipelineContext& ctx, const DatasetRecord& r, const PipelineConfig& cfg) {
    auto idea = validate_idea(r.idea_text, {}, {}, r.id);
    std::vector<std::string> ids;
    std::map<std::string, Paper> papers;
    for (std::size_t i = 0; i < r.top_papers.size(); ++i) {
        const auto& p = r.top_papers[i];
        std::string id = p.paper_id.empty() ? "paper-" + std::to_string(i + 1) : p.paper_id;
        if (papers.count(id) != 0) id += "#" + std::to_string(i + 1);
        ids.push_back(id);
        papers[id] = Paper{id, p.title, p.abstract, std::nullopt, {}, {}};
    }
    auto evidence = make_ranked_list(idea.id, Stage::raw_source, ids);
    std::vector<LabeledExample> train;
    for (const auto& ex : ctx.train_set) {
        if (ex.id != r.id) train.push_back(ex);
    }
    auto examples = select_examples(train, cfg.n_examples, cfg.example_seed);
    return judge(ctx.gateway, idea, evidence, papers, std::move(examples), cfg).verdict;
}

int cmd_eval(const Options& opt, const Settings& settings, std::ostream& out) {
    auto records = read_dataset(opt.dataset_path);
    for (const auto& r : records) {
        if (!r.label) throw InputError("dataset line " + std::to_string(r.line) + ": record has no label");
        if (opt.fixed_papers && r.top_papers.empty()) {
            throw InputError("dataset line " + std::to_string(r.line) + ": --fixed-papers needs 'top_papers'");
        }
    }
    auto rt = make_runtime(opt, settings);
    auto ctx = rt->context();
    const auto& cfg = rt->settings.pipeline;

    std::vector<Label> preds;
    std::vector<Label> gold;
    json per_idea = json::array();
    for (const auto& r : records) {
        Verdict v;
        try {
            if (opt.fixed_papers) {
                v = judge_fixed(ctx, r, cfg);
            } else {
                auto idea = validate_idea(r.idea_text, r.seed_paper_ids, {}, r.id);
                v = check_novelty(ctx, idea, cfg).verdict;
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "(line " + std::to_string(r.line) + ") " + e.what(), e.stage());
        }
        preds.push_back(v.decision);
        gold.push_back(*r.label);
        per_idea.push_back({{"idea_id", r.id},
                            {"line", r.line},
                            {"gold", std::string(to_string(*r.label))},
                            {"prediction", std::string(to_string(v.decision))}});
    }
    auto metrics = compute_metrics(confusion(preds, gold));
    json report{{"mode", opt.fixed_papers ? "fixed_papers" : "pipeline"},
                {"metrics", to_json(metrics)},
                {"per_idea", per_idea},
                {"config", to_json(cfg)}};
    write_output(opt.out_path.empty() ? "eval_report.json" : opt.out_path, report.dump(2) + "\n", out);
    out << render_table(metrics, opt.fixed_papers ? "judge (fixed papers)" : "pipeline");
    return kExitOk;
}

int cmd_ablate(const Options& opt, const Settings& settings, std::ostream& out) {
    auto records = read_dataset(opt.dataset_path);
    std::vector<AblationVariant> variants;
    if (opt.variants.empty()) {
        variants = all_variants();
    } else {
        std::istringstream in(opt.variants);
        std::string item;
        while (std::getline(in, item, ',')) {
            if (!trim(item).empty()) variants.push_back(parse_variant(trim(item)));
        }
    }
    auto rt = make_runtime(opt, settings);
    auto ctx = rt->context();
    auto report = run_ablation(ctx, records, variants, rt->settings.pipeline);
    write_output(opt.out_path.empty() ? "eval_report.json" : opt.out_path, to_json(report).dump(2) + "\n", out);
    out << render_table(report);
    return kExitOk;
}

int cmd_cache(const Options& opt, bool clear, std::ostream& out) {
    const fs::path root(opt.cache_dir);
    if (!fs::exists(root)) {
        out << "cache '" << opt.cache_dir << "' is empty\n";
        return kExitOk;
    }
    std::map<std::string, std::pair<std::size_t, std::uintmax_t>> by_namespace;
    for (const auto& ns : fs::directory_iterator(root)) {
        if (!ns.is_directory()) continue;
        auto& [entries, bytes] = by_namespace[ns.path().filename().string()];
        for (const auto& f : fs::recursive_directory_iterator(ns.path())) {
            if (f.is_regular_file() && f.path().extension() == ".json") {
                ++entries;
                bytes += f.file_size();
            }
        }
    }
    std::size_t total = 0;
    for (const auto& [name, stats] : by_namespace) {
        out << name << "\t" << stats.first << " entries\t" << stats.second << " bytes\n";
        total += stats.first;
    }
    if (clear) {
        for (const auto& ns : by_namespace) fs::remove_all(root / ns.first);
        out << "removed " << total << " entries\n";
    } else {
        out << "total\t" << total << " entries\n";
    }
    return kExitOk;
}

void install_logger(std::ostream& err, const std::string& level) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("novelty", sink);
    logger->set_pattern("[%l] %v");
    auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") {
        throw UsageError("unknown log level '" + level + "'");
    }
    logger->set_level(lvl);
    spdlog::set_default_logger(logger);
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
        const EnvLookup& env) {
    Options opt;
    CLI::App app{"Retrieval-augmented novelty assessment for research ideas"};
    app.name("novelty");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--config", opt.config_path, "key = value settings file");
    app.add_option("--cache-dir", opt.cache_dir, "response cache directory");
    app.add_flag("--no-cache", opt.no_cache, "keep responses in memory only");
    app.add_option("--mock", opt.mock_dir, "fixture directory for offline providers");
    app.add_flag("--live", opt.live, "use the real LLM, embedding and Semantic Scholar APIs");
    app.add_option("--out", opt.out_path, "output file");
    app.add_option("--format", opt.format, "report format")->check(CLI::IsMember({"json", "md"}));
    app.add_option("--log-level", opt.log_level, "trace|debug|info|warn|error|off");
    app.add_option("--s2-base-url", opt.s2_base_url, "Semantic Scholar API origin");
    app.add_option("--set", opt.sets, "override one setting, key=value");

    auto add_idea_options = [&](CLI::App* cmd) {
        cmd->add_option("--idea", opt.idea_path, "idea text file ('-' or omitted: stdin)");
        cmd->add_option("--id", opt.idea_id, "idea identifier");
        cmd->add_option("--seed", opt.seeds, "seed paper id (repeatable)");
        cmd->add_option("--exclude", opt.exclusions, "paper id to exclude (repeatable)");
        cmd->add_option("--sources", opt.sources, "comma list of keyword,snippet,recommendation");
    };

    auto* check = app.add_subcommand("check", "assess one idea end to end");
    add_idea_options(check);
    check->add_option("--ranked", opt.ranked_path, "judge a document written by 'rerank' instead of retrieving");

    auto* retrieve_cmd = app.add_subcommand("retrieve", "build and dump the candidate pool");
    add_idea_options(retrieve_cmd);

    auto* rerank_cmd = app.add_subcommand("rerank", "embedding filter + listwise rerank of a dumped pool");
    rerank_cmd->add_option("--pool", opt.pool_path, "document written by 'retrieve'")->required();
    rerank_cmd->add_option("--mode", opt.mode, "facet|relevance")->check(CLI::IsMember({"facet", "relevance"}));

    auto* eval_cmd = app.add_subcommand("eval", "metrics over a labeled JSONL dataset");
    eval_cmd->add_option("dataset", opt.dataset_path, "JSONL dataset")->required();
    eval_cmd->add_flag("--fixed-papers", opt.fixed_papers, "judge each record's stored top_papers");

    auto* ablate_cmd = app.add_subcommand("ablate", "compare pipeline variants");
    ablate_cmd->add_option("dataset", opt.dataset_path, "JSONL dataset")->required();
    ablate_cmd->add_option("--variants", opt.variants, "comma list (default: all five)");

    auto* cache_cmd = app.add_subcommand("cache", "inspect or clear the response cache");
    cache_cmd->require_subcommand(1);
    auto* cache_inspect = cache_cmd->add_subcommand("inspect", "count cached responses");
    auto* cache_clear = cache_cmd->add_subcommand("clear", "delete cached responses");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        install_logger(err, opt.log_level);
        if (*cache_cmd) return cmd_cache(opt, cache_clear->parsed() && !cache_inspect->parsed(), out);
        auto settings = resolve_settings(opt, env);
        if (*check) return cmd_check(opt, settings, in, out);
        if (*retrieve_cmd) return cmd_retrieve(opt, settings, in, out);
        if (*rerank_cmd) return cmd_rerank(opt, settings, out);
        if (*eval_cmd) return cmd_eval(opt, settings, out);
        if (*ablate_cmd) return cmd_ablate(opt, settings, out);
        return kExitConfig;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        err << "error: " << e.describe() << "\n";
        return e.kind() == ErrorKind::InvalidConfig ? kExitConfig : kExitPipeline;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
}

}  // namespace novelty::cli
