#include "qarank/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qarank/dense.hpp"
#include "qarank/errors.hpp"
#include "qarank/io.hpp"

namespace qarank {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kConfigVersion = 1;

// Typed access to one JSON object of the config, rejecting unknown keys.
class Section {
  public:
    Section(const json& obj, std::string where, std::initializer_list<const char*> allowed) : obj_(obj), where_(std::move(where)) {
        if (!obj.is_object()) {
            throw ConfigError(where_ + " must be an object");
        }
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [key, value] : obj.items()) {
            if (!keys.count(key)) {
                throw ConfigError(where_ + ": unknown key \"" + key + "\"");
            }
        }
    }

    bool has(const char* key) const {
        auto it = obj_.find(key);
        return it != obj_.end() && !it->is_null();
    }

    const json& raw(const char* key) const { return obj_.at(key); }

    std::string str(const char* key, const std::string& fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = obj_.at(key);
        if (!v.is_string()) {
            throw ConfigError(path(key) + " must be a string");
        }
        return v.get<std::string>();
    }

    double number(const char* key, double fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = obj_.at(key);
        if (!v.is_number()) {
            throw ConfigError(path(key) + " must be a number");
        }
        return v.get<double>();
    }

    std::uint64_t count(const char* key, std::uint64_t fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = obj_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw ConfigError(path(key) + " must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool flag(const char* key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = obj_.at(key);
        if (!v.is_boolean()) {
            throw ConfigError(path(key) + " must be true or false");
        }
        return v.get<bool>();
    }

    fs::path file(const char* key, const fs::path& base) const {
        const auto value = str(key, "");
        if (value.empty()) {
            return {};
        }
        fs::path p(value);
        return p.is_absolute() ? p : base / p;
    }

    std::string path(const char* key) const { return where_ + "." + key; }

  private:
    const json& obj_;
    std::string where_;
};

void parse_bm25_fields(const Section& s, Bm25Params& params, TokenizerOptions& tokenizer) {
    params.k1 = s.number("k1", params.k1);
    params.b = s.number("b", params.b);
    tokenizer.stem = s.flag("stem", tokenizer.stem);
}

RetryPolicy parse_retry(const Section& s, RetryPolicy policy) {
    policy.timeout = std::chrono::milliseconds(s.count("timeout_ms", policy.timeout.count()));
    policy.max_attempts = static_cast<int>(s.count("max_attempts", policy.max_attempts));
    policy.backoff_base = std::chrono::milliseconds(s.count("backoff_ms", policy.backoff_base.count()));
    return policy;
}

RetrieverConfig parse_retriever(const json& obj, const fs::path& base) {
    const Section s(obj, "retriever", {"n_docs", "bm25", "dense", "maxsim"});
    RetrieverConfig cfg;
    cfg.n_docs = s.count("n_docs", cfg.n_docs);
    int methods = 0;
    for (const char* name : {"bm25", "dense", "maxsim"}) {
        methods += s.has(name) ? 1 : 0;
    }
    if (methods != 1) {
        throw ConfigError("retriever must configure exactly one of bm25, dense or maxsim (found " +
                          std::to_string(methods) + ")");
    }
    if (s.has("bm25")) {
        const Section b(s.raw("bm25"), "retriever.bm25", {"k1", "b", "stem", "index"});
        cfg.method = RetrieverMethod::bm25;
        parse_bm25_fields(b, cfg.bm25, cfg.tokenizer);
        cfg.index_dir = b.file("index", base);
    } else {
        const char* name = s.has("dense") ? "dense" : "maxsim";
        const Section d(s.raw(name), std::string("retriever.") + name, {"passages", "queries"});
        cfg.method = s.has("dense") ? RetrieverMethod::dense : RetrieverMethod::maxsim;
        cfg.passage_embeddings = d.file("passages", base);
        cfg.query_embeddings = d.file("queries", base);
    }
    return cfg;
}

RerankConfig parse_reranker(const json& obj) {
    const Section s(obj, "reranker", {"method", "scorer", "window", "stride", "passes", "bm25", "remote"});
    RerankConfig cfg;
    cfg.method = parse_rerank_method(s.str("method", to_string(cfg.method)));
    cfg.scorer = s.str("scorer", s.has("remote") ? "remote" : cfg.scorer);
    cfg.sliding.window = s.count("window", cfg.sliding.window);
    cfg.sliding.stride = s.count("stride", cfg.sliding.stride);
    cfg.sliding.passes = s.count("passes", cfg.sliding.passes);
    if (s.has("bm25")) {
        parse_bm25_fields(Section(s.raw("bm25"), "reranker.bm25", {"k1", "b", "stem"}), cfg.bm25, cfg.tokenizer);
    }
    if (s.has("remote")) {
        const Section r(s.raw("remote"), "reranker.remote",
                        {"endpoint", "timeout_ms", "max_attempts", "backoff_ms", "api_key_env"});
        cfg.remote.endpoint = r.str("endpoint", "");
        cfg.remote.retry = parse_retry(r, cfg.remote.retry);
        cfg.remote.api_key_env = r.str("api_key_env", cfg.remote.api_key_env);
    }
    return cfg;
}

GenerationStage parse_generator(const json& obj) {
    const Section s(obj, "generator",
                    {"endpoint", "model", "max_tokens", "temperature", "timeout_ms", "max_attempts", "backoff_ms",
                     "concurrency", "api_key_env", "k", "order", "template", "context_template", "char_budget"});
    GenerationStage stage;
    auto& g = stage.generator;
    g.endpoint = s.str("endpoint", "");
    g.model = s.str("model", g.model);
    g.max_tokens = static_cast<int>(s.count("max_tokens", static_cast<std::uint64_t>(g.max_tokens)));
    g.temperature = s.number("temperature", g.temperature);
    g.retry = parse_retry(s, g.retry);
    g.concurrency = s.count("concurrency", g.concurrency);
    g.api_key_env = s.str("api_key_env", g.api_key_env);
    auto& p = stage.prompt;
    p.k = s.count("k", p.k);
    p.order = parse_context_order(s.str("order", to_string(p.order)));
    p.prompt = s.str("template", p.prompt);
    p.context_block = s.str("context_template", p.context_block);
    if (obj.contains("char_budget") && obj.at("char_budget").is_null()) {
        p.char_budget.reset();
    } else {
        p.char_budget = s.count("char_budget", *p.char_budget);
    }
    return stage;
}

EvalConfig parse_eval(const json& obj) {
    const Section s(obj, "eval", {"ks", "use_reordered"});
    EvalConfig cfg;
    if (s.has("ks")) {
        const auto& ks = s.raw("ks");
        if (!ks.is_array() || ks.empty()) {
            throw ConfigError("eval.ks must be a non-empty array of positive integers");
        }
        cfg.ks.clear();
        for (const auto& k : ks) {
            if (!k.is_number_integer() || k.get<std::int64_t>() < 1) {
                throw ConfigError("eval.ks must be a non-empty array of positive integers");
            }
            cfg.ks.push_back(k.get<std::size_t>());
        }
    }
    if (s.has("use_reordered")) {
        cfg.use_reordered = s.flag("use_reordered", false);
    }
    return cfg;
}

bool dir_has_entries(const fs::path& dir) {
    std::error_code ec;
    return fs::is_directory(dir, ec) && !fs::is_empty(dir, ec);
}

Corpus load_source(const CorpusSource& source) {
    auto corpus = load_corpus(source.path, source.format, source.words_per_passage);
    corpus.source_tag = source.path.stem().string();
    return corpus;
}

}  // namespace

std::string to_string(RetrieverMethod method) {
    switch (method) {
        case RetrieverMethod::bm25:
            return "bm25";
        case RetrieverMethod::dense:
            return "dense";
        case RetrieverMethod::maxsim:
            return "maxsim";
    }
    return "bm25";
}

CorpusFormat corpus_format_for(const fs::path& path) {
    return path.extension() == ".jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
}

PipelineConfig parse_pipeline_config(const json& root, const fs::path& base_dir) {
    const Section s(root, "config",
                    {"config_version", "corpus", "dataset", "retriever", "reranker", "generator", "eval", "output_dir",
                     "jobs", "seed"});
    PipelineConfig cfg;
    cfg.config_version = static_cast<int>(s.count("config_version", 0));
    if (cfg.config_version != kConfigVersion) {
        throw ConfigError("config_version must be " + std::to_string(kConfigVersion));
    }
    if (s.has("corpus")) {
        const Section c(s.raw("corpus"), "corpus", {"path", "format", "words_per_passage"});
        CorpusSource source;
        source.path = c.file("path", base_dir);
        if (source.path.empty()) {
            throw ConfigError("corpus.path is required");
        }
        source.format = c.has("format") ? parse_corpus_format(c.str("format", "")) : corpus_format_for(source.path);
        source.words_per_passage = c.count("words_per_passage", source.words_per_passage);
        cfg.corpus = source;
    }
    if (s.has("dataset")) {
        const auto& d = s.raw("dataset");
        if (d.is_string()) {
            cfg.dataset = s.file("dataset", base_dir);
        } else {
            const Section ds(d, "dataset", {"path"});
            cfg.dataset = ds.file("path", base_dir);
        }
    }
    if (s.has("retriever")) {
        cfg.retriever = parse_retriever(s.raw("retriever"), base_dir);
    }
    if (s.has("reranker")) {
        cfg.reranker = parse_reranker(s.raw("reranker"));
    }
    if (s.has("generator")) {
        cfg.generator = parse_generator(s.raw("generator"));
    }
    if (s.has("eval")) {
        cfg.eval = parse_eval(s.raw("eval"));
    }
    if (s.has("output_dir")) {
        cfg.output_dir = s.file("output_dir", base_dir);
    } else {
        cfg.output_dir = base_dir / "out";
    }
    cfg.jobs = s.count("jobs", cfg.jobs);
    cfg.seed = s.count("seed", cfg.seed);
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    json root;
    try {
        root = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) {
        base = ".";
    }
    return parse_pipeline_config(root, base);
}

void validate(const PipelineConfig& cfg) {
    if (!cfg.dataset) {
        throw ConfigError("pipeline needs a dataset");
    }
    if (cfg.jobs < 1) {
        throw ConfigError("jobs must be at least 1");
    }
    if (cfg.retriever) {
        const auto& r = *cfg.retriever;
        if (r.n_docs < 1) {
            throw ConfigError("retriever.n_docs must be at least 1");
        }
        if (r.method == RetrieverMethod::bm25) {
            validate(r.bm25);
            if (r.index_dir.empty() && !cfg.corpus) {
                throw ConfigError("bm25 retrieval needs a corpus or a prebuilt index");
            }
        } else {
            if (!cfg.corpus) {
                throw ConfigError(to_string(r.method) + " retrieval needs a corpus for passage text");
            }
            if (r.passage_embeddings.empty() || r.query_embeddings.empty()) {
                throw ConfigError(to_string(r.method) + " retrieval needs passages and queries manifests");
            }
        }
    }
    if (cfg.reranker) {
        validate(*cfg.reranker);
    }
    if (cfg.generator) {
        validate(cfg.generator->generator);
        validate(cfg.generator->prompt);
    }
    if (cfg.eval.use_reordered.value_or(false) && !cfg.reranker && cfg.retriever) {
        throw ConfigError("eval.use_reordered needs a reranker stage or a pre-reordered dataset");
    }
    if (cfg.eval.ks.empty()) {
        throw ConfigError("eval.ks must not be empty");
    }
}

void apply_seed(PipelineConfig& cfg) {
    if (cfg.reranker) {
        cfg.reranker->remote.retry.seed = cfg.seed;
    }
    if (cfg.generator) {
        cfg.generator->generator.retry.seed = cfg.seed;
    }
}

void check_writable_output(const fs::path& path, bool force) {
    std::error_code ec;
    if (!force && fs::exists(path, ec)) {
        throw OutputExists(path.string());
    }
    const auto parent = path.parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent, ec);
        if (ec) {
            throw IoError("cannot create " + parent.string() + ": " + ec.message());
        }
    }
}

IndexSummary build_index_stage(const CorpusSource& source, const Bm25Params& params, const TokenizerOptions& tokenizer,
                               const fs::path& out_dir, bool force) {
    if (!force && dir_has_entries(out_dir)) {
        throw OutputExists(out_dir.string());
    }
    const auto corpus = load_source(source);
    const auto index = Bm25Index::build(corpus, params, tokenizer);
    index.save(out_dir);
    return {index.size(), index.vocabulary_size()};
}

Dataset retrieve_stage(const RetrieverConfig& cfg, const Dataset& dataset, const std::optional<CorpusSource>& corpus,
                       std::size_t jobs) {
    Dataset out;
    switch (cfg.method) {
        case RetrieverMethod::bm25: {
            Bm25Index index;
            if (!cfg.index_dir.empty()) {
                index = Bm25Index::load(cfg.index_dir);
            } else if (corpus) {
                index = Bm25Index::build(load_source(*corpus), cfg.bm25, cfg.tokenizer);
            } else {
                throw ConfigError("bm25 retrieval needs an index directory or a corpus");
            }
            out = retrieve_for_dataset(index, dataset, cfg.n_docs, jobs);
            break;
        }
        case RetrieverMethod::dense: {
            if (!corpus) {
                throw ConfigError("dense retrieval needs a corpus for passage text");
            }
            const auto passages = EmbeddingStore::load_manifest(cfg.passage_embeddings);
            const auto queries = EmbeddingStore::load_manifest(cfg.query_embeddings);
            out = retrieve_dense_for_dataset(passages, queries, load_source(*corpus), dataset, cfg.n_docs, jobs);
            break;
        }
        case RetrieverMethod::maxsim: {
            if (!corpus) {
                throw ConfigError("maxsim retrieval needs a corpus for passage text");
            }
            const auto passages = MultiVectorStore::load_manifest(cfg.passage_embeddings);
            const auto queries = MultiVectorStore::load_manifest(cfg.query_embeddings);
            out = retrieve_maxsim_for_dataset(passages, queries, load_source(*corpus), dataset, cfg.n_docs, jobs);
            break;
        }
    }
    annotate_has_answer(out);
    return out;
}

GenerationResult generate_stage(const GenerationStage& cfg, const Dataset& dataset, bool fail_soft) {
    auto batch = generate_answers(cfg.generator, dataset.documents, cfg.prompt, fail_soft);
    GenerationResult result;
    result.predictions.reserve(batch.answers.size());
    for (const auto& raw : batch.answers) {
        result.predictions.push_back(extract_answer(raw));
    }
    result.failures = std::move(batch.failures);
    return result;
}

void save_predictions(const Dataset& dataset, const std::vector<std::string>& predictions, const fs::path& path) {
    if (predictions.size() != dataset.documents.size()) {
        throw LengthMismatch("predictions and documents differ in length");
    }
    std::string out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out += json{{"question", dataset.documents[i].question.text}, {"prediction", predictions[i]}}.dump();
        out += '\n';
    }
    io::write_file_atomic(path, out);
}

std::vector<std::string> load_predictions(const fs::path& path) {
    std::istringstream in(io::read_file(path));
    std::vector<std::string> predictions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            predictions.push_back(json::parse(line).at("prediction").get<std::string>());
        } catch (const json::exception& e) {
            throw MalformedFormat(path.string() + " line", line_no, e.what());
        }
    }
    return predictions;
}

nlohmann::ordered_json evaluate_stage(const Dataset& dataset, const EvalConfig& cfg,
                                      const std::optional<std::vector<std::string>>& predictions) {
    const bool any_reordered = std::any_of(dataset.documents.begin(), dataset.documents.end(),
                                           [](const Document& d) { return d.reordered_contexts.has_value(); });
    const bool use_reordered = cfg.use_reordered.value_or(any_reordered);
    if (use_reordered && !any_reordered) {
        throw ConfigError("use_reordered requested but no document has re-ordered contexts");
    }
    nlohmann::ordered_json report;
    report["retrieval"] = to_json(top_k_accuracy(dataset, cfg.ks, false));
    if (use_reordered) {
        report["retrieval_reordered"] = to_json(top_k_accuracy(dataset, cfg.ks, true));
    }
    if (predictions) {
        report["generation"] = to_json(evaluate_generation(dataset, *predictions));
    }
    return report;
}

PipelineResult run_pipeline(const PipelineConfig& input, bool force) {
    auto cfg = input;
    apply_seed(cfg);
    validate(cfg);

    const auto& out = cfg.output_dir;
    const auto report_path = out / "report.json";
    if (!force) {
        for (const char* name : {"report.json", "retrieved.json", "reranked.json", "predictions.jsonl", "index"}) {
            std::error_code ec;
            if (fs::exists(out / name, ec)) {
                throw OutputExists((out / name).string());
            }
        }
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create " + out.string() + ": " + ec.message());
    }

    PipelineResult result;
    auto& report = result.report;
    report["config_version"] = cfg.config_version;

    Dataset dataset = load_any_dataset(*cfg.dataset);
    report["dataset"] = {{"documents", dataset.documents.size()}};

    if (cfg.retriever) {
        auto retriever = *cfg.retriever;
        if (retriever.method == RetrieverMethod::bm25 && retriever.index_dir.empty()) {
            const auto summary = build_index_stage(*cfg.corpus, retriever.bm25, retriever.tokenizer, out / "index", true);
            report["index"] = {{"passages", summary.passages}, {"vocabulary", summary.vocabulary}};
            retriever.index_dir = out / "index";
        }
        dataset = retrieve_stage(retriever, dataset, cfg.corpus, cfg.jobs);
        save_dataset(dataset, out / "retrieved.json");
        report["retrieval"] = {{"method", to_string(retriever.method)}, {"n_docs", retriever.n_docs}};
    }

    if (cfg.reranker) {
        auto batch = rerank_dataset(*cfg.reranker, dataset, cfg.jobs);
        dataset = std::move(batch.dataset);
        save_dataset(dataset, out / "reranked.json");
        report["rerank"] = {{"method", to_string(cfg.reranker->method)},
                            {"scorer", cfg.reranker->scorer},
                            {"documents", dataset.documents.size()},
                            {"failures", batch.failures.size()}};
        result.failures += batch.failures.size();
    }

    std::optional<std::vector<std::string>> predictions;
    if (cfg.generator) {
        auto gen = generate_stage(*cfg.generator, dataset);
        save_predictions(dataset, gen.predictions, out / "predictions.jsonl");
        report["generation"] = {{"documents", gen.predictions.size()}, {"failures", gen.failures.size()}};
        result.failures += gen.failures.size();
        predictions = std::move(gen.predictions);
    }

    auto eval = cfg.eval;
    if (!eval.use_reordered) {
        eval.use_reordered = cfg.reranker.has_value() ||
                             std::any_of(dataset.documents.begin(), dataset.documents.end(),
                                         [](const Document& d) { return d.reordered_contexts.has_value(); });
    }
    report["eval"] = evaluate_stage(dataset, eval, predictions);
    io::write_file_atomic(report_path, report.dump(2) + "\n");
    return result;
}

}  // namespace qarank
