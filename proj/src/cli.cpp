#include "qarank/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>

#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/pipeline.hpp"

namespace qarank {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd.add_option("--out", flags.out, "Output path");
    cmd.add_option("--jobs", flags.jobs, "Documents processed in parallel")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", flags.seed, "Seed for retry jitter");
    cmd.add_flag("--force", flags.force, "Overwrite existing outputs");
}

struct Bm25Flags {
    std::optional<double> k1;
    std::optional<double> b;
    bool stem = false;
};

void add_bm25(CLI::App& cmd, Bm25Flags& flags) {
    cmd.add_option("--k1", flags.k1, "BM25 k1");
    cmd.add_option("--b", flags.b, "BM25 b");
    cmd.add_flag("--stem", flags.stem, "Porter-stem tokens");
}

void apply(const Bm25Flags& flags, Bm25Params& params, TokenizerOptions& tokenizer) {
    if (flags.k1) params.k1 = *flags.k1;
    if (flags.b) params.b = *flags.b;
    if (flags.stem) tokenizer.stem = true;
}

struct RetryFlags {
    std::optional<std::size_t> timeout_ms;
    std::optional<int> max_attempts;
    std::optional<std::size_t> backoff_ms;
};

void add_retry(CLI::App& cmd, RetryFlags& flags) {
    cmd.add_option("--timeout-ms", flags.timeout_ms, "Per-request timeout");
    cmd.add_option("--max-attempts", flags.max_attempts, "Attempts per request including the first")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--backoff-ms", flags.backoff_ms, "Base retry backoff");
}

void apply(const RetryFlags& flags, RetryPolicy& policy) {
    if (flags.timeout_ms) policy.timeout = std::chrono::milliseconds(*flags.timeout_ms);
    if (flags.max_attempts) policy.max_attempts = *flags.max_attempts;
    if (flags.backoff_ms) policy.backoff_base = std::chrono::milliseconds(*flags.backoff_ms);
}

PipelineConfig base_config(const CommonFlags& flags) {
    PipelineConfig cfg;
    if (!flags.config.empty()) {
        cfg = load_pipeline_config(flags.config);
    }
    if (flags.jobs) cfg.jobs = *flags.jobs;
    if (flags.seed) cfg.seed = *flags.seed;
    return cfg;
}

// --out wins; otherwise the config's output directory plus `name`.
fs::path output_path(const CommonFlags& flags, const PipelineConfig& cfg, const char* name) {
    if (!flags.out.empty()) {
        return flags.out;
    }
    if (!flags.config.empty()) {
        return cfg.output_dir / name;
    }
    throw ConfigError("no output path: pass --out or --config");
}

fs::path dataset_path(const std::string& flag, const PipelineConfig& cfg) {
    if (!flag.empty()) {
        return flag;
    }
    if (cfg.dataset) {
        return *cfg.dataset;
    }
    throw ConfigError("no dataset: pass --dataset or set it in the config");
}

void report_failures(const std::vector<DocumentFailure>& failures, std::ostream& err) {
    for (const auto& f : failures) {
        err << "document " << f.index << ": " << f.message << '\n';
    }
}

int partial_or_ok(std::size_t failures, std::size_t total, std::ostream& err) {
    if (failures == 0) {
        return kExitOk;
    }
    err << failures << " of " << total << " documents failed\n";
    return kExitPartial;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval, re-ranking and answer generation for open-domain QA", "qarank"};
    app.require_subcommand(1);

    // index
    CommonFlags index_common;
    Bm25Flags index_bm25;
    std::string index_corpus;
    std::optional<std::string> index_format;
    std::optional<std::size_t> index_words;
    auto* index_cmd = app.add_subcommand("index", "Chunk a corpus and build a BM25 index");
    add_common(*index_cmd, index_common);
    add_bm25(*index_cmd, index_bm25);
    index_cmd->add_option("--corpus", index_corpus, "Corpus file (TSV id/text/title or JSONL)");
    index_cmd->add_option("--format", index_format, "tsv or jsonl (default: from the extension)");
    index_cmd->add_option("--words-per-passage", index_words, "Passage length in words")->check(CLI::PositiveNumber);

    // retrieve
    CommonFlags retrieve_common;
    Bm25Flags retrieve_bm25;
    std::string retrieve_dataset, retrieve_index, retrieve_corpus, retrieve_passages, retrieve_queries;
    std::optional<std::string> retrieve_method;
    std::optional<std::size_t> retrieve_n_docs;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Attach top-ranked passages to every question");
    add_common(*retrieve_cmd, retrieve_common);
    add_bm25(*retrieve_cmd, retrieve_bm25);
    retrieve_cmd->add_option("--dataset", retrieve_dataset, "QA JSONL or pre-retrieved JSON");
    retrieve_cmd->add_option("--method", retrieve_method, "bm25, dense or maxsim");
    retrieve_cmd->add_option("--index", retrieve_index, "Prebuilt BM25 index directory");
    retrieve_cmd->add_option("--corpus", retrieve_corpus, "Corpus file (passage text)");
    retrieve_cmd->add_option("--passages", retrieve_passages, "Passage embedding manifest");
    retrieve_cmd->add_option("--queries", retrieve_queries, "Query embedding manifest");
    retrieve_cmd->add_option("--n-docs", retrieve_n_docs, "Passages per question")->check(CLI::PositiveNumber);

    // rerank
    CommonFlags rerank_common;
    Bm25Flags rerank_bm25;
    RetryFlags rerank_retry;
    std::string rerank_dataset;
    std::optional<std::string> rerank_method, rerank_scorer, rerank_endpoint;
    std::optional<std::size_t> rerank_window, rerank_stride, rerank_passes;
    auto* rerank_cmd = app.add_subcommand("rerank", "Re-order each question's retrieved passages");
    add_common(*rerank_cmd, rerank_common);
    add_bm25(*rerank_cmd, rerank_bm25);
    add_retry(*rerank_cmd, rerank_retry);
    rerank_cmd->add_option("--dataset", rerank_dataset, "Pre-retrieved JSON");
    rerank_cmd->add_option("--method", rerank_method, "pointwise, pairwise or listwise");
    rerank_cmd->add_option("--scorer", rerank_scorer, "bm25, has_answer, identity or remote");
    rerank_cmd->add_option("--endpoint", rerank_endpoint, "Remote re-ranker URL (implies --scorer remote)");
    rerank_cmd->add_option("--window", rerank_window, "Sliding window size");
    rerank_cmd->add_option("--stride", rerank_stride, "Sliding window stride");
    rerank_cmd->add_option("--passes", rerank_passes, "Sliding window passes");

    // generate
    CommonFlags generate_common;
    RetryFlags generate_retry;
    std::string generate_dataset;
    std::optional<std::string> generate_endpoint, generate_model, generate_order;
    std::optional<std::size_t> generate_k, generate_concurrency, generate_budget;
    std::optional<int> generate_max_tokens;
    std::optional<double> generate_temperature;
    bool generate_no_budget = false;
    auto* generate_cmd = app.add_subcommand("generate", "Answer each question with a completion endpoint");
    add_common(*generate_cmd, generate_common);
    add_retry(*generate_cmd, generate_retry);
    generate_cmd->add_option("--dataset", generate_dataset, "Pre-retrieved JSON or QA JSONL");
    generate_cmd->add_option("--endpoint", generate_endpoint, "Chat-completions URL");
    generate_cmd->add_option("--model", generate_model, "Model name sent with each request");
    generate_cmd->add_option("--k", generate_k, "Contexts per prompt (0 for closed-book)");
    generate_cmd->add_option("--order", generate_order, "best_last or best_first");
    generate_cmd->add_option("--max-tokens", generate_max_tokens, "Completion length limit");
    generate_cmd->add_option("--temperature", generate_temperature, "Sampling temperature");
    generate_cmd->add_option("--concurrency", generate_concurrency, "Requests in flight")->check(CLI::PositiveNumber);
    generate_cmd->add_option("--char-budget", generate_budget, "Context bytes per prompt");
    generate_cmd->add_flag("--no-char-budget", generate_no_budget, "Do not limit context bytes");

    // eval
    CommonFlags eval_common;
    std::string eval_dataset, eval_predictions;
    std::optional<std::vector<std::size_t>> eval_ks;
    std::optional<bool> eval_reordered;
    auto* eval_cmd = app.add_subcommand("eval", "Top-k retrieval accuracy and answer metrics");
    add_common(*eval_cmd, eval_common);
    eval_cmd->add_option("--dataset", eval_dataset, "Pre-retrieved JSON");
    eval_cmd->add_option("--predictions", eval_predictions, "Predictions JSONL")->check(CLI::ExistingFile);
    eval_cmd->add_option("--ks", eval_ks, "Cutoffs, e.g. --ks 1 5 20")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--use-reordered", eval_reordered, "true or false (default: when present)");

    // pipeline
    CommonFlags pipeline_common;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every configured stage and write report.json");
    add_common(*pipeline_cmd, pipeline_common);
    pipeline_cmd->get_option("--config")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*index_cmd) {
            auto cfg = base_config(index_common);
            CorpusSource source = cfg.corpus.value_or(CorpusSource{});
            if (!index_corpus.empty()) {
                source.path = index_corpus;
                source.format = corpus_format_for(source.path);
            }
            if (source.path.empty()) {
                throw ConfigError("no corpus: pass --corpus or set it in the config");
            }
            if (index_format) source.format = parse_corpus_format(*index_format);
            if (index_words) source.words_per_passage = *index_words;
            RetrieverConfig retriever = cfg.retriever.value_or(RetrieverConfig{});
            apply(index_bm25, retriever.bm25, retriever.tokenizer);
            validate(retriever.bm25);
            const auto dir = output_path(index_common, cfg, "index");
            const auto summary = build_index_stage(source, retriever.bm25, retriever.tokenizer, dir, index_common.force);
            out << "passages: " << summary.passages << '\n' << "vocabulary: " << summary.vocabulary << '\n';
            return kExitOk;
        }

        if (*retrieve_cmd) {
            auto cfg = base_config(retrieve_common);
            RetrieverConfig retriever = cfg.retriever.value_or(RetrieverConfig{});
            if (retrieve_method) {
                if (*retrieve_method == "bm25") retriever.method = RetrieverMethod::bm25;
                else if (*retrieve_method == "dense") retriever.method = RetrieverMethod::dense;
                else if (*retrieve_method == "maxsim") retriever.method = RetrieverMethod::maxsim;
                else throw ConfigError("unknown retriever \"" + *retrieve_method + "\" (expected bm25, dense or maxsim)");
            }
            apply(retrieve_bm25, retriever.bm25, retriever.tokenizer);
            if (!retrieve_index.empty()) retriever.index_dir = retrieve_index;
            if (!retrieve_passages.empty()) retriever.passage_embeddings = retrieve_passages;
            if (!retrieve_queries.empty()) retriever.query_embeddings = retrieve_queries;
            if (retrieve_n_docs) retriever.n_docs = *retrieve_n_docs;
            auto corpus = cfg.corpus;
            if (!retrieve_corpus.empty()) {
                corpus = CorpusSource{retrieve_corpus, corpus_format_for(retrieve_corpus)};
            }
            validate(retriever.bm25);
            const auto dest = output_path(retrieve_common, cfg, "retrieved.json");
            check_writable_output(dest, retrieve_common.force);
            const auto dataset = load_any_dataset(dataset_path(retrieve_dataset, cfg));
            const auto retrieved = retrieve_stage(retriever, dataset, corpus, cfg.jobs);
            save_dataset(retrieved, dest);
            out << "documents: " << retrieved.documents.size() << '\n';
            return kExitOk;
        }

        if (*rerank_cmd) {
            auto cfg = base_config(rerank_common);
            RerankConfig rc = cfg.reranker.value_or(RerankConfig{});
            if (rerank_method) rc.method = parse_rerank_method(*rerank_method);
            if (rerank_endpoint) {
                rc.remote.endpoint = *rerank_endpoint;
                rc.scorer = "remote";
            }
            if (rerank_scorer) rc.scorer = *rerank_scorer;
            if (rerank_window) rc.sliding.window = *rerank_window;
            if (rerank_stride) rc.sliding.stride = *rerank_stride;
            if (rerank_passes) rc.sliding.passes = *rerank_passes;
            apply(rerank_bm25, rc.bm25, rc.tokenizer);
            apply(rerank_retry, rc.remote.retry);
            rc.remote.retry.seed = cfg.seed;
            validate(rc);
            const auto dest = output_path(rerank_common, cfg, "reranked.json");
            check_writable_output(dest, rerank_common.force);
            const auto dataset = load_any_dataset(dataset_path(rerank_dataset, cfg));
            const auto batch = qarank::rerank_dataset(rc, dataset, cfg.jobs);
            save_dataset(batch.dataset, dest);
            report_failures(batch.failures, err);
            out << "documents: " << batch.dataset.documents.size() << '\n';
            return partial_or_ok(batch.failures.size(), batch.dataset.documents.size(), err);
        }

        if (*generate_cmd) {
            auto cfg = base_config(generate_common);
            GenerationStage stage = cfg.generator.value_or(GenerationStage{});
            auto& g = stage.generator;
            auto& p = stage.prompt;
            if (generate_endpoint) g.endpoint = *generate_endpoint;
            if (generate_model) g.model = *generate_model;
            if (generate_max_tokens) g.max_tokens = *generate_max_tokens;
            if (generate_temperature) g.temperature = *generate_temperature;
            if (generate_concurrency) g.concurrency = *generate_concurrency;
            apply(generate_retry, g.retry);
            g.retry.seed = cfg.seed;
            if (generate_k) p.k = *generate_k;
            if (generate_order) p.order = parse_context_order(*generate_order);
            if (generate_budget) p.char_budget = *generate_budget;
            if (generate_no_budget) p.char_budget.reset();
            validate(g);
            validate(p);
            const auto dest = output_path(generate_common, cfg, "predictions.jsonl");
            check_writable_output(dest, generate_common.force);
            const auto dataset = load_any_dataset(dataset_path(generate_dataset, cfg));
            const auto result = generate_stage(stage, dataset);
            save_predictions(dataset, result.predictions, dest);
            report_failures(result.failures, err);
            out << "documents: " << result.predictions.size() << '\n';
            return partial_or_ok(result.failures.size(), result.predictions.size(), err);
        }

        if (*eval_cmd) {
            auto cfg = base_config(eval_common);
            EvalConfig eval = cfg.eval;
            if (eval_ks) eval.ks = *eval_ks;
            if (eval_reordered) eval.use_reordered = *eval_reordered;
            std::optional<fs::path> dest;
            if (!eval_common.out.empty()) {
                dest = eval_common.out;
                check_writable_output(*dest, eval_common.force);
            }
            const auto dataset = load_any_dataset(dataset_path(eval_dataset, cfg));
            std::optional<std::vector<std::string>> predictions;
            if (!eval_predictions.empty()) {
                predictions = load_predictions(eval_predictions);
            }
            const auto report = evaluate_stage(dataset, eval, predictions);
            const auto text = report.dump(2) + "\n";
            out << text;
            if (dest) {
                io::write_file_atomic(*dest, text);
            }
            return kExitOk;
        }

        if (*pipeline_cmd) {
            auto cfg = base_config(pipeline_common);
            if (!pipeline_common.out.empty()) {
                cfg.output_dir = pipeline_common.out;
            }
            const auto result = run_pipeline(cfg, pipeline_common.force);
            out << result.report.dump(2) << '\n';
            if (result.failures > 0) {
                err << result.failures << " document failures; see the stage counts in report.json\n";
                return kExitPartial;
            }
            return kExitOk;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace qarank
