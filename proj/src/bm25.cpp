#include "qarank/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/parallel.hpp"

namespace qarank {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr std::string_view kPostingsMagic = "QRKP";
constexpr std::string_view kDocLensMagic = "QRKL";

struct Candidate {
    std::uint32_t ordinal;
    double score;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.ordinal < b.ordinal;
}

}  // namespace

void validate(const Bm25Params& params) {
    if (!(params.k1 >= 0.0) || !std::isfinite(params.k1)) {
        throw ConfigError("bm25 k1 must be a finite value >= 0");
    }
    if (!(params.b >= 0.0 && params.b <= 1.0)) {
        throw ConfigError("bm25 b must be in [0, 1]");
    }
}

double bm25_idf(std::size_t num_docs, std::size_t doc_freq) {
    const auto n = static_cast<double>(num_docs);
    const auto df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term_score(double idf, double tf, double doc_length, double avg_doc_length, const Bm25Params& params) {
    const double norm = avg_doc_length > 0.0 ? doc_length / avg_doc_length : 0.0;
    return idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
}

Bm25Index Bm25Index::build(const Corpus& corpus, const Bm25Params& params, const TokenizerOptions& tokenizer) {
    validate(params);
    Bm25Index index;
    index.params_ = params;
    index.tokenizer_ = tokenizer;

    std::unordered_set<std::string> seen;
    std::map<std::string, std::vector<Posting>> postings;
    std::uint64_t total_length = 0;
    index.passages_.reserve(corpus.passages.size());
    index.doc_lengths_.reserve(corpus.passages.size());
    for (std::size_t ordinal = 0; ordinal < corpus.passages.size(); ++ordinal) {
        const auto& p = corpus.passages[ordinal];
        if (!seen.insert(p.passage_id).second) {
            throw InputError("duplicate passage id \"" + p.passage_id + "\"");
        }
        index.passages_.push_back({p.passage_id, p.title, p.text});

        auto tokens = tokenize(p.text, tokenizer);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) {
            ++tf[std::move(t)];
        }
        for (auto& [term, count] : tf) {
            postings[term].push_back({static_cast<std::uint32_t>(ordinal), count});
        }
    }
    index.avg_doc_length_ =
        corpus.passages.empty() ? 0.0 : static_cast<double>(total_length) / static_cast<double>(corpus.passages.size());

    index.terms_.reserve(postings.size());
    index.postings_.reserve(postings.size());
    for (auto& [term, list] : postings) {
        index.terms_.push_back(term);
        index.postings_.push_back(std::move(list));
    }
    index.rebuild_lookup();
    return index;
}

void Bm25Index::rebuild_lookup() {
    term_ids_.clear();
    term_ids_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        term_ids_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    }
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    if (it == term_ids_.end()) {
        return {};
    }
    return postings_[it->second];
}

std::vector<Context> Bm25Index::search(std::string_view query, std::size_t k) const {
    if (k == 0 || passages_.empty()) {
        return {};
    }
    // One pass per query token occurrence, in query order. Every passage
    // score is then the same left-to-right sum the formula describes, so
    // equal scores stay bitwise equal regardless of term repetition.
    std::vector<std::uint32_t> query_terms;
    for (const auto& token : tokenize(query, tokenizer_)) {
        if (auto it = term_ids_.find(token); it != term_ids_.end()) {
            query_terms.push_back(it->second);
        }
    }
    if (query_terms.empty()) {
        return {};
    }

    const auto n = passages_.size();
    std::vector<double> accumulator(n, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<char> is_touched(n, 0);
    for (const auto term_id : query_terms) {
        const auto& list = postings_[term_id];
        const double idf = bm25_idf(n, list.size());
        for (const auto& posting : list) {
            accumulator[posting.ordinal] +=
                bm25_term_score(idf, posting.tf, doc_lengths_[posting.ordinal], avg_doc_length_, params_);
            if (!is_touched[posting.ordinal]) {
                is_touched[posting.ordinal] = 1;
                touched.push_back(posting.ordinal);
            }
        }
    }

    std::vector<Candidate> candidates;
    candidates.reserve(touched.size());
    for (auto ordinal : touched) {
        candidates.push_back({ordinal, accumulator[ordinal]});
    }
    const auto take = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      ranks_before);

    std::vector<Context> results;
    results.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& rec = passages_[candidates[i].ordinal];
        results.push_back(Context{rec.id, rec.title, rec.text, candidates[i].score, false});
    }
    return results;
}

bool Bm25Index::operator==(const Bm25Index& other) const {
    return params_ == other.params_ && tokenizer_ == other.tokenizer_ && terms_ == other.terms_ &&
           postings_ == other.postings_ && doc_lengths_ == other.doc_lengths_ &&
           avg_doc_length_ == other.avg_doc_length_ && passages_ == other.passages_;
}

void Bm25Index::save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create index directory " + dir.string() + ": " + ec.message());
    }

    std::string postings_bin(kPostingsMagic);
    io::put_u32(postings_bin, kFormatVersion);
    io::put_u64(postings_bin, terms_.size());
    std::uint64_t total_postings = 0;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        io::put_u32(postings_bin, static_cast<std::uint32_t>(terms_[t].size()));
        postings_bin += terms_[t];
        io::put_u32(postings_bin, static_cast<std::uint32_t>(postings_[t].size()));
        for (const auto& p : postings_[t]) {
            io::put_u32(postings_bin, p.ordinal);
            io::put_u32(postings_bin, p.tf);
        }
        total_postings += postings_[t].size();
    }

    std::string doclens_bin(kDocLensMagic);
    io::put_u32(doclens_bin, kFormatVersion);
    io::put_u64(doclens_bin, doc_lengths_.size());
    for (auto len : doc_lengths_) {
        io::put_u32(doclens_bin, len);
    }

    std::string passages_jsonl;
    for (const auto& p : passages_) {
        passages_jsonl += json{{"id", p.id}, {"title", p.title}, {"text", p.text}}.dump();
        passages_jsonl += '\n';
    }

    json manifest{{"format", kFormatVersion},
                  {"kind", "bm25"},
                  {"params", {{"k1", params_.k1}, {"b", params_.b}}},
                  {"tokenizer", {{"stem", tokenizer_.stem}}},
                  {"count", passages_.size()},
                  {"vocabulary", terms_.size()},
                  {"postings", total_postings},
                  {"avg_doc_length", avg_doc_length_},
                  {"files",
                   {{"postings", "postings.bin"}, {"doc_lengths", "doclens.bin"}, {"passages", "passages.jsonl"}}}};

    io::write_file_atomic(dir / "postings.bin", postings_bin);
    io::write_file_atomic(dir / "doclens.bin", doclens_bin);
    io::write_file_atomic(dir / "passages.jsonl", passages_jsonl);
    // Manifest last: its presence marks a complete index.
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Bm25Index Bm25Index::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(io::read_file(manifest_path));
    } catch (const json::exception& e) {
        throw MalformedFormat(manifest_path.string() + ": " + e.what());
    }

    Bm25Index index;
    std::size_t count = 0;
    try {
        if (manifest.at("format").get<int>() != kFormatVersion || manifest.at("kind").get<std::string>() != "bm25") {
            throw MalformedFormat(manifest_path.string() + ": unsupported index format or kind");
        }
        index.params_.k1 = manifest.at("params").at("k1").get<double>();
        index.params_.b = manifest.at("params").at("b").get<double>();
        index.tokenizer_.stem = manifest.at("tokenizer").at("stem").get<bool>();
        count = manifest.at("count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw MalformedFormat(manifest_path.string() + ": " + e.what());
    }
    validate(index.params_);

    const auto doclens_path = dir / "doclens.bin";
    const auto doclens_bin = io::read_file(doclens_path);
    io::ByteReader lens(doclens_bin, doclens_path.string());
    if (lens.bytes(4) != kDocLensMagic || lens.u32() != kFormatVersion) {
        throw MalformedFormat(doclens_path.string() + ": bad header");
    }
    if (lens.u64() != count) {
        throw MalformedFormat(doclens_path.string() + ": passage count disagrees with manifest");
    }
    std::uint64_t total_length = 0;
    index.doc_lengths_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        index.doc_lengths_.push_back(lens.u32());
        total_length += index.doc_lengths_.back();
    }
    if (!lens.at_end()) {
        throw MalformedFormat(doclens_path.string() + ": trailing bytes");
    }
    index.avg_doc_length_ = count == 0 ? 0.0 : static_cast<double>(total_length) / static_cast<double>(count);

    const auto postings_path = dir / "postings.bin";
    const auto postings_bin = io::read_file(postings_path);
    io::ByteReader in(postings_bin, postings_path.string());
    if (in.bytes(4) != kPostingsMagic || in.u32() != kFormatVersion) {
        throw MalformedFormat(postings_path.string() + ": bad header");
    }
    const auto vocabulary = in.u64();
    for (std::uint64_t t = 0; t < vocabulary; ++t) {
        const auto len = in.u32();
        std::string term(in.bytes(len));
        if (!index.terms_.empty() && !(index.terms_.back() < term)) {
            throw MalformedFormat(postings_path.string() + ": vocabulary not sorted at term " + std::to_string(t));
        }
        const auto df = in.u32();
        std::vector<Posting> list;
        list.reserve(df);
        for (std::uint32_t i = 0; i < df; ++i) {
            Posting p{in.u32(), in.u32()};
            if (p.ordinal >= count || (!list.empty() && list.back().ordinal >= p.ordinal) || p.tf == 0) {
                throw MalformedFormat(postings_path.string() + ": invalid posting for term \"" + term + "\"");
            }
            list.push_back(p);
        }
        index.terms_.push_back(std::move(term));
        index.postings_.push_back(std::move(list));
    }
    if (!in.at_end()) {
        throw MalformedFormat(postings_path.string() + ": trailing bytes");
    }

    const auto passages_path = dir / "passages.jsonl";
    std::istringstream passages_in(io::read_file(passages_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(passages_in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            auto obj = json::parse(line);
            index.passages_.push_back(
                {obj.at("id").get<std::string>(), obj.at("title").get<std::string>(), obj.at("text").get<std::string>()});
        } catch (const json::exception& e) {
            throw MalformedFormat(passages_path.string() + " line", line_no, e.what());
        }
    }
    if (index.passages_.size() != count) {
        throw MalformedFormat(passages_path.string() + ": passage count disagrees with manifest");
    }
    index.rebuild_lookup();
    return index;
}

Dataset retrieve_for_dataset(const Bm25Index& index, const Dataset& dataset, std::size_t n_docs, std::size_t jobs) {
    if (n_docs == 0) {
        throw ConfigError("n_docs must be at least 1");
    }
    Dataset out = dataset;
    out.retriever_tag = "bm25";
    parallel_for(out.documents.size(), jobs, [&](std::size_t i) {
        auto& doc = out.documents[i];
        doc.contexts = index.search(doc.question.text, n_docs);
        doc.reordered_contexts.reset();
    });
    return out;
}

}  // namespace qarank
