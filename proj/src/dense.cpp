#include "qarank/dense.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/parallel.hpp"

namespace qarank {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

struct RowScore {
    double score;
    std::size_t row;
};

// Descending score, ascending row.
std::vector<RowScore> top_k(std::vector<RowScore> scores, std::size_t k) {
    const auto take = std::min(k, scores.size());
    std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(take), scores.end(),
                      [](const RowScore& a, const RowScore& b) {
                          return a.score != b.score ? a.score > b.score : a.row < b.row;
                      });
    scores.resize(take);
    return scores;
}

std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t dim) {
    const auto bytes = io::read_file(path);
    if (dim == 0 || bytes.size() % (4 * dim) != 0) {
        throw ShapeMismatch(path.string() + ": " + std::to_string(bytes.size()) +
                            " bytes is not a whole number of rows of dim " + std::to_string(dim));
    }
    io::ByteReader in(bytes, path.string());
    std::vector<float> values(bytes.size() / 4);
    for (auto& v : values) {
        v = in.f32();
    }
    return values;
}

std::string f32_bytes(std::span<const float> values) {
    std::string out;
    out.reserve(values.size() * 4);
    for (float v : values) {
        io::put_f32(out, v);
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    // A trailing newline does not introduce an extra id.
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return lines;
}

std::string join_lines(std::span<const std::string> lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

json read_manifest(const std::filesystem::path& path, const char* expected_kind) {
    json manifest;
    try {
        manifest = json::parse(io::read_file(path));
        if (manifest.at("format").get<int>() != kFormatVersion) {
            throw MalformedFormat(path.string() + ": unsupported manifest format");
        }
        if (manifest.value("kind", std::string(expected_kind)) != expected_kind) {
            throw MalformedFormat(path.string() + ": expected kind \"" + expected_kind + "\"");
        }
    } catch (const json::exception& e) {
        throw MalformedFormat(path.string() + ": " + e.what());
    }
    return manifest;
}

void check_finite(std::span<const float> values, std::size_t dim) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw NonFiniteValue(i / dim);
        }
    }
}

class PassageLookup {
  public:
    explicit PassageLookup(const Corpus& corpus) : corpus_(corpus) {
        for (std::size_t i = 0; i < corpus.passages.size(); ++i) {
            by_id_.emplace(corpus.passages[i].passage_id, i);
        }
    }

    Context context(const ScoredId& hit) const {
        auto it = by_id_.find(hit.id);
        if (it == by_id_.end()) {
            throw InputError("retrieved id \"" + hit.id + "\" has no passage in the corpus");
        }
        const auto& p = corpus_.passages[it->second];
        return Context{p.passage_id, p.title, p.text, hit.score, false};
    }

  private:
    const Corpus& corpus_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

template <typename Search>
Dataset retrieve_with(const Corpus& corpus, const Dataset& dataset, std::size_t n_docs, std::size_t jobs,
                      const std::string& tag, Search&& search) {
    if (n_docs == 0) {
        throw ConfigError("n_docs must be at least 1");
    }
    const PassageLookup lookup(corpus);
    Dataset out = dataset;
    out.retriever_tag = tag;
    parallel_for(out.documents.size(), jobs, [&](std::size_t i) {
        auto& doc = out.documents[i];
        doc.contexts.clear();
        doc.reordered_contexts.reset();
        for (const auto& hit : search(i)) {
            doc.contexts.push_back(lookup.context(hit));
        }
    });
    return out;
}

}  // namespace

Dataset retrieve_dense_for_dataset(const EmbeddingStore& passages, const EmbeddingStore& queries, const Corpus& corpus,
                                   const Dataset& dataset, std::size_t n_docs, std::size_t jobs) {
    if (queries.dim() != passages.dim()) {
        throw DimMismatch(passages.dim(), queries.dim());
    }
    return retrieve_with(corpus, dataset, n_docs, jobs, passages.retriever_tag(), [&](std::size_t i) {
        const auto row = queries.find(std::to_string(i));
        if (row == queries.size()) {
            throw InputError("no query embedding for document " + std::to_string(i));
        }
        return passages.search(queries.row(row), n_docs);
    });
}

Dataset retrieve_maxsim_for_dataset(const MultiVectorStore& passages, const MultiVectorStore& queries,
                                    const Corpus& corpus, const Dataset& dataset, std::size_t n_docs,
                                    std::size_t jobs) {
    if (queries.size() > 0 && passages.size() > 0 && queries.dim() != passages.dim()) {
        throw DimMismatch(passages.dim(), queries.dim());
    }
    std::unordered_map<std::string, std::size_t> query_rows;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        query_rows.emplace(queries.docs()[i].id, i);
    }
    return retrieve_with(corpus, dataset, n_docs, jobs, passages.retriever_tag(), [&](std::size_t i) {
        auto it = query_rows.find(std::to_string(i));
        if (it == query_rows.end()) {
            throw InputError("no query token vectors for document " + std::to_string(i));
        }
        return passages.search(queries.docs()[it->second].vectors, n_docs);
    });
}

Metric parse_metric(const std::string& name) {
    if (name == "dot") {
        return Metric::dot;
    }
    if (name == "cosine") {
        return Metric::cosine;
    }
    throw ConfigError("unknown metric \"" + name + "\" (expected dot or cosine)");
}

std::string to_string(Metric metric) { return metric == Metric::dot ? "dot" : "cosine"; }

EmbeddingStore::EmbeddingStore(std::size_t dim, std::vector<float> vectors, std::vector<std::string> ids,
                               Metric metric, std::string retriever_tag)
    : dim_(dim), vectors_(std::move(vectors)), ids_(std::move(ids)), metric_(metric),
      retriever_tag_(std::move(retriever_tag)) {
    if (dim_ == 0) {
        throw ShapeMismatch("embedding dim must be at least 1");
    }
    if (vectors_.size() % dim_ != 0) {
        throw ShapeMismatch("vector data is not a whole number of rows of dim " + std::to_string(dim_));
    }
    const auto rows = vectors_.size() / dim_;
    if (rows != ids_.size()) {
        throw ShapeMismatch(std::to_string(rows) + " vectors but " + std::to_string(ids_.size()) + " ids");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) {
            throw MalformedFormat("duplicate embedding id \"" + id + "\"");
        }
    }
    check_finite(vectors_, dim_);
    norms_.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        norms_[r] = std::sqrt(dot(row(r), row(r)));
        if (metric_ == Metric::cosine && norms_[r] == 0.0) {
            throw ZeroVector();
        }
    }
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& vector_path, const std::filesystem::path& id_path,
                                    std::size_t dim, Metric metric, std::string retriever_tag) {
    auto vectors = read_f32_file(vector_path, dim);
    auto ids = read_lines(id_path);
    return EmbeddingStore(dim, std::move(vectors), std::move(ids), metric, std::move(retriever_tag));
}

EmbeddingStore EmbeddingStore::load_manifest(const std::filesystem::path& manifest_path) {
    const auto manifest = read_manifest(manifest_path, "dense");
    const auto base = manifest_path.parent_path();
    try {
        const auto dim = manifest.at("dim").get<std::size_t>();
        const auto metric = parse_metric(manifest.value("metric", std::string("dot")));
        auto store = load(base / manifest.value("vectors", std::string("vectors.f32")),
                          base / manifest.value("ids", std::string("ids.txt")), dim, metric,
                          manifest.value("retriever_tag", std::string("custom")));
        if (auto it = manifest.find("count"); it != manifest.end() && it->get<std::size_t>() != store.size()) {
            throw ShapeMismatch(manifest_path.string() + ": manifest count " + std::to_string(it->get<std::size_t>()) +
                                " but " + std::to_string(store.size()) + " rows on disk");
        }
        return store;
    } catch (const json::exception& e) {
        throw MalformedFormat(manifest_path.string() + ": " + e.what());
    }
}

void EmbeddingStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    io::write_file_atomic(dir / "vectors.f32", f32_bytes(vectors_));
    io::write_file_atomic(dir / "ids.txt", join_lines(ids_));
    json manifest{{"format", kFormatVersion},  {"kind", "dense"},           {"dim", dim_},
                  {"count", size()},           {"metric", to_string(metric_)}, {"retriever_tag", retriever_tag_},
                  {"vectors", "vectors.f32"}, {"ids", "ids.txt"}};
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::size_t EmbeddingStore::find(const std::string& id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    return static_cast<std::size_t>(it - ids_.begin());
}

std::vector<ScoredId> EmbeddingStore::search(std::span<const float> query, std::size_t k) const {
    if (query.size() != dim_) {
        throw DimMismatch(dim_, query.size());
    }
    for (float v : query) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue(0);
        }
    }
    double query_norm = 1.0;
    if (metric_ == Metric::cosine) {
        query_norm = std::sqrt(dot(query, query));
        if (query_norm == 0.0) {
            throw ZeroVector();
        }
    }
    std::vector<RowScore> scores(size());
    for (std::size_t r = 0; r < size(); ++r) {
        double s = dot(query, row(r));
        if (metric_ == Metric::cosine) {
            s /= query_norm * norms_[r];
        }
        scores[r] = {s, r};
    }
    std::vector<ScoredId> out;
    for (const auto& rs : top_k(std::move(scores), k)) {
        out.push_back({ids_[rs.row], rs.row, rs.score});
    }
    return out;
}

MultiVector::MultiVector(std::size_t dim, std::vector<float> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) {
        throw ShapeMismatch("multi-vector dim must be at least 1");
    }
    if (data_.empty()) {
        throw ShapeMismatch("multi-vector must have at least one token");
    }
    if (data_.size() % dim_ != 0) {
        throw ShapeMismatch("multi-vector data is not a whole number of tokens of dim " + std::to_string(dim_));
    }
    check_finite(data_, dim_);
}

MultiVector MultiVector::from_rows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) {
        throw ShapeMismatch("multi-vector must have at least one token");
    }
    const auto dim = rows.front().size();
    std::vector<float> data;
    data.reserve(rows.size() * dim);
    for (const auto& r : rows) {
        if (r.size() != dim) {
            throw DimMismatch(dim, r.size());
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return MultiVector(dim, std::move(data));
}

double maxsim_score(const MultiVector& query, const MultiVector& doc) {
    if (query.dim() != doc.dim()) {
        throw DimMismatch(query.dim(), doc.dim());
    }
    double total = 0.0;
    for (std::size_t i = 0; i < query.token_count(); ++i) {
        const auto q = query.token(i);
        double best = dot(q, doc.token(0));
        for (std::size_t j = 1; j < doc.token_count(); ++j) {
            best = std::max(best, dot(q, doc.token(j)));
        }
        total += best;
    }
    return total;
}

std::vector<ScoredId> search_maxsim(const MultiVector& query, std::span<const MultiVectorDoc> docs, std::size_t k) {
    std::vector<RowScore> scores(docs.size());
    for (std::size_t r = 0; r < docs.size(); ++r) {
        scores[r] = {maxsim_score(query, docs[r].vectors), r};
    }
    std::vector<ScoredId> out;
    for (const auto& rs : top_k(std::move(scores), k)) {
        out.push_back({docs[rs.row].id, rs.row, rs.score});
    }
    return out;
}

MultiVectorStore::MultiVectorStore(std::vector<MultiVectorDoc> docs, std::string retriever_tag)
    : docs_(std::move(docs)), retriever_tag_(std::move(retriever_tag)) {
    std::unordered_set<std::string> seen;
    for (const auto& d : docs_) {
        if (dim_ == 0) {
            dim_ = d.vectors.dim();
        } else if (d.vectors.dim() != dim_) {
            throw DimMismatch(dim_, d.vectors.dim());
        }
        if (!seen.insert(d.id).second) {
            throw MalformedFormat("duplicate multi-vector id \"" + d.id + "\"");
        }
    }
}

MultiVectorStore MultiVectorStore::load_manifest(const std::filesystem::path& manifest_path) {
    const auto manifest = read_manifest(manifest_path, "multivector");
    const auto base = manifest_path.parent_path();
    try {
        const auto dim = manifest.at("dim").get<std::size_t>();
        if (manifest.value("metric", std::string("dot")) != "dot") {
            throw ConfigError(manifest_path.string() + ": multi-vector stores only support the dot metric");
        }
        const auto values = read_f32_file(base / manifest.value("vectors", std::string("vectors.f32")), dim);
        const auto ids = read_lines(base / manifest.value("ids", std::string("ids.txt")));
        const auto counts_path = base / manifest.value("token_counts", std::string("token_counts.txt"));
        const auto count_lines = read_lines(counts_path);
        if (count_lines.size() != ids.size()) {
            throw ShapeMismatch(std::to_string(ids.size()) + " ids but " + std::to_string(count_lines.size()) +
                                " token counts");
        }
        std::vector<MultiVectorDoc> docs;
        docs.reserve(ids.size());
        std::size_t offset = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::size_t tokens = 0;
            try {
                tokens = std::stoul(count_lines[i]);
            } catch (const std::exception&) {
                throw MalformedFormat(counts_path.string() + " line", i + 1, "not a token count");
            }
            const auto begin = offset * dim;
            const auto end = (offset + tokens) * dim;
            if (end > values.size()) {
                throw ShapeMismatch(counts_path.string() + ": token counts exceed stored vectors");
            }
            try {
                docs.push_back({ids[i], MultiVector(dim, std::vector<float>(values.begin() + static_cast<std::ptrdiff_t>(begin),
                                                                             values.begin() + static_cast<std::ptrdiff_t>(end)))});
            } catch (const NonFiniteValue& e) {
                throw NonFiniteValue(offset + e.row());
            }
            offset += tokens;
        }
        if (offset * dim != values.size()) {
            throw ShapeMismatch(counts_path.string() + ": token counts do not cover all stored vectors");
        }
        if (auto it = manifest.find("count"); it != manifest.end() && it->get<std::size_t>() != docs.size()) {
            throw ShapeMismatch(manifest_path.string() + ": manifest count disagrees with ids");
        }
        return MultiVectorStore(std::move(docs), manifest.value("retriever_tag", std::string("colbert")));
    } catch (const json::exception& e) {
        throw MalformedFormat(manifest_path.string() + ": " + e.what());
    }
}

void MultiVectorStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::string vectors;
    std::string ids;
    std::string counts;
    std::size_t total = 0;
    for (const auto& d : docs_) {
        vectors += f32_bytes(d.vectors.data());
        ids += d.id + '\n';
        counts += std::to_string(d.vectors.token_count()) + '\n';
        total += d.vectors.token_count();
    }
    io::write_file_atomic(dir / "vectors.f32", vectors);
    io::write_file_atomic(dir / "ids.txt", ids);
    io::write_file_atomic(dir / "token_counts.txt", counts);
    json manifest{{"format", kFormatVersion},
                  {"kind", "multivector"},
                  {"dim", dim_},
                  {"count", size()},
                  {"tokens", total},
                  {"metric", "dot"},
                  {"retriever_tag", retriever_tag_},
                  {"vectors", "vectors.f32"},
                  {"ids", "ids.txt"},
                  {"token_counts", "token_counts.txt"}};
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace qarank
