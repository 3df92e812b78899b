#include "qarank/metrics.hpp"

#include <algorithm>
#include <map>

#include "qarank/errors.hpp"
#include "qarank/unicode.hpp"

namespace qarank {
namespace {

bool is_article(std::string_view word) { return word == "a" || word == "an" || word == "the"; }

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) {
        return false;
    }
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool any_answer_in(const std::vector<std::string>& tokens, const AnswerSet& answers) {
    for (const auto& answer : answers.answers) {
        if (contains_sequence(tokens, normalized_tokens(answer))) {
            return true;
        }
    }
    return false;
}

TokenF1 overlap_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) {
        return {1.0, 1.0, 1.0};
    }
    if (pred.empty() || gold.empty()) {
        return {};
    }
    std::map<std::string_view, long> gold_counts;
    for (const auto& t : gold) {
        ++gold_counts[t];
    }
    long common = 0;
    for (const auto& t : pred) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) {
        return {};
    }
    TokenF1 out;
    out.precision = static_cast<double>(common) / static_cast<double>(pred.size());
    out.recall = static_cast<double>(common) / static_cast<double>(gold.size());
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

}  // namespace

std::vector<std::string> normalized_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_article(current)) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (char32_t cp : unicode::decode_utf8(s)) {
        if (unicode::is_whitespace(cp)) {
            flush();
        } else if (!unicode::is_punctuation(cp)) {
            unicode::append_utf8(current, unicode::to_lower(cp));
        }
    }
    flush();
    return tokens;
}

std::string normalize_text(std::string_view s) {
    std::string out;
    for (const auto& t : normalized_tokens(s)) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += t;
    }
    return out;
}

bool has_answer(std::string_view context_text, const AnswerSet& answers) {
    return any_answer_in(normalized_tokens(context_text), answers);
}

void annotate_has_answer(Dataset& dataset) {
    for (auto& doc : dataset.documents) {
        for (auto& ctx : doc.contexts) {
            ctx.has_answer = has_answer(ctx.text, doc.answers);
        }
        if (doc.reordered_contexts) {
            for (auto& ctx : *doc.reordered_contexts) {
                ctx.has_answer = has_answer(ctx.text, doc.answers);
            }
        }
    }
}

double RetrievalReport::at(std::size_t k) const {
    for (const auto& [key, value] : accuracy) {
        if (key == k) {
            return value;
        }
    }
    throw std::out_of_range("k=" + std::to_string(k) + " not in report");
}

RetrievalReport top_k_accuracy(const Dataset& dataset, std::span<const std::size_t> ks, bool use_reordered) {
    if (ks.empty()) {
        throw ConfigError("top-k accuracy needs at least one k");
    }
    for (auto k : ks) {
        if (k == 0) {
            throw ConfigError("top-k accuracy k must be at least 1");
        }
    }
    if (dataset.documents.empty()) {
        throw EmptyDataset();
    }
    RetrievalReport report;
    report.use_reordered = use_reordered;
    report.question_count = dataset.documents.size();
    const auto max_k = *std::max_element(ks.begin(), ks.end());

    // 1-based rank of the first answer-bearing context, 0 if none within max_k.
    std::vector<std::size_t> first_hit(dataset.documents.size(), 0);
    for (std::size_t d = 0; d < dataset.documents.size(); ++d) {
        const auto& doc = dataset.documents[d];
        const std::vector<Context>* list = &doc.contexts;
        if (use_reordered) {
            if (doc.reordered_contexts) {
                list = &*doc.reordered_contexts;
            } else {
                ++report.reordered_fallbacks;
            }
        }
        const auto limit = std::min(max_k, list->size());
        for (std::size_t r = 0; r < limit; ++r) {
            if (has_answer((*list)[r].text, doc.answers)) {
                first_hit[d] = r + 1;
                break;
            }
        }
    }
    std::vector<std::size_t> seen;
    for (auto k : ks) {
        if (std::find(seen.begin(), seen.end(), k) != seen.end()) {
            continue;
        }
        seen.push_back(k);
        std::size_t hits = 0;
        for (auto rank : first_hit) {
            hits += (rank != 0 && rank <= k) ? 1 : 0;
        }
        report.accuracy.emplace_back(k, 100.0 * static_cast<double>(hits) / static_cast<double>(first_hit.size()));
    }
    return report;
}

int exact_match(std::string_view prediction, const AnswerSet& answers) {
    const auto pred = normalize_text(prediction);
    for (const auto& answer : answers.answers) {
        if (pred == normalize_text(answer)) {
            return 1;
        }
    }
    return 0;
}

TokenF1 token_f1(std::string_view prediction, const AnswerSet& answers) {
    const auto pred = normalized_tokens(prediction);
    TokenF1 best;
    bool first = true;
    for (const auto& answer : answers.answers) {
        auto score = overlap_f1(pred, normalized_tokens(answer));
        if (first || score.f1 > best.f1) {
            best = score;
            first = false;
        }
    }
    return best;
}

int contains(std::string_view prediction, const AnswerSet& answers) {
    return any_answer_in(normalized_tokens(prediction), answers) ? 1 : 0;
}

GenerationReport evaluate_generation(const Dataset& dataset, std::span<const std::string> predictions) {
    if (predictions.size() != dataset.documents.size()) {
        throw LengthMismatch(std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(dataset.documents.size()) + " documents");
    }
    GenerationReport report;
    report.count = predictions.size();
    if (predictions.empty()) {
        return report;
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& answers = dataset.documents[i].answers;
        const auto f1 = token_f1(predictions[i], answers);
        report.exact_match += exact_match(predictions[i], answers);
        report.f1 += f1.f1;
        report.precision += f1.precision;
        report.recall += f1.recall;
        report.contains += contains(predictions[i], answers);
    }
    const auto n = static_cast<double>(predictions.size());
    for (auto* v : {&report.exact_match, &report.f1, &report.precision, &report.recall, &report.contains}) {
        *v = *v * 100.0 / n;
    }
    return report;
}

nlohmann::ordered_json to_json(const RetrievalReport& report) {
    nlohmann::ordered_json topk = nlohmann::ordered_json::object();
    for (const auto& [k, value] : report.accuracy) {
        topk[std::to_string(k)] = value;
    }
    nlohmann::ordered_json out{{"topk", std::move(topk)}, {"use_reordered", report.use_reordered},
                               {"n", report.question_count}};
    if (report.use_reordered) {
        out["reordered_fallbacks"] = report.reordered_fallbacks;
    }
    return out;
}

nlohmann::ordered_json to_json(const GenerationReport& report) {
    return {{"em", report.exact_match},   {"f1", report.f1},           {"precision", report.precision},
            {"recall", report.recall},    {"contains", report.contains}, {"n", report.count}};
}

}  // namespace qarank
