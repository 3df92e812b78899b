#include "qarank/core_types.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/unicode.hpp"

namespace qarank {
namespace {

using nlohmann::json;

// Thrown inside record parsing, rewrapped with the record location.
struct RecordError {
    std::string message;
};

bool is_blank(std::string_view s) {
    for (char32_t cp : unicode::decode_utf8(s)) {
        if (!unicode::is_whitespace(cp)) {
            return false;
        }
    }
    return true;
}

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw RecordError{std::string("missing required field \"") + key + "\""};
    }
    return *it;
}

std::string as_string(const json& value, const char* what) {
    if (!value.is_string()) {
        throw RecordError{std::string("\"") + what + "\" must be a string"};
    }
    return value.get<std::string>();
}

std::string parse_id(const json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return value.is_number_unsigned() ? std::to_string(value.get<std::uint64_t>())
                                          : std::to_string(value.get<std::int64_t>());
    }
    throw RecordError{"context \"id\" must be a string or an integer"};
}

double parse_score(const json& value) {
    double score = 0.0;
    if (value.is_number()) {
        score = value.get<double>();
    } else if (value.is_string()) {
        const auto text = value.get<std::string>();
        std::size_t consumed = 0;
        try {
            score = std::stod(text, &consumed);
        } catch (const std::exception&) {
            throw RecordError{"context \"score\" is not numeric: \"" + text + "\""};
        }
        if (consumed != text.size()) {
            throw RecordError{"context \"score\" is not numeric: \"" + text + "\""};
        }
    } else {
        throw RecordError{"context \"score\" must be a number"};
    }
    if (!std::isfinite(score)) {
        throw RecordError{"context \"score\" is not finite"};
    }
    return score;
}

Context parse_context(const json& obj) {
    if (!obj.is_object()) {
        throw RecordError{"context must be an object"};
    }
    Context ctx;
    ctx.id = parse_id(require(obj, "id"));
    if (auto it = obj.find("title"); it != obj.end() && !it->is_null()) {
        ctx.title = as_string(*it, "title");
    }
    ctx.text = as_string(require(obj, "text"), "text");
    ctx.score = parse_score(require(obj, "score"));
    if (auto it = obj.find("has_answer"); it != obj.end() && !it->is_null()) {
        if (!it->is_boolean()) {
            throw RecordError{"context \"has_answer\" must be a boolean"};
        }
        ctx.has_answer = it->get<bool>();
    }
    return ctx;
}

std::vector<Context> parse_contexts(const json& value, const char* key) {
    if (!value.is_array()) {
        throw RecordError{std::string("\"") + key + "\" must be an array"};
    }
    std::vector<Context> out;
    out.reserve(value.size());
    for (const auto& item : value) {
        out.push_back(parse_context(item));
    }
    return out;
}

AnswerSet parse_answers(const json& value) {
    AnswerSet set;
    if (value.is_string()) {
        set.answers.push_back(value.get<std::string>());
        return set;
    }
    if (!value.is_array()) {
        throw RecordError{"\"answers\" must be an array of strings"};
    }
    for (const auto& a : value) {
        set.answers.push_back(as_string(a, "answers[]"));
    }
    return set;
}

Document parse_record(const json& obj, bool with_contexts) {
    if (!obj.is_object()) {
        throw RecordError{"record must be an object"};
    }
    Document doc;
    doc.question.text = as_string(require(obj, "question"), "question");
    doc.answers = parse_answers(require(obj, "answers"));
    if (with_contexts) {
        doc.contexts = parse_contexts(require(obj, "ctxs"), "ctxs");
        if (auto it = obj.find("reordered_ctxs"); it != obj.end() && !it->is_null()) {
            doc.reordered_contexts = parse_contexts(*it, "reordered_ctxs");
        }
    }
    auto violations = validate_document(doc);
    if (!violations.empty()) {
        throw RecordError{violations.front()};
    }
    return doc;
}

json context_to_json(const Context& ctx) {
    return json{{"id", ctx.id},
                {"title", ctx.title},
                {"text", ctx.text},
                {"score", ctx.score},
                {"has_answer", ctx.has_answer}};
}

json contexts_to_json(const std::vector<Context>& contexts) {
    json arr = json::array();
    for (const auto& ctx : contexts) {
        arr.push_back(context_to_json(ctx));
    }
    return arr;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    const auto text = io::read_file(path);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedFormat(path.string(), e.byte, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_array()) {
        throw MalformedFormat(path.string() + ": top level must be a JSON array of records");
    }
    Dataset dataset;
    dataset.name = path.stem().string();
    dataset.documents.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        try {
            dataset.documents.push_back(parse_record(root[i], /*with_contexts=*/true));
        } catch (const RecordError& e) {
            throw MalformedFormat(path.string() + " record", i, e.message);
        } catch (const json::exception& e) {
            throw MalformedFormat(path.string() + " record", i, e.what());
        }
    }
    return dataset;
}

Dataset load_dataset_qa(const std::filesystem::path& path) {
    const auto text = io::read_file(path);
    Dataset dataset;
    dataset.name = path.stem().string();
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (is_blank(line)) {
            continue;
        }
        try {
            dataset.documents.push_back(parse_record(json::parse(line), /*with_contexts=*/false));
        } catch (const RecordError& e) {
            throw MalformedFormat(path.string() + " line", line_no, e.message);
        } catch (const json::exception& e) {
            throw MalformedFormat(path.string() + " line", line_no, e.what());
        }
    }
    return dataset;
}

Dataset load_any_dataset(const std::filesystem::path& path) {
    const auto text = io::read_file(path);
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            continue;
        }
        return c == '[' ? load_dataset(path) : load_dataset_qa(path);
    }
    // Whitespace only: an empty QA file.
    return load_dataset_qa(path);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    json root = json::array();
    for (const auto& doc : dataset.documents) {
        json record{{"question", doc.question.text},
                    {"answers", doc.answers.answers},
                    {"ctxs", contexts_to_json(doc.contexts)}};
        if (doc.reordered_contexts) {
            record["reordered_ctxs"] = contexts_to_json(*doc.reordered_contexts);
        }
        root.push_back(std::move(record));
    }
    io::write_file_atomic(path, root.dump(1) + "\n");
}

std::vector<std::string> validate_document(const Document& doc) {
    std::vector<std::string> violations;
    if (is_blank(doc.question.text)) {
        violations.emplace_back("question is empty");
    }
    if (doc.answers.answers.empty()) {
        violations.emplace_back("answer list is empty");
    }
    for (std::size_t i = 0; i < doc.answers.answers.size(); ++i) {
        if (doc.answers.answers[i].empty()) {
            violations.push_back("answer " + std::to_string(i) + " is empty");
        }
    }

    auto check_list = [&](const std::vector<Context>& list, const std::string& label) {
        std::set<std::string> seen;
        std::set<std::string> reported;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& ctx = list[i];
            if (ctx.text.empty()) {
                violations.push_back(label + "[" + std::to_string(i) + "] (id " + ctx.id + ") has empty text");
            }
            if (!std::isfinite(ctx.score)) {
                violations.push_back(label + "[" + std::to_string(i) + "] (id " + ctx.id + ") has non-finite score");
            }
            if (!seen.insert(ctx.id).second && reported.insert(ctx.id).second) {
                violations.push_back(label + " has duplicate id " + ctx.id);
            }
        }
    };
    check_list(doc.contexts, "contexts");

    for (std::size_t i = 1; i < doc.contexts.size(); ++i) {
        if (doc.contexts[i].score > doc.contexts[i - 1].score) {
            violations.push_back("contexts not sorted by score at position " + std::to_string(i));
            break;
        }
    }

    if (doc.reordered_contexts) {
        const auto& reordered = *doc.reordered_contexts;
        check_list(reordered, "reordered_contexts");
        std::map<std::string, long> balance;
        for (const auto& ctx : doc.contexts) {
            ++balance[ctx.id];
        }
        for (const auto& ctx : reordered) {
            --balance[ctx.id];
        }
        std::string unexpected;
        std::string missing;
        for (const auto& [id, count] : balance) {
            auto& bucket = count < 0 ? unexpected : missing;
            if (count != 0) {
                bucket += (bucket.empty() ? "" : ", ") + id;
            }
        }
        if (!unexpected.empty() || !missing.empty()) {
            std::string msg = "reordered_contexts is not a permutation of contexts";
            if (!unexpected.empty()) {
                msg += "; unexpected ids: " + unexpected;
            }
            if (!missing.empty()) {
                msg += "; missing ids: " + missing;
            }
            violations.push_back(std::move(msg));
        }
    }
    return violations;
}

}  // namespace qarank
