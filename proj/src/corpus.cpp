#include "qarank/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/unicode.hpp"

namespace qarank {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    return fields;
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& id, const std::string& source,
                  std::size_t line_no) {
    if (!seen.insert(id).second) {
        throw MalformedFormat(source, line_no, "duplicate passage id \"" + id + "\"");
    }
}

Corpus load_tsv(const std::filesystem::path& path) {
    const auto text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Corpus corpus;
    std::unordered_set<std::string> seen;
    const auto source = path.string() + " line";
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!header_seen) {
            if (line != "id\ttext\ttitle") {
                throw MalformedFormat(source, line_no, "expected header \"id<TAB>text<TAB>title\"");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw MalformedFormat(source, line_no,
                                  "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        }
        Passage p;
        p.passage_id = std::move(fields[0]);
        p.text = std::move(fields[1]);
        p.title = std::move(fields[2]);
        if (p.passage_id.empty()) {
            throw MalformedFormat(source, line_no, "empty passage id");
        }
        p.word_count = unicode::split_whitespace(p.text).size();
        if (p.word_count == 0) {
            throw MalformedFormat(source, line_no, "empty passage text");
        }
        check_unique(seen, p.passage_id, source, line_no);
        corpus.passages.push_back(std::move(p));
    }
    if (!header_seen) {
        throw MalformedFormat(source, 1, "missing header \"id<TAB>text<TAB>title\"");
    }
    return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path, std::size_t words_per_passage) {
    using nlohmann::json;
    const auto text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Corpus corpus;
    std::unordered_set<std::string> seen_docs;
    std::unordered_set<std::string> seen;
    const auto source = path.string() + " line";
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        RawDoc doc;
        try {
            auto obj = json::parse(line);
            doc.doc_id = obj.at("doc_id").get<std::string>();
            doc.title = obj.value("title", std::string{});
            doc.body = obj.at("body").get<std::string>();
        } catch (const json::exception& e) {
            throw MalformedFormat(source, line_no, e.what());
        }
        if (doc.doc_id.empty()) {
            throw MalformedFormat(source, line_no, "empty doc_id");
        }
        if (!seen_docs.insert(doc.doc_id).second) {
            throw MalformedFormat(source, line_no, "duplicate doc_id \"" + doc.doc_id + "\"");
        }
        auto passages = chunk_document(doc, words_per_passage);
        if (passages.empty()) {
            throw MalformedFormat(source, line_no, "empty document body");
        }
        for (auto& p : passages) {
            check_unique(seen, p.passage_id, source, line_no);
            corpus.passages.push_back(std::move(p));
        }
    }
    return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(const std::string& name) {
    if (name == "tsv") {
        return CorpusFormat::tsv;
    }
    if (name == "jsonl") {
        return CorpusFormat::jsonl;
    }
    throw ConfigError("unknown corpus format \"" + name + "\" (expected tsv or jsonl)");
}

std::vector<Passage> chunk_document(const RawDoc& doc, std::size_t words_per_passage) {
    if (words_per_passage == 0) {
        throw ConfigError("words_per_passage must be at least 1");
    }
    const auto words = unicode::split_whitespace(doc.body);
    std::vector<Passage> passages;
    passages.reserve((words.size() + words_per_passage - 1) / words_per_passage);
    for (std::size_t begin = 0; begin < words.size(); begin += words_per_passage) {
        const auto end = std::min(words.size(), begin + words_per_passage);
        Passage p;
        p.passage_id = doc.doc_id + "#" + std::to_string(passages.size());
        p.title = doc.title;
        p.word_count = end - begin;
        for (auto i = begin; i < end; ++i) {
            if (i != begin) {
                p.text.push_back(' ');
            }
            p.text += words[i];
        }
        passages.push_back(std::move(p));
    }
    return passages;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::size_t words_per_passage) {
    return format == CorpusFormat::tsv ? load_tsv(path) : load_jsonl(path, words_per_passage);
}

void save_corpus_tsv(const Corpus& corpus, const std::filesystem::path& path) {
    std::string out = "id\ttext\ttitle\n";
    for (const auto& p : corpus.passages) {
        for (const auto* field : {&p.passage_id, &p.text, &p.title}) {
            if (field->find_first_of("\t\n") != std::string::npos) {
                throw IoError("passage " + p.passage_id + " contains a tab or newline; not representable in TSV");
            }
        }
        out += p.passage_id + '\t' + p.text + '\t' + p.title + '\n';
    }
    io::write_file_atomic(path, out);
}

}  // namespace qarank
