#include "qarank/generation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "qarank/errors.hpp"
#include "qarank/parallel.hpp"

namespace qarank {
namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

void require_once(std::string_view tpl, std::string_view placeholder, const char* which) {
    const auto n = count_occurrences(tpl, placeholder);
    if (n != 1) {
        throw ConfigError(std::string(which) + " must contain " + std::string(placeholder) + " exactly once (found " +
                          std::to_string(n) + ")");
    }
}

// Single left-to-right pass, so substituted values are never re-expanded.
std::string substitute(std::string_view tpl, std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        bool replaced = false;
        if (tpl[pos] == '{') {
            for (const auto& [name, value] : values) {
                if (tpl.substr(pos, name.size()) == name) {
                    out += value;
                    pos += name.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back(tpl[pos++]);
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

bool starts_with_ignore_case(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        auto a = s[i];
        auto b = prefix[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a + 32);
        if (b >= 'A' && b <= 'Z') b = static_cast<char>(b + 32);
        if (a != b) {
            return false;
        }
    }
    return true;
}

}  // namespace

ContextOrder parse_context_order(const std::string& name) {
    if (name == "best_last") {
        return ContextOrder::best_last;
    }
    if (name == "best_first") {
        return ContextOrder::best_first;
    }
    throw ConfigError("unknown context order \"" + name + "\" (expected best_last or best_first)");
}

std::string to_string(ContextOrder order) { return order == ContextOrder::best_last ? "best_last" : "best_first"; }

void validate(const PromptTemplate& tpl) {
    require_once(tpl.prompt, "{contexts}", "prompt template");
    require_once(tpl.prompt, "{question}", "prompt template");
    require_once(tpl.context_block, "{title}", "context block template");
    require_once(tpl.context_block, "{text}", "context block template");
}

std::string build_prompt(const Document& doc, const PromptTemplate& tpl) {
    validate(tpl);
    const auto& ranked = doc.ranked_contexts();
    const auto take = std::min(tpl.k, ranked.size());

    std::vector<std::string> blocks;
    std::size_t used = 0;
    for (std::size_t i = 0; i < take; ++i) {
        auto block = substitute(tpl.context_block, {{"{title}", ranked[i].title}, {"{text}", ranked[i].text}});
        if (tpl.char_budget && used + block.size() > *tpl.char_budget) {
            break;
        }
        used += block.size();
        blocks.push_back(std::move(block));
    }
    if (tpl.order == ContextOrder::best_last) {
        std::reverse(blocks.begin(), blocks.end());
    }
    std::string contexts;
    contexts.reserve(used);
    for (const auto& b : blocks) {
        contexts += b;
    }
    return substitute(tpl.prompt, {{"{contexts}", contexts}, {"{question}", doc.question.text}});
}

void validate(const GeneratorConfig& cfg) {
    if (cfg.endpoint.empty()) {
        throw ConfigError("generator needs an endpoint");
    }
    if (!(cfg.temperature >= 0.0) || !std::isfinite(cfg.temperature)) {
        throw ConfigError("generator temperature must be >= 0");
    }
    if (cfg.max_tokens < 1) {
        throw ConfigError("generator max_tokens must be at least 1");
    }
    if (cfg.concurrency < 1) {
        throw ConfigError("generator concurrency must be at least 1");
    }
}

ChatCompletionClient::ChatCompletionClient(const GeneratorConfig& cfg)
    : cfg_(cfg), http_(cfg.endpoint, cfg.retry, auth_headers_from_env(cfg.api_key_env)) {
    validate(cfg_);
}

std::string ChatCompletionClient::complete(const std::string& prompt, std::uint64_t request_key) const {
    const nlohmann::json request{{"model", cfg_.model},
                                 {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                                 {"temperature", cfg_.temperature},
                                 {"max_tokens", cfg_.max_tokens}};
    const auto reply = http_.post(request, request_key);
    try {
        const auto& choice = reply.at("choices").at(0);
        if (auto msg = choice.find("message"); msg != choice.end()) {
            const auto& content = msg->at("content");
            return content.is_null() ? std::string{} : content.get<std::string>();
        }
        return choice.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(cfg_.endpoint + ": malformed completion response: " + e.what());
    }
}

GenerationBatch generate_answers(const CompletionClient& client, std::span<const Document> docs,
                                 const PromptTemplate& tpl, std::size_t concurrency, bool fail_soft) {
    validate(tpl);
    GenerationBatch batch;
    batch.answers.resize(docs.size());
    std::vector<std::string> errors(docs.size());
    std::vector<char> failed(docs.size(), 0);
    parallel_for(docs.size(), concurrency, [&](std::size_t i) {
        try {
            batch.answers[i] = client.complete(build_prompt(docs[i], tpl), i);
        } catch (const Error& e) {
            if (!fail_soft) {
                throw;
            }
            batch.answers[i].clear();
            errors[i] = e.what();
            failed[i] = 1;
        }
    });
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (failed[i]) {
            batch.failures.push_back({i, std::move(errors[i])});
        }
    }
    return batch;
}

GenerationBatch generate_answers(const GeneratorConfig& cfg, std::span<const Document> docs,
                                 const PromptTemplate& tpl, bool fail_soft) {
    const ChatCompletionClient client(cfg);
    return generate_answers(client, docs, tpl, cfg.concurrency, fail_soft);
}

std::string extract_answer(std::string_view raw) {
    auto line = trim(raw);
    line = trim(line.substr(0, line.find('\n')));
    if (starts_with_ignore_case(line, "answer:")) {
        line = trim(line.substr(7));
    }
    return std::string(line);
}

}  // namespace qarank
