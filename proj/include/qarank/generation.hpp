#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qarank/core_types.hpp"
#include "qarank/http_client.hpp"

namespace qarank {

enum class ContextOrder { best_last, best_first };

ContextOrder parse_context_order(const std::string& name);
std::string to_string(ContextOrder order);

/// In-context prompt layout. `prompt` holds {contexts} and {question};
/// `context_block` holds {title} and {text}; each exactly once.
struct PromptTemplate {
    std::string prompt = "{contexts}Question: {question}\nAnswer:";
    std::string context_block = "{title}\n{text}\n\n";
    std::size_t k = 5;
    ContextOrder order = ContextOrder::best_last;
    /// Maximum total bytes of rendered context blocks. Lower-ranked blocks
    /// that do not fit are dropped whole. nullopt means unlimited.
    std::optional<std::size_t> char_budget = 6000;
};

void validate(const PromptTemplate& tpl);

/// Renders up to k contexts (re-ordered list when present) followed by the
/// question. Deterministic.
std::string build_prompt(const Document& doc, const PromptTemplate& tpl);

/// Something that turns a prompt into text. Implementations must be safe to
/// call from several threads.
class CompletionClient {
  public:
    virtual ~CompletionClient() = default;
    virtual std::string complete(const std::string& prompt, std::uint64_t request_key) const = 0;
};

struct GeneratorConfig {
    std::string endpoint;
    std::string model;
    int max_tokens = 64;
    double temperature = 0.0;
    RetryPolicy retry;
    std::size_t concurrency = 4;
    std::string api_key_env = "QARANK_API_KEY";
};

void validate(const GeneratorConfig& cfg);

/// OpenAI-compatible chat-completions client: posts
/// `{model, messages: [{role: "user", content}], temperature, max_tokens}`
/// and returns the first choice's message content.
class ChatCompletionClient final : public CompletionClient {
  public:
    explicit ChatCompletionClient(const GeneratorConfig& cfg);
    std::string complete(const std::string& prompt, std::uint64_t request_key) const override;

  private:
    GeneratorConfig cfg_;
    JsonHttpClient http_;
};

struct GenerationBatch {
    /// Raw completions, answers[i] for docs[i]; "" where the call failed.
    std::vector<std::string> answers;
    std::vector<DocumentFailure> failures;
};

/// Bounded-parallel generation. With fail_soft, a failed document yields ""
/// and a recorded failure; otherwise the first failure is rethrown.
GenerationBatch generate_answers(const CompletionClient& client, std::span<const Document> docs,
                                 const PromptTemplate& tpl, std::size_t concurrency = 4, bool fail_soft = true);

GenerationBatch generate_answers(const GeneratorConfig& cfg, std::span<const Document> docs,
                                 const PromptTemplate& tpl, bool fail_soft = true);

/// First non-blank line, trimmed, without a leading "Answer:" label.
std::string extract_answer(std::string_view raw);

}  // namespace qarank
