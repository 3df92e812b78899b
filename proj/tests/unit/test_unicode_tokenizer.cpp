#include <gtest/gtest.h>

#include <utility>

#include "qarank/tokenizer.hpp"
#include "qarank/unicode.hpp"

using qarank::porter_stem;
using qarank::tokenize;
using qarank::TokenizerOptions;
using Tokens = std::vector<std::string>;

TEST(Utf8, DecodeReplacesInvalidBytes) {
    EXPECT_EQ(qarank::unicode::decode_utf8("a\xC3\xA9"), U"aé");
    EXPECT_EQ(qarank::unicode::decode_utf8("a\xFF" "b"), U"a�b");
    EXPECT_EQ(qarank::unicode::decode_utf8("\xE2\x82"), U"�");
    EXPECT_EQ(qarank::unicode::decode_utf8("\xF0\x9F\x98x"), U"�x");
    EXPECT_EQ(qarank::unicode::decode_utf8("\xC0\xAF"), U"��");
    EXPECT_EQ(qarank::unicode::decode_utf8("\xED\xA0\x80"), U"���");
    EXPECT_EQ(qarank::unicode::decode_utf8("\xF4\x90\x80\x80"), U"����");
}

TEST(Utf8, EncodeRoundTrips) {
    const std::u32string text = U"Zürich 東京 \U0001F600";
    EXPECT_EQ(qarank::unicode::decode_utf8(qarank::unicode::encode_utf8(text)), text);
}

TEST(UnicodeProperties, Classes) {
    using namespace qarank::unicode;
    EXPECT_TRUE(is_whitespace(U' '));
    EXPECT_TRUE(is_whitespace(U' '));
    EXPECT_TRUE(is_whitespace(U'　'));
    EXPECT_FALSE(is_whitespace(U'x'));
    EXPECT_TRUE(is_punctuation(U'.'));
    EXPECT_TRUE(is_punctuation(U'\u2014'));
    EXPECT_TRUE(is_punctuation(U'¿'));
    EXPECT_FALSE(is_punctuation(U'$'));  // symbol, not punctuation
    EXPECT_TRUE(is_alnum(U'é'));
    EXPECT_TRUE(is_alnum(U'7'));
    EXPECT_TRUE(is_alnum(U'東'));
    EXPECT_FALSE(is_alnum(U'-'));
    EXPECT_EQ(to_lower(U'A'), U'a');
    EXPECT_EQ(to_lower(U'É'), U'é');
    EXPECT_EQ(to_lower(U'Α'), U'α');
    EXPECT_EQ(to_lower(U'1'), U'1');
}

TEST(UnicodeProperties, SplitWhitespace) {
    EXPECT_EQ(qarank::unicode::split_whitespace("  a\tb c \n"), (Tokens{"a", "b", "c"}));
    EXPECT_TRUE(qarank::unicode::split_whitespace(" \t ").empty());
}

TEST(Tokenizer, LowercasesAndSplits) {
    EXPECT_EQ(tokenize("The capital is Paris."), (Tokens{"the", "capital", "is", "paris"}));
    EXPECT_EQ(tokenize("state-of-the-art"), (Tokens{"state", "of", "the", "art"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize(" ... ").empty());
}

TEST(Tokenizer, NonAscii) {
    EXPECT_EQ(tokenize("ZÜRICH, café!"), (Tokens{"zürich", "café"}));
    EXPECT_EQ(tokenize("route 66"), (Tokens{"route", "66"}));
}

TEST(Tokenizer, StemmingIsOptional) {
    EXPECT_EQ(tokenize("Running ponies"), (Tokens{"running", "ponies"}));
    EXPECT_EQ(tokenize("Running ponies", TokenizerOptions{.stem = true}), (Tokens{"run", "poni"}));
}

TEST(PorterStemmer, ReferenceVocabulary) {
    const std::vector<std::pair<const char*, const char*>> pairs{
        {"caresses", "caress"},   {"ponies", "poni"},         {"ties", "ti"},
        {"caress", "caress"},     {"cats", "cat"},            {"feed", "feed"},
        {"agreed", "agre"},       {"plastered", "plaster"},   {"bled", "bled"},
        {"motoring", "motor"},    {"sing", "sing"},           {"conflated", "conflat"},
        {"troubled", "troubl"},   {"sized", "size"},          {"hopping", "hop"},
        {"tanned", "tan"},        {"falling", "fall"},        {"hissing", "hiss"},
        {"fizzed", "fizz"},       {"failing", "fail"},        {"filing", "file"},
        {"happy", "happi"},       {"sky", "sky"},             {"relational", "relat"},
        {"conditional", "condit"}, {"rational", "ration"},    {"valenci", "valenc"},
        {"digitizer", "digit"},   {"conformabli", "conform"}, {"radicalli", "radic"},
        {"differentli", "differ"}, {"vileli", "vile"},        {"analogousli", "analog"},
        {"vietnamization", "vietnam"}, {"predication", "predic"}, {"operator", "oper"},
        {"feudalism", "feudal"},  {"decisiveness", "decis"},  {"hopefulness", "hope"},
        {"callousness", "callous"}, {"formaliti", "formal"},  {"sensitiviti", "sensit"},
        {"sensibiliti", "sensibl"}, {"triplicate", "triplic"}, {"formative", "form"},
        {"formalize", "formal"},  {"electriciti", "electr"},  {"electrical", "electr"},
        {"hopeful", "hope"},      {"goodness", "good"},       {"revival", "reviv"},
        {"allowance", "allow"},   {"inference", "infer"},     {"airliner", "airlin"},
        {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"}, {"defensible", "defens"},
        {"irritant", "irrit"},    {"replacement", "replac"},  {"adjustment", "adjust"},
        {"dependent", "depend"},  {"adoption", "adopt"},      {"homologou", "homolog"},
        {"communism", "commun"},  {"activate", "activ"},      {"angulariti", "angular"},
        {"homologous", "homolog"}, {"effective", "effect"},   {"bowdlerize", "bowdler"},
        {"probate", "probat"},    {"rate", "rate"},           {"cease", "ceas"},
        {"controll", "control"},  {"roll", "roll"},           {"generalization", "gener"},
        {"oscillators", "oscil"},
    };
    for (const auto& [word, stem] : pairs) {
        EXPECT_EQ(porter_stem(word), stem) << word;
    }
}

TEST(PorterStemmer, LeavesShortAndNonAsciiWordsAlone) {
    EXPECT_EQ(porter_stem("is"), "is");
    EXPECT_EQ(porter_stem("as"), "as");
    EXPECT_EQ(porter_stem(""), "");
    EXPECT_EQ(porter_stem("cafés"), "cafés");
    EXPECT_EQ(porter_stem("abc123"), "abc123");
}
