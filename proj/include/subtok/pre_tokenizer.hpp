#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subtok/byte_alphabet.hpp"
#include "subtok/common.hpp"
#include "subtok/unicode.hpp"

namespace subtok {

enum class PreTokenizerMode { Whitespace, WhitespacePunct, ByteLevel };

inline std::string_view to_string(PreTokenizerMode mode) {
    switch (mode) {
        case PreTokenizerMode::Whitespace: return "whitespace";
        case PreTokenizerMode::WhitespacePunct: return "whitespace_punct";
        case PreTokenizerMode::ByteLevel: return "byte_level";
    }
    throw ValidationError("unknown pre-tokenizer mode");
}

inline PreTokenizerMode pre_tokenizer_mode_from_string(std::string_view s) {
    if (s == "whitespace") return PreTokenizerMode::Whitespace;
    if (s == "whitespace_punct") return PreTokenizerMode::WhitespacePunct;
    if (s == "byte_level") return PreTokenizerMode::ByteLevel;
    throw ParseError("unknown pre-tokenizer mode \"" + std::string(s) + "\"");
}

// A word-level unit handed to the subword model. `text` is the fragment the
// model sees (byte-level: already mapped through the ByteAlphabet); `offset`
// is the byte range in the normalized source text.
struct PreToken {
    std::string text;
    ByteRange offset;
    friend bool operator==(const PreToken&, const PreToken&) = default;
};

// Splits normalized text into pre-tokens.
//
//   whitespace        split on Unicode whitespace, separators discarded
//   whitespace_punct  additionally isolate punctuation as 1-char pre-tokens
//   byte_level        map every byte through the ByteAlphabet; a pre-token is
//                     a run of leading 0x20 bytes plus the following run of
//                     non-0x20 bytes, so word-initial spaces ride along as
//                     the mapped space codepoint and no byte is discarded
inline std::vector<PreToken> pre_tokenize(std::string_view text, PreTokenizerMode mode) {
    std::vector<PreToken> out;
    if (mode == PreTokenizerMode::ByteLevel) {
        const auto& alphabet = ByteAlphabet::instance();
        std::size_t i = 0;
        while (i < text.size()) {
            const std::size_t start = i;
            while (i < text.size() && text[i] == ' ') ++i;
            while (i < text.size() && text[i] != ' ') ++i;
            out.push_back({alphabet.map_bytes(text.substr(start, i - start)),
                           {static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(i)}});
        }
        return out;
    }

    const bool isolate_punct = mode == PreTokenizerMode::WhitespacePunct;
    std::size_t i = 0;
    std::size_t word_start = 0;
    bool in_word = false;
    const auto flush = [&](std::size_t end) {
        if (!in_word) return;
        out.push_back({std::string(text.substr(word_start, end - word_start)),
                       {static_cast<std::uint32_t>(word_start), static_cast<std::uint32_t>(end)}});
        in_word = false;
    };
    while (i < text.size()) {
        const std::size_t at = i;
        const char32_t cp = unicode::decode(text, i);
        if (unicode::is_whitespace(cp)) {
            flush(at);
            continue;
        }
        if (isolate_punct && unicode::is_punctuation(cp)) {
            flush(at);
            out.push_back({std::string(text.substr(at, i - at)),
                           {static_cast<std::uint32_t>(at), static_cast<std::uint32_t>(i)}});
            continue;
        }
        if (!in_word) {
            word_start = at;
            in_word = true;
        }
    }
    flush(text.size());
    return out;
}

}  // namespace subtok
