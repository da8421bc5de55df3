#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subtok/unicode.hpp"

namespace subtok {

// Text normalization applied before pre-tokenization. Steps run in a fixed
// order regardless of how the flags were set: NFC composition, lowercasing,
// accent stripping, whitespace collapsing. Each step is idempotent, so the
// whole pass is too.
//
// Unicode coverage is the Latin range shipped in unicode.hpp; codepoints
// outside it pass through unchanged.
struct Normalizer {
    bool lowercase = false;
    bool unicode_nfc = false;
    bool strip_accents = false;
    bool collapse_whitespace = false;

    bool is_identity() const {
        return !lowercase && !unicode_nfc && !strip_accents && !collapse_whitespace;
    }

    // Input must be valid UTF-8; throws Utf8Error with the byte position
    // otherwise.
    std::string apply(std::string_view text) const {
        std::vector<char32_t> cps;
        cps.reserve(text.size());
        std::size_t i = 0;
        while (i < text.size()) cps.push_back(unicode::decode(text, i));

        if (unicode_nfc) compose_pass(cps);
        if (lowercase)
            for (auto& cp : cps) cp = unicode::to_lower(cp);
        if (strip_accents) strip_pass(cps);
        if (collapse_whitespace) collapse_pass(cps);

        std::string out;
        out.reserve(text.size());
        for (char32_t cp : cps) unicode::append(cp, out);
        return out;
    }

    friend bool operator==(const Normalizer&, const Normalizer&) = default;

private:
    static void compose_pass(std::vector<char32_t>& cps) {
        std::vector<char32_t> out;
        out.reserve(cps.size());
        for (char32_t cp : cps) {
            if (!out.empty()) {
                if (auto pre = unicode::compose(out.back(), cp)) {
                    out.back() = *pre;
                    continue;
                }
            }
            out.push_back(cp);
        }
        cps = std::move(out);
    }

    static void strip_pass(std::vector<char32_t>& cps) {
        std::vector<char32_t> out;
        out.reserve(cps.size());
        for (char32_t cp : cps) {
            if (auto parts = unicode::canonical_decompose(cp)) {
                out.push_back(parts->first);  // mark dropped
                continue;
            }
            if (unicode::is_combining_mark(cp)) continue;
            out.push_back(cp);
        }
        cps = std::move(out);
    }

    // Runs of Unicode whitespace become a single ASCII space; leading and
    // trailing whitespace is removed.
    static void collapse_pass(std::vector<char32_t>& cps) {
        std::vector<char32_t> out;
        out.reserve(cps.size());
        bool pending_space = false;
        for (char32_t cp : cps) {
            if (unicode::is_whitespace(cp)) {
                pending_space = !out.empty();
                continue;
            }
            if (pending_space) {
                out.push_back(U' ');
                pending_space = false;
            }
            out.push_back(cp);
        }
        cps = std::move(out);
    }
};

}  // namespace subtok
