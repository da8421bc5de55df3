#include <doctest.h>

#include <random>
#include <string>

#include "subtok/normalizer.hpp"
#include "subtok/unicode.hpp"

using namespace subtok;

TEST_CASE("utf8 decode round trips codepoints") {
    for (char32_t cp : {U'a', U'é', U'Ω', U'漢', char32_t{0x1F600}, char32_t{0x10FFFF}}) {
        std::string s;
        unicode::append(cp, s);
        std::size_t i = 0;
        CHECK(unicode::decode(s, i) == cp);
        CHECK(i == s.size());
    }
}

TEST_CASE("utf8 validation rejects malformed input with byte position") {
    CHECK(unicode::is_valid("hello"));
    CHECK(unicode::is_valid("héllo"));
    CHECK_FALSE(unicode::is_valid("\xff"));
    CHECK_FALSE(unicode::is_valid("\xC3"));          // truncated
    CHECK_FALSE(unicode::is_valid("\xC0\xAF"));      // overlong
    CHECK_FALSE(unicode::is_valid("\xED\xA0\x80"));  // surrogate

    try {
        unicode::validate("ab\xffzz");
        FAIL("expected Utf8Error");
    } catch (const Utf8Error& e) {
        CHECK(e.byte_pos() == 2);
    }
}

TEST_CASE("sanitize replaces invalid sequences and flags them") {
    bool replaced = false;
    CHECK(unicode::sanitize("ok", &replaced) == "ok");
    CHECK_FALSE(replaced);
    const std::string fixed = unicode::sanitize("a\xffz", &replaced);
    CHECK(replaced);
    CHECK(unicode::is_valid(fixed));
}

TEST_CASE("whitespace and punctuation classes") {
    CHECK(unicode::is_whitespace(U' '));
    CHECK(unicode::is_whitespace(U'\t'));
    CHECK(unicode::is_whitespace(0x2003));  // em space
    CHECK_FALSE(unicode::is_whitespace(U'a'));
    CHECK(unicode::is_punctuation(U','));
    CHECK(unicode::is_punctuation(U'!'));
    CHECK(unicode::is_punctuation(0x2014));  // em dash
    CHECK_FALSE(unicode::is_punctuation(U'5'));
}

TEST_CASE("normalize applies flags in fixed order") {
    Normalizer lower_collapse{.lowercase = true, .collapse_whitespace = true};
    CHECK(lower_collapse.apply("Hello  World") == "hello world");
    CHECK(lower_collapse.apply("") == "");

    // NFD-decompose then drop combining marks.
    Normalizer strip{.strip_accents = true};
    CHECK(strip.apply("Café") == "Cafe");
    CHECK(strip.apply("Café") == "Cafe");  // already decomposed

    Normalizer nfc{.unicode_nfc = true};
    CHECK(nfc.apply("Café") == "Café");
    CHECK(nfc.apply("Café") == "Café");
}

TEST_CASE("normalize rejects invalid utf-8 at the boundary") {
    Normalizer norm{.lowercase = true};
    CHECK_THROWS_AS(norm.apply("a\xff"), Utf8Error);
}

TEST_CASE("normalize is idempotent for every flag combination") {
    std::mt19937 rng(7);
    const std::u32string pool = U"aA ÉéÑñ\t Ωx çÇ  Šš́̈ füÿ";
    for (int flags = 0; flags < 16; ++flags) {
        Normalizer norm{.lowercase = (flags & 1) != 0,
                        .unicode_nfc = (flags & 2) != 0,
                        .strip_accents = (flags & 4) != 0,
                        .collapse_whitespace = (flags & 8) != 0};
        for (int trial = 0; trial < 50; ++trial) {
            std::string text;
            const std::size_t len = rng() % 12;
            for (std::size_t k = 0; k < len; ++k)
                unicode::append(pool[rng() % pool.size()], text);
            const std::string once = norm.apply(text);
            CHECK(norm.apply(once) == once);
        }
    }
}

TEST_CASE("case mapping covers the documented latin range") {
    CHECK(unicode::to_lower(U'A') == U'a');
    CHECK(unicode::to_lower(U'É') == U'é');
    CHECK(unicode::to_lower(U'Š') == U'š');
    CHECK(unicode::to_lower(U'Ÿ') == U'ÿ');
    CHECK(unicode::to_lower(U'Ĺ') == U'ĺ');
    CHECK(unicode::to_lower(U'×') == U'×');  // not a letter
    CHECK(unicode::to_lower(U'Ω') == U'Ω');  // outside coverage, unchanged
}

TEST_CASE("compose and decompose are mutual inverses over the table") {
    for (char32_t cp : {U'À', U'é', U'ñ', U'Č', U'ů', U'Ž'}) {
        const auto parts = unicode::canonical_decompose(cp);
        REQUIRE(parts.has_value());
        const auto back = unicode::compose(parts->first, parts->second);
        REQUIRE(back.has_value());
        CHECK(*back == cp);
    }
    CHECK_FALSE(unicode::canonical_decompose(U'a').has_value());
    CHECK_FALSE(unicode::compose(U'a', U'b').has_value());
}
