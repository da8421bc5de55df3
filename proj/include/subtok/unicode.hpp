#pragma once

#include <vector>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "subtok/common.hpp"

namespace subtok::unicode {

inline constexpr char32_t kReplacementChar = 0xFFFD;
inline constexpr char32_t kMaxCodepoint = 0x10FFFF;

// ---- UTF-8 codec --------------------------------------------------------

// Decodes the codepoint starting at s[i], advancing i past it. Strict:
// rejects overlong forms, surrogates, and out-of-range values.
inline bool try_decode(std::string_view s, std::size_t& i, char32_t& out) {
    const auto fail = [&](std::size_t advance) {
        i += advance;
        out = kReplacementChar;
        return false;
    };
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        out = b0;
        ++i;
        return true;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return fail(1);
    }
    if (i + static_cast<std::size_t>(len) > s.size()) return fail(1);
    for (int k = 1; k < len; ++k) {
        const unsigned char bk = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((bk & 0xC0) != 0x80) return fail(1);
        cp = (cp << 6) | (bk & 0x3F);
    }
    static constexpr char32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinByLen[len]) return fail(1);                  // overlong
    if (cp >= 0xD800 && cp <= 0xDFFF) return fail(1);         // surrogate
    if (cp > kMaxCodepoint) return fail(1);
    i += static_cast<std::size_t>(len);
    out = cp;
    return true;
}

inline char32_t decode(std::string_view s, std::size_t& i) {
    char32_t cp;
    const std::size_t at = i;
    if (!try_decode(s, i, cp)) throw Utf8Error("invalid UTF-8 sequence", at);
    return cp;
}

inline void append(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string to_utf8(char32_t cp) {
    std::string s;
    append(cp, s);
    return s;
}

inline std::size_t encoded_length(char32_t cp) {
    if (cp < 0x80) return 1;
    if (cp < 0x800) return 2;
    if (cp < 0x10000) return 3;
    return 4;
}

inline bool is_valid(std::string_view s) {
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size())
        if (!try_decode(s, i, cp)) return false;
    return true;
}

// Throws Utf8Error with the offending byte position.
inline void validate(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) decode(s, i);
}

// Lossy copy: invalid sequences become U+FFFD; *replaced reports whether
// any replacement happened.
inline std::string sanitize(std::string_view s, bool* replaced = nullptr) {
    std::string out;
    out.reserve(s.size());
    if (replaced) *replaced = false;
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (!try_decode(s, i, cp) && replaced) *replaced = true;
        append(cp, out);
    }
    return out;
}

inline std::size_t codepoint_count(std::string_view s) {
    std::size_t i = 0, n = 0;
    char32_t cp;
    while (i < s.size()) {
        try_decode(s, i, cp);
        ++n;
    }
    return n;
}

// ---- character classes --------------------------------------------------

inline bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_punctuation(char32_t cp) {
    if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
        (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E))
        return true;
    switch (cp) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
            return true;
        default:
            break;
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if ((cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
        (cp >= 0x3014 && cp <= 0x301F))
        return true;
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65))
        return true;
    return false;
}

// Combining marks stripped by accent removal.
inline bool is_combining_mark(char32_t cp) {
    return cp >= 0x0300 && cp <= 0x036F;
}

// Simple case mapping for ASCII, Latin-1 Supplement, and Latin Extended-A.
// Other scripts pass through unchanged (documented coverage).
inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? (cp == 0x0130 ? 0x69 : cp + 1) : cp;
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0xFF;
    if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
    return cp;
}

// ---- canonical (de)composition, Latin coverage --------------------------

namespace detail {

struct Decomp {
    char32_t precomposed;
    char32_t base;
    char32_t mark;
};

// Canonical decompositions for the precomposed Latin-1 Supplement and
// Latin Extended-A letters.
inline const std::vector<Decomp>& decomp_table() {
    static const std::vector<Decomp> table = {
        {0xC0, 'A', 0x300},  {0xC1, 'A', 0x301},  {0xC2, 'A', 0x302},  {0xC3, 'A', 0x303},
        {0xC4, 'A', 0x308},  {0xC5, 'A', 0x30A},  {0xC7, 'C', 0x327},  {0xC8, 'E', 0x300},
        {0xC9, 'E', 0x301},  {0xCA, 'E', 0x302},  {0xCB, 'E', 0x308},  {0xCC, 'I', 0x300},
        {0xCD, 'I', 0x301},  {0xCE, 'I', 0x302},  {0xCF, 'I', 0x308},  {0xD1, 'N', 0x303},
        {0xD2, 'O', 0x300},  {0xD3, 'O', 0x301},  {0xD4, 'O', 0x302},  {0xD5, 'O', 0x303},
        {0xD6, 'O', 0x308},  {0xD9, 'U', 0x300},  {0xDA, 'U', 0x301},  {0xDB, 'U', 0x302},
        {0xDC, 'U', 0x308},  {0xDD, 'Y', 0x301},  {0xE0, 'a', 0x300},  {0xE1, 'a', 0x301},
        {0xE2, 'a', 0x302},  {0xE3, 'a', 0x303},  {0xE4, 'a', 0x308},  {0xE5, 'a', 0x30A},
        {0xE7, 'c', 0x327},  {0xE8, 'e', 0x300},  {0xE9, 'e', 0x301},  {0xEA, 'e', 0x302},
        {0xEB, 'e', 0x308},  {0xEC, 'i', 0x300},  {0xED, 'i', 0x301},  {0xEE, 'i', 0x302},
        {0xEF, 'i', 0x308},  {0xF1, 'n', 0x303},  {0xF2, 'o', 0x300},  {0xF3, 'o', 0x301},
        {0xF4, 'o', 0x302},  {0xF5, 'o', 0x303},  {0xF6, 'o', 0x308},  {0xF9, 'u', 0x300},
        {0xFA, 'u', 0x301},  {0xFB, 'u', 0x302},  {0xFC, 'u', 0x308},  {0xFD, 'y', 0x301},
        {0xFF, 'y', 0x308},
        {0x100, 'A', 0x304}, {0x101, 'a', 0x304}, {0x102, 'A', 0x306}, {0x103, 'a', 0x306},
        {0x104, 'A', 0x328}, {0x105, 'a', 0x328}, {0x106, 'C', 0x301}, {0x107, 'c', 0x301},
        {0x108, 'C', 0x302}, {0x109, 'c', 0x302}, {0x10A, 'C', 0x307}, {0x10B, 'c', 0x307},
        {0x10C, 'C', 0x30C}, {0x10D, 'c', 0x30C}, {0x10E, 'D', 0x30C}, {0x10F, 'd', 0x30C},
        {0x112, 'E', 0x304}, {0x113, 'e', 0x304}, {0x114, 'E', 0x306}, {0x115, 'e', 0x306},
        {0x116, 'E', 0x307}, {0x117, 'e', 0x307}, {0x118, 'E', 0x328}, {0x119, 'e', 0x328},
        {0x11A, 'E', 0x30C}, {0x11B, 'e', 0x30C}, {0x11C, 'G', 0x302}, {0x11D, 'g', 0x302},
        {0x11E, 'G', 0x306}, {0x11F, 'g', 0x306}, {0x120, 'G', 0x307}, {0x121, 'g', 0x307},
        {0x122, 'G', 0x327}, {0x123, 'g', 0x327}, {0x124, 'H', 0x302}, {0x125, 'h', 0x302},
        {0x128, 'I', 0x303}, {0x129, 'i', 0x303}, {0x12A, 'I', 0x304}, {0x12B, 'i', 0x304},
        {0x12C, 'I', 0x306}, {0x12D, 'i', 0x306}, {0x12E, 'I', 0x328}, {0x12F, 'i', 0x328},
        {0x130, 'I', 0x307}, {0x134, 'J', 0x302}, {0x135, 'j', 0x302}, {0x136, 'K', 0x327},
        {0x137, 'k', 0x327}, {0x139, 'L', 0x301}, {0x13A, 'l', 0x301}, {0x13B, 'L', 0x327},
        {0x13C, 'l', 0x327}, {0x13D, 'L', 0x30C}, {0x13E, 'l', 0x30C}, {0x143, 'N', 0x301},
        {0x144, 'n', 0x301}, {0x145, 'N', 0x327}, {0x146, 'n', 0x327}, {0x147, 'N', 0x30C},
        {0x148, 'n', 0x30C}, {0x14C, 'O', 0x304}, {0x14D, 'o', 0x304}, {0x14E, 'O', 0x306},
        {0x14F, 'o', 0x306}, {0x150, 'O', 0x30B}, {0x151, 'o', 0x30B},
    };
    return table;
}

// Second half of Latin Extended-A (kept separate only to stay readable).
inline const std::vector<Decomp>& decomp_table2() {
    static const std::vector<Decomp> table = {
        {0x154, 'R', 0x301}, {0x155, 'r', 0x301}, {0x156, 'R', 0x327}, {0x157, 'r', 0x327},
        {0x158, 'R', 0x30C}, {0x159, 'r', 0x30C}, {0x15A, 'S', 0x301}, {0x15B, 's', 0x301},
        {0x15C, 'S', 0x302}, {0x15D, 's', 0x302}, {0x15E, 'S', 0x327}, {0x15F, 's', 0x327},
        {0x160, 'S', 0x30C}, {0x161, 's', 0x30C}, {0x162, 'T', 0x327}, {0x163, 't', 0x327},
        {0x164, 'T', 0x30C}, {0x165, 't', 0x30C}, {0x168, 'U', 0x303}, {0x169, 'u', 0x303},
        {0x16A, 'U', 0x304}, {0x16B, 'u', 0x304}, {0x16C, 'U', 0x306}, {0x16D, 'u', 0x306},
        {0x16E, 'U', 0x30A}, {0x16F, 'u', 0x30A}, {0x170, 'U', 0x30B}, {0x171, 'u', 0x30B},
        {0x172, 'U', 0x328}, {0x173, 'u', 0x328}, {0x176, 'Y', 0x302}, {0x177, 'y', 0x302},
        {0x178, 'Y', 0x308}, {0x17B, 'Z', 0x307},
    };
    return table;
}

inline const std::vector<Decomp>& decomp_table3() {
    static const std::vector<Decomp> table = {
        {0x174, 'W', 0x302}, {0x175, 'w', 0x302}, {0x179, 'Z', 0x301}, {0x17A, 'z', 0x301},
        {0x17C, 'z', 0x307}, {0x17D, 'Z', 0x30C}, {0x17E, 'z', 0x30C},
    };
    return table;
}

inline const std::unordered_map<char32_t, std::pair<char32_t, char32_t>>& decomp_map() {
    static const auto* map = [] {
        auto* m = new std::unordered_map<char32_t, std::pair<char32_t, char32_t>>();
        for (const auto& d : decomp_table()) (*m)[d.precomposed] = {d.base, d.mark};
        for (const auto& d : decomp_table2()) (*m)[d.precomposed] = {d.base, d.mark};
        for (const auto& d : decomp_table3()) (*m)[d.precomposed] = {d.base, d.mark};
        return m;
    }();
    return *map;
}

inline const std::unordered_map<std::uint64_t, char32_t>& compose_map() {
    static const auto* map = [] {
        auto* m = new std::unordered_map<std::uint64_t, char32_t>();
        for (const auto& [pre, parts] : decomp_map()) {
            const std::uint64_t key =
                (static_cast<std::uint64_t>(parts.first) << 32) | parts.second;
            m->emplace(key, pre);
        }
        return m;
    }();
    return *map;
}

}  // namespace detail

inline std::optional<std::pair<char32_t, char32_t>> canonical_decompose(char32_t cp) {
    const auto& m = detail::decomp_map();
    auto it = m.find(cp);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

inline std::optional<char32_t> compose(char32_t base, char32_t mark) {
    const auto& m = detail::compose_map();
    auto it = m.find((static_cast<std::uint64_t>(base) << 32) | mark);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

}  // namespace subtok::unicode
