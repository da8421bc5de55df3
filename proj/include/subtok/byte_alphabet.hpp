#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "subtok/common.hpp"
#include "subtok/unicode.hpp"

namespace subtok {

// Injective map byte -> codepoint used by byte-level BPE. Printable bytes
// (0x21-0x7E, 0xA1-0xAC, 0xAE-0xFF) map to their own codepoint; every other
// byte maps to 256+k where k is its rank among the excluded bytes in
// ascending byte order. Total coverage of all 256 bytes makes byte-level
// encoding lossless on arbitrary input.
class ByteAlphabet {
public:
    ByteAlphabet() {
        char32_t next = 256;
        for (int b = 0; b < 256; ++b) {
            if (is_kept(static_cast<std::uint8_t>(b)))
                forward_[b] = static_cast<char32_t>(b);
            else
                forward_[b] = next++;
        }
        for (int b = 0; b < 256; ++b) reverse_[forward_[b]] = static_cast<std::uint8_t>(b);
    }

    static const ByteAlphabet& instance() {
        static const ByteAlphabet alphabet;
        return alphabet;
    }

    char32_t forward(std::uint8_t byte) const { return forward_[byte]; }

    std::optional<std::uint8_t> reverse(char32_t cp) const {
        auto it = reverse_.find(cp);
        if (it == reverse_.end()) return std::nullopt;
        return it->second;
    }

    // Maps every byte of `raw` to its codepoint, UTF-8 encoded.
    std::string map_bytes(std::string_view raw) const {
        std::string out;
        out.reserve(raw.size() * 2);
        for (unsigned char b : raw) unicode::append(forward_[b], out);
        return out;
    }

    // Inverse of map_bytes. Codepoints outside the alphabet are an error:
    // mapped strings only ever contain alphabet codepoints.
    std::string unmap_to_bytes(std::string_view mapped) const {
        std::string out;
        out.reserve(mapped.size());
        std::size_t i = 0;
        while (i < mapped.size()) {
            const std::size_t at = i;
            const char32_t cp = unicode::decode(mapped, i);
            const auto byte = reverse(cp);
            if (!byte)
                throw EncodingError("codepoint U+" + std::to_string(cp) +
                                    " at byte " + std::to_string(at) +
                                    " is not part of the byte alphabet");
            out.push_back(static_cast<char>(*byte));
        }
        return out;
    }

    static bool is_kept(std::uint8_t b) {
        return (b >= 0x21 && b <= 0x7E) || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
    }

private:
    std::array<char32_t, 256> forward_{};
    std::unordered_map<char32_t, std::uint8_t> reverse_;
};

}  // namespace subtok
