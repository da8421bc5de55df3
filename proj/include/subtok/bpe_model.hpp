#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "subtok/byte_alphabet.hpp"
#include "subtok/merge_table.hpp"
#include "subtok/model.hpp"
#include "subtok/unicode.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// Byte-pair encoding over either raw codepoints (character-level, optional
// end-of-word suffix) or the byte alphabet (byte-level). Encoding replays
// merges strictly by learned rank: at each step the lowest-ranked adjacent
// pair present is merged, all occurrences left to right.
class BpeModel final : public Model {
public:
    BpeModel(Vocabulary vocab, MergeTable merges, bool byte_level,
             std::string end_of_word_suffix = "")
        : vocab_(std::move(vocab)),
          merges_(std::move(merges)),
          suffix_(std::move(end_of_word_suffix)),
          byte_level_(byte_level) {
        if (byte_level_ && !suffix_.empty())
            throw ValidationError("byte-level BPE does not use an end-of-word suffix");
        merges_.validate_closure(suffix_);
        build_pair_map();
    }

    std::string kind_name() const override {
        return std::string(to_string(byte_level_ ? ModelKind::ByteBpe : ModelKind::CharBpe));
    }

    const Vocabulary& vocab() const override { return vocab_; }
    Vocabulary& mutable_vocab() override { return vocab_; }
    const MergeTable& merges() const { return merges_; }
    const std::string& end_of_word_suffix() const { return suffix_; }
    bool byte_level() const { return byte_level_; }

    TokenSeq encode_pretoken(std::string_view pretoken) const override {
        TokenSeq out;
        encode_pretoken_into(pretoken, out);
        return out;
    }

    void encode_pretoken_into(std::string_view pretoken, TokenSeq& out) const override {
        if (pretoken.empty()) return;
        // Scratch reuse keeps the hot loop allocation-free.
        thread_local std::vector<TokenId> scratch;
        scratch.clear();
        initial_symbols(pretoken, scratch);
        merge_loop(scratch);
        for (const TokenId id : scratch) {
            out.ids.push_back(id);
            out.tokens.push_back(vocab_.id_to_token(id));
        }
    }

    std::string decode(std::span<const TokenId> ids, bool skip_special) const override {
        const auto kept = detail::filter_ids(ids, vocab_, skip_special);
        std::string out;
        if (byte_level_) {
            // Base tokens are mapped-codepoint strings and unmap to raw
            // bytes; user-added tokens pass through verbatim.
            const auto& alphabet = ByteAlphabet::instance();
            for (TokenId id : kept) {
                const std::string& tok = vocab_.id_to_token(id);
                if (is_fully_mapped(tok))
                    out += alphabet.unmap_to_bytes(tok);
                else
                    out += tok;
            }
            return out;
        }
        if (suffix_.empty()) {
            for (TokenId id : kept) out += vocab_.id_to_token(id);
            return out;
        }
        for (TokenId id : kept) {
            const std::string& tok = vocab_.id_to_token(id);
            if (tok.size() > suffix_.size() && tok.ends_with(suffix_)) {
                out.append(tok, 0, tok.size() - suffix_.size());
                out.push_back(' ');
            } else {
                out += tok;
            }
        }
        if (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    nlohmann::json config_payload() const override {
        nlohmann::json j = nlohmann::json::object();
        if (!suffix_.empty()) j["end_of_word_suffix"] = suffix_;
        return j;
    }

    void save_files(const std::filesystem::path& dir) const override {
        vocab_.save_json(dir / "vocab.json");
        merges_.save(dir / "merges.txt");
    }

private:
    static bool is_fully_mapped(std::string_view token) {
        const auto& alphabet = ByteAlphabet::instance();
        std::size_t i = 0;
        char32_t cp;
        while (i < token.size()) {
            if (!unicode::try_decode(token, i, cp) || !alphabet.reverse(cp)) return false;
        }
        return true;
    }

    void initial_symbols(std::string_view pretoken, std::vector<TokenId>& ids) const {
        std::size_t i = 0;
        char32_t cp;
        if (byte_level_) {
            while (i < pretoken.size()) {
                cp = unicode::decode(pretoken, i);
                const TokenId id =
                    cp < symbol_ids_.size() ? symbol_ids_[cp] : kNoSymbol;
                if (id == kNoSymbol)
                    throw EncodingError("byte-alphabet symbol \"" + unicode::to_utf8(cp) +
                                        "\" missing from vocabulary");
                ids.push_back(id);
            }
            return;
        }
        std::vector<std::string_view> symbols;
        while (i < pretoken.size()) {
            const std::size_t start = i;
            cp = unicode::decode(pretoken, i);
            symbols.push_back(pretoken.substr(start, i - start));
        }
        std::string last;
        for (std::size_t k = 0; k < symbols.size(); ++k) {
            std::string_view sym = symbols[k];
            if (!suffix_.empty() && k + 1 == symbols.size()) {
                last = std::string(sym) + suffix_;
                sym = last;
            }
            auto id = vocab_.token_to_id(sym);
            if (!id) {
                id = vocab_.unk_id();
                if (!id)
                    throw EncodingError("symbol \"" + std::string(sym) +
                                        "\" not in vocabulary and no unk token configured");
            }
            ids.push_back(*id);
        }
    }

    void merge_loop(std::vector<TokenId>& ids) const {
        while (ids.size() > 1) {
            std::uint32_t best_rank = kNoRank;
            TokenId best_merged = 0;
            TokenId best_left = 0, best_right = 0;
            for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
                const RankedMerge* hit = pair_map_.find(pack(ids[k], ids[k + 1]));
                if (hit && hit->rank < best_rank) {
                    best_rank = hit->rank;
                    best_merged = hit->merged;
                    best_left = ids[k];
                    best_right = ids[k + 1];
                }
            }
            if (best_rank == kNoRank) return;
            std::size_t w = 0;
            for (std::size_t r = 0; r < ids.size();) {
                if (r + 1 < ids.size() && ids[r] == best_left && ids[r + 1] == best_right) {
                    ids[w++] = best_merged;
                    r += 2;
                } else {
                    ids[w++] = ids[r++];
                }
            }
            ids.resize(w);
        }
    }

    struct RankedMerge {
        std::uint32_t rank;
        TokenId merged;
    };

    // Open-addressing map keyed by packed id pairs; small enough to stay in
    // cache, which is what the encode hot loop needs.
    class FlatPairMap {
    public:
        void build(std::size_t entries) {
            std::size_t capacity = 16;
            while (capacity < entries * 4) capacity <<= 1;
            mask_ = capacity - 1;
            keys_.assign(capacity, kEmpty);
            values_.assign(capacity, RankedMerge{});
        }

        void insert(std::uint64_t key, RankedMerge value) {
            std::size_t slot = hash(key) & mask_;
            while (keys_[slot] != kEmpty && keys_[slot] != key) slot = (slot + 1) & mask_;
            keys_[slot] = key;
            values_[slot] = value;
        }

        const RankedMerge* find(std::uint64_t key) const {
            std::size_t slot = hash(key) & mask_;
            while (true) {
                if (keys_[slot] == key) return &values_[slot];
                if (keys_[slot] == kEmpty) return nullptr;
                slot = (slot + 1) & mask_;
            }
        }

    private:
        static std::uint64_t hash(std::uint64_t x) {
            x ^= x >> 33;
            x *= 0xff51afd7ed558ccdULL;
            x ^= x >> 33;
            return x;
        }

        static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};
        std::vector<std::uint64_t> keys_;
        std::vector<RankedMerge> values_;
        std::size_t mask_ = 0;
    };

    void build_pair_map() {
        pair_map_.build(merges_.size());
        for (std::uint32_t r = 0; r < merges_.size(); ++r) {
            const auto& [left, right] = merges_.merges()[r];
            const auto lid = vocab_.token_to_id(left);
            const auto rid = vocab_.token_to_id(right);
            const auto mid = vocab_.token_to_id(left + right);
            if (!lid || !rid || !mid)
                throw ValidationError("merge rank " + std::to_string(r) + " (\"" + left + " " +
                                      right + "\") references tokens missing from the vocabulary");
            pair_map_.insert(pack(*lid, *rid), RankedMerge{r, *mid});
        }
        if (byte_level_) {
            // Single-codepoint vocab entries get a direct-indexed lookup;
            // the byte alphabet tops out at codepoint 256+67.
            symbol_ids_.assign(0x400, kNoSymbol);
            for (TokenId id = 0; id < vocab_.size(); ++id) {
                const std::string& tok = vocab_.id_to_token(id);
                std::size_t i = 0;
                char32_t cp;
                if (unicode::try_decode(tok, i, cp) && i == tok.size() && cp < symbol_ids_.size())
                    symbol_ids_[cp] = id;
            }
        }
    }

    static std::uint64_t pack(TokenId a, TokenId b) {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    static constexpr std::uint32_t kNoRank = std::numeric_limits<std::uint32_t>::max();
    static constexpr TokenId kNoSymbol = std::numeric_limits<TokenId>::max();

    Vocabulary vocab_;
    MergeTable merges_;
    std::string suffix_;
    bool byte_level_;
    FlatPairMap pair_map_;
    std::vector<TokenId> symbol_ids_;
};

// Spec-shaped conveniences; they build a transient model, so batch callers
// should construct a BpeModel once instead.
inline TokenSeq bpe_encode(std::string_view pretoken, const MergeTable& merges,
                           const Vocabulary& vocab, std::string end_of_word_suffix = "") {
    return BpeModel(vocab, merges, false, std::move(end_of_word_suffix))
        .encode_pretoken(pretoken);
}

inline TokenSeq byte_bpe_encode(std::string_view mapped_pretoken, const MergeTable& merges,
                                const Vocabulary& vocab) {
    return BpeModel(vocab, merges, true).encode_pretoken(mapped_pretoken);
}

}  // namespace subtok
