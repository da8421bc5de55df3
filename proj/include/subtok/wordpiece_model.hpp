#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subtok/model.hpp"
#include "subtok/unicode.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// Greedy longest-match-first segmentation with a continuation prefix on
// non-initial pieces. A word with any unmatchable position, or longer than
// max_chars_per_word codepoints, becomes the unknown token.
class WordPieceModel final : public Model {
public:
    explicit WordPieceModel(Vocabulary vocab, std::string continuation_prefix = "##",
                            std::size_t max_chars_per_word = 100)
        : vocab_(std::move(vocab)),
          prefix_(std::move(continuation_prefix)),
          max_chars_(max_chars_per_word) {
        if (!vocab_.unk_id())
            throw ValidationError("WordPiece requires an unk token in the vocabulary");
        if (max_chars_ == 0) throw ValidationError("max_chars_per_word must be positive");
    }

    std::string kind_name() const override { return std::string(to_string(ModelKind::WordPiece)); }
    const Vocabulary& vocab() const override { return vocab_; }
    Vocabulary& mutable_vocab() override { return vocab_; }
    const std::string& continuation_prefix() const { return prefix_; }
    std::size_t max_chars_per_word() const { return max_chars_; }

    TokenSeq encode_pretoken(std::string_view word) const override {
        TokenSeq out;
        if (word.empty()) return out;

        // Codepoint boundaries; the greedy scan works on whole characters.
        std::vector<std::size_t> bounds;
        bounds.push_back(0);
        std::size_t i = 0;
        while (i < word.size()) {
            unicode::decode(word, i);
            bounds.push_back(i);
        }
        const std::size_t n_chars = bounds.size() - 1;
        if (n_chars > max_chars_) return unk_seq();

        TokenSeq pieces;
        std::string lookup;
        std::size_t start = 0;
        while (start < n_chars) {
            std::size_t end = n_chars;
            bool found = false;
            for (; end > start; --end) {
                lookup.clear();
                if (start > 0) lookup += prefix_;
                lookup.append(word, bounds[start], bounds[end] - bounds[start]);
                if (auto id = vocab_.token_to_id(lookup)) {
                    pieces.push(lookup, *id);
                    found = true;
                    break;
                }
            }
            if (!found) return unk_seq();
            start = end;
        }
        return pieces;
    }

    // Continuation prefixes are stripped and word starts joined with spaces.
    std::string decode(std::span<const TokenId> ids, bool skip_special) const override {
        const auto kept = detail::filter_ids(ids, vocab_, skip_special);
        std::string out;
        for (TokenId id : kept) {
            const std::string& tok = vocab_.id_to_token(id);
            if (!out.empty() && tok.size() > prefix_.size() && tok.starts_with(prefix_)) {
                out.append(tok, prefix_.size(), std::string::npos);
            } else {
                if (!out.empty()) out.push_back(' ');
                out += tok;
            }
        }
        return out;
    }

    nlohmann::json config_payload() const override {
        return {{"continuation_prefix", prefix_}, {"max_chars_per_word", max_chars_}};
    }

    void save_files(const std::filesystem::path& dir) const override {
        vocab_.save_txt(dir / "vocab.txt");
    }

private:
    TokenSeq unk_seq() const {
        TokenSeq s;
        s.push(*vocab_.specials().unk, *vocab_.unk_id());
        return s;
    }

    Vocabulary vocab_;
    std::string prefix_;
    std::size_t max_chars_;
};

inline TokenSeq wordpiece_encode(std::string_view word, const Vocabulary& vocab,
                                 std::string continuation_prefix = "##",
                                 std::size_t max_chars_per_word = 100) {
    return WordPieceModel(vocab, std::move(continuation_prefix), max_chars_per_word)
        .encode_pretoken(word);
}

}  // namespace subtok
