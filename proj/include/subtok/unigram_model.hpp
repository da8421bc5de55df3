#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subtok/model.hpp"
#include "subtok/unicode.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// Piece inventory of a unigram language model: piece strings with
// log-probabilities (id order), plus the penalty an unknown character
// contributes to a segmentation.
struct UnigramTable {
    std::vector<std::pair<std::string, double>> pieces;
    double unk_penalty = -20.0;

    static double default_unk_penalty(const std::vector<std::pair<std::string, double>>& pieces) {
        double min_lp = 0.0;
        for (const auto& [piece, lp] : pieces) min_lp = std::min(min_lp, lp);
        return min_lp - 10.0;
    }
};

// Viterbi segmentation maximizing the sum of piece log-probabilities. Ties
// break toward fewer tokens, then leftmost-longest pieces.
class UnigramModel final : public Model {
public:
    UnigramModel(UnigramTable table, const SpecialTokenSet& specials = {})
        : table_(std::move(table)) {
        if (table_.pieces.empty()) throw ValidationError("unigram table must be non-empty");
        std::vector<std::string> tokens;
        tokens.reserve(table_.pieces.size());
        for (const auto& [piece, lp] : table_.pieces) tokens.push_back(piece);
        vocab_ = Vocabulary::from_tokens(std::move(tokens));
        if (!specials.empty()) vocab_.set_special_tokens(specials);
        for (const auto& [piece, lp] : table_.pieces) {
            max_piece_bytes_ = std::max(max_piece_bytes_, piece.size());
            scores_.emplace(piece, lp);
        }
    }

    std::string kind_name() const override { return std::string(to_string(ModelKind::UnigramLm)); }
    const Vocabulary& vocab() const override { return vocab_; }
    Vocabulary& mutable_vocab() override { return vocab_; }
    const UnigramTable& table() const { return table_; }

    TokenSeq encode_pretoken(std::string_view text) const override {
        return viterbi(text, nullptr);
    }

    TokenSeq viterbi(std::string_view text, double* score_out) const {
        TokenSeq out;
        if (text.empty()) {
            if (score_out) *score_out = 0.0;
            return out;
        }
        std::vector<std::size_t> bounds;
        bounds.push_back(0);
        {
            std::size_t i = 0;
            while (i < text.size()) {
                unicode::decode(text, i);
                bounds.push_back(i);
            }
        }
        const std::size_t n = bounds.size() - 1;  // positions in codepoints

        struct Cell {
            double score = -std::numeric_limits<double>::infinity();
            std::uint32_t count = 0;
            std::uint32_t step = 0;  // codepoints consumed by the chosen piece
            bool unk = false;
        };
        std::vector<Cell> dp(n + 1);
        dp[n] = {0.0, 0, 0, false};

        for (std::size_t i = n; i-- > 0;) {
            Cell best;
            bool char_covered = false;
            for (std::size_t j = i + 1; j <= n; ++j) {
                const std::size_t len_bytes = bounds[j] - bounds[i];
                if (len_bytes > max_piece_bytes_) break;
                auto it = scores_.find(text.substr(bounds[i], len_bytes));
                if (it == scores_.end()) continue;
                if (j == i + 1) char_covered = true;
                consider(best, it->second, dp[j], static_cast<std::uint32_t>(j - i), false);
            }
            if (!char_covered)
                consider(best, table_.unk_penalty, dp[i + 1], 1, true);
            dp[i] = best;
        }

        if (score_out) *score_out = dp[0].score;
        for (std::size_t i = 0; i < n;) {
            const Cell& c = dp[i];
            const std::size_t j = i + c.step;
            std::string piece(text.substr(bounds[i], bounds[j] - bounds[i]));
            TokenId id;
            if (c.unk) {
                const auto unk = vocab_.unk_id();
                if (!unk)
                    throw EncodingError("unknown character \"" + piece +
                                        "\" and no unk token configured");
                id = *unk;
            } else {
                id = *vocab_.token_to_id(piece);
            }
            out.push(std::move(piece), id);
            i = j;
        }
        return out;
    }

    std::string decode(std::span<const TokenId> ids, bool skip_special) const override {
        const auto kept = detail::filter_ids(ids, vocab_, skip_special);
        std::string out;
        for (TokenId id : kept) out += vocab_.id_to_token(id);
        return out;
    }

    nlohmann::json config_payload() const override {
        nlohmann::json pieces = nlohmann::json::array();
        for (const auto& [piece, lp] : table_.pieces)
            pieces.push_back(nlohmann::json::array({piece, lp}));
        return {{"pieces", std::move(pieces)}, {"unk_penalty", table_.unk_penalty}};
    }

    void save_files(const std::filesystem::path&) const override {
        // Pieces live inside the config payload; no side files.
    }

private:
    static void consider(auto& best, double piece_lp, const auto& rest, std::uint32_t step,
                         bool unk) {
        if (std::isinf(rest.score) && rest.score < 0) return;
        const double score = piece_lp + rest.score;
        const std::uint32_t count = rest.count + 1;
        if (score > best.score ||
            (score == best.score &&
             (count < best.count || (count == best.count && step > best.step)))) {
            best.score = score;
            best.count = count;
            best.step = step;
            best.unk = unk;
        }
    }

    UnigramTable table_;
    Vocabulary vocab_;
    std::unordered_map<std::string, double, StringHash, StringEq> scores_;
    std::size_t max_piece_bytes_ = 0;
};

// Spec-shaped convenience: segments with the table, resolves ids against the
// caller's vocabulary (unknown pieces fall back to its unk id).
inline TokenSeq unigram_encode(std::string_view text, const UnigramTable& table,
                               const Vocabulary& vocab, double* score_out = nullptr) {
    UnigramModel model(table, vocab.specials());
    TokenSeq seq = model.viterbi(text, score_out);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        auto id = vocab.token_to_id(seq.tokens[i]);
        if (!id) {
            id = vocab.unk_id();
            if (!id)
                throw EncodingError("piece \"" + seq.tokens[i] +
                                    "\" not in vocabulary and no unk token configured");
        }
        seq.ids[i] = *id;
    }
    return seq;
}

}  // namespace subtok
