#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subtok/common.hpp"
#include "subtok/trainers.hpp"
#include "subtok/unicode.hpp"
#include "subtok/unigram_model.hpp"
#include "subtok/word_counts.hpp"

namespace subtok {

// Log-likelihood trace: one inner vector per round, one value per EM
// iteration (computed with the parameters in force at that iteration).
struct UnigramTrainStats {
    std::vector<std::vector<double>> round_log_likelihoods;
};

namespace detail {

inline double log_sum_exp(double a, double b) {
    if (std::isinf(a) && a < 0) return b;
    if (std::isinf(b) && b < 0) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

struct LatticeWord {
    std::string text;
    std::vector<std::size_t> bounds;  // codepoint boundaries, bounds[0] = 0
    std::uint64_t count = 0;
    std::size_t n() const { return bounds.size() - 1; }
};

// Piece inventory under training: parallel strings / log-probs / expected
// counts, plus a lookup index rebuilt after mutations.
class PieceSet {
public:
    void add(std::string piece, double log_prob) {
        index_.emplace(piece, pieces_.size());
        pieces_.push_back(std::move(piece));
        log_probs_.push_back(log_prob);
    }

    std::size_t size() const { return pieces_.size(); }
    const std::string& piece(std::size_t i) const { return pieces_[i]; }
    double log_prob(std::size_t i) const { return log_probs_[i]; }
    void set_log_prob(std::size_t i, double lp) { log_probs_[i] = lp; }

    std::optional<std::size_t> find(std::string_view s) const {
        auto it = index_.find(s);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t max_piece_bytes() const {
        std::size_t m = 0;
        for (const auto& p : pieces_) m = std::max(m, p.size());
        return m;
    }

    void rebuild(std::vector<std::pair<std::string, double>> kept) {
        pieces_.clear();
        log_probs_.clear();
        index_.clear();
        for (auto& [p, lp] : kept) add(std::move(p), lp);
    }

    std::vector<std::pair<std::string, double>> entries() const {
        std::vector<std::pair<std::string, double>> out;
        out.reserve(pieces_.size());
        for (std::size_t i = 0; i < pieces_.size(); ++i) out.emplace_back(pieces_[i], log_probs_[i]);
        return out;
    }

private:
    std::vector<std::string> pieces_;
    std::vector<double> log_probs_;
    std::unordered_map<std::string, std::size_t, StringHash, StringEq> index_;
};

// Best segmentation score of `text` using the piece set, optionally with one
// piece barred. Single-character coverage keeps every string segmentable.
inline double viterbi_score_excluding(const LatticeWord& w, const PieceSet& pieces,
                                      std::size_t banned, std::size_t max_bytes) {
    const std::size_t n = w.n();
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> dp(n + 1, kNegInf);
    dp[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isinf(dp[i])) continue;
        for (std::size_t j = i + 1; j <= n; ++j) {
            const std::size_t len = w.bounds[j] - w.bounds[i];
            if (len > max_bytes) break;
            const auto p = pieces.find(std::string_view(w.text).substr(w.bounds[i], len));
            if (!p || *p == banned) continue;
            dp[j] = std::max(dp[j], dp[i] + pieces.log_prob(*p));
        }
    }
    return dp[n];
}

}  // namespace detail

// Unigram-LM training: seed with frequent substrings (all single characters
// always included), refine log-probabilities by EM over each word's
// segmentation lattice, and between EM rounds prune the pieces contributing
// least to corpus likelihood until the inventory fits the target. Specials
// from the spec are not part of the table; they join the vocabulary at model
// construction, so the piece target is target_vocab_size minus the specials.
inline UnigramTable train_unigram(const WordCounts& counts, const TrainSpec& spec,
                                  UnigramTrainStats* stats = nullptr) {
    if (counts.empty()) throw ValidationError("training corpus is empty");
    if (spec.shrink_factor <= 0.0 || spec.shrink_factor >= 1.0)
        throw ValidationError("shrink_factor must be in (0, 1)");
    if (spec.em_iterations_per_round == 0)
        throw ValidationError("em_iterations_per_round must be positive");

    // Lattice words.
    std::vector<detail::LatticeWord> words;
    words.reserve(counts.distinct());
    for (const auto& [text, count] : counts.items()) {
        detail::LatticeWord w;
        w.text = text;
        w.count = count;
        w.bounds.push_back(0);
        std::size_t i = 0;
        while (i < text.size()) {
            unicode::decode(text, i);
            w.bounds.push_back(i);
        }
        words.push_back(std::move(w));
    }

    // Substring candidates: weighted occurrence counts, single characters
    // kept unconditionally.
    std::unordered_map<std::string, std::uint64_t, StringHash, StringEq> substr_counts;
    std::unordered_map<std::string, std::uint64_t, StringHash, StringEq> char_counts;
    for (const auto& w : words) {
        const std::size_t n = w.n();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j <= std::min(n, i + spec.max_seed_piece_length); ++j) {
                std::string sub = w.text.substr(w.bounds[i], w.bounds[j] - w.bounds[i]);
                if (j == i + 1) char_counts[sub] += w.count;
                substr_counts[std::move(sub)] += w.count;
            }
        }
    }

    const std::size_t n_specials = spec.special_tokens.in_role_order().size();
    const std::size_t piece_target =
        spec.target_vocab_size > n_specials ? spec.target_vocab_size - n_specials : 0;
    if (piece_target < char_counts.size())
        throw ValidationError("target_vocab_size " + std::to_string(spec.target_vocab_size) +
                              " is below the character count (" +
                              std::to_string(char_counts.size()) + " plus " +
                              std::to_string(n_specials) + " specials)");

    const std::size_t seed_size =
        spec.seed_vocab_size > 0 ? spec.seed_vocab_size : 25 * piece_target;

    // Rank multi-character candidates by count * length (in codepoints),
    // lexicographic on ties, and truncate to the seed budget.
    struct Candidate {
        std::string piece;
        std::uint64_t count;
        std::uint64_t score;
    };
    std::vector<Candidate> multi;
    for (const auto& [piece, count] : substr_counts) {
        if (char_counts.contains(piece)) continue;
        multi.push_back({piece, count, count * unicode::codepoint_count(piece)});
    }
    std::sort(multi.begin(), multi.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.piece < b.piece;
    });
    const std::size_t multi_budget = seed_size > char_counts.size() ? seed_size - char_counts.size() : 0;
    if (multi.size() > multi_budget) multi.resize(multi_budget);

    // Seed probabilities proportional to occurrence counts.
    detail::PieceSet pieces;
    {
        std::vector<std::pair<std::string, std::uint64_t>> seed;
        for (const auto& [ch, count] : char_counts) seed.emplace_back(ch, count);
        std::sort(seed.begin(), seed.end());
        for (const auto& c : multi) seed.emplace_back(c.piece, c.count);
        double total = 0.0;
        for (const auto& [p, c] : seed) total += static_cast<double>(c);
        const double log_total = std::log(total);
        for (auto& [p, c] : seed)
            pieces.add(std::move(p), std::log(static_cast<double>(c)) - log_total);
    }

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    constexpr double kCountFloor = 1e-300;
    std::vector<double> expected;

    const auto em_iteration = [&](double& log_likelihood) {
        const std::size_t max_bytes = pieces.max_piece_bytes();
        expected.assign(pieces.size(), 0.0);
        log_likelihood = 0.0;
        std::vector<double> alpha, beta;
        for (const auto& w : words) {
            const std::size_t n = w.n();
            alpha.assign(n + 1, kNegInf);
            beta.assign(n + 1, kNegInf);
            alpha[0] = 0.0;
            beta[n] = 0.0;
            const auto piece_at = [&](std::size_t i, std::size_t j) {
                const std::size_t len = w.bounds[j] - w.bounds[i];
                if (len > max_bytes) return std::optional<std::size_t>{};
                return pieces.find(std::string_view(w.text).substr(w.bounds[i], len));
            };
            for (std::size_t j = 1; j <= n; ++j)
                for (std::size_t i = j; i-- > 0;) {
                    if (w.bounds[j] - w.bounds[i] > max_bytes) break;
                    if (const auto p = piece_at(i, j))
                        alpha[j] = detail::log_sum_exp(alpha[j], alpha[i] + pieces.log_prob(*p));
                }
            for (std::size_t i = n; i-- > 0;)
                for (std::size_t j = i + 1; j <= n; ++j) {
                    if (w.bounds[j] - w.bounds[i] > max_bytes) break;
                    if (const auto p = piece_at(i, j))
                        beta[i] = detail::log_sum_exp(beta[i], pieces.log_prob(*p) + beta[j]);
                }
            const double z = alpha[n];
            log_likelihood += static_cast<double>(w.count) * z;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j <= n; ++j) {
                    if (w.bounds[j] - w.bounds[i] > max_bytes) break;
                    if (const auto p = piece_at(i, j))
                        expected[*p] += static_cast<double>(w.count) *
                                        std::exp(alpha[i] + pieces.log_prob(*p) + beta[j] - z);
                }
        }
        // M-step: plain maximum-likelihood renormalization.
        double total = 0.0;
        for (double& e : expected) {
            e = std::max(e, kCountFloor);
            total += e;
        }
        const double log_total = std::log(total);
        for (std::size_t p = 0; p < pieces.size(); ++p)
            pieces.set_log_prob(p, std::log(expected[p]) - log_total);
    };

    while (true) {
        std::vector<double> lls;
        for (std::size_t it = 0; it < spec.em_iterations_per_round; ++it) {
            double ll = 0.0;
            em_iteration(ll);
            lls.push_back(ll);
        }
        if (stats) stats->round_log_likelihoods.push_back(std::move(lls));
        if (pieces.size() <= piece_target) break;

        // Prune: a piece's contribution is its expected count times the
        // score it saves over the best segmentation of its own string
        // without it. Single characters are never pruned.
        const std::size_t keep =
            std::max(piece_target,
                     static_cast<std::size_t>(static_cast<double>(pieces.size()) * spec.shrink_factor));
        struct Scored {
            std::string piece;
            double log_prob;
            double loss;
            bool is_char;
        };
        std::vector<Scored> scored;
        scored.reserve(pieces.size());
        const std::size_t max_bytes = pieces.max_piece_bytes();
        for (std::size_t p = 0; p < pieces.size(); ++p) {
            detail::LatticeWord pw;
            pw.text = pieces.piece(p);
            pw.bounds.push_back(0);
            std::size_t i = 0;
            while (i < pw.text.size()) {
                unicode::decode(pw.text, i);
                pw.bounds.push_back(i);
            }
            const bool is_char = pw.n() == 1;
            double loss = 0.0;
            if (!is_char) {
                const double alt = detail::viterbi_score_excluding(pw, pieces, p, max_bytes);
                loss = expected[p] * (pieces.log_prob(p) - alt);
            }
            scored.push_back({pieces.piece(p), pieces.log_prob(p), loss, is_char});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.is_char != b.is_char) return a.is_char;  // chars always survive
            if (a.loss != b.loss) return a.loss > b.loss;
            return a.piece < b.piece;
        });
        std::vector<std::pair<std::string, double>> kept;
        kept.reserve(keep);
        for (std::size_t i = 0; i < scored.size() && i < keep; ++i)
            kept.emplace_back(std::move(scored[i].piece), scored[i].log_prob);
        std::sort(kept.begin(), kept.end());
        pieces.rebuild(std::move(kept));
    }

    // Final table in a canonical id order: descending probability, then
    // lexicographic.
    auto entries = pieces.entries();
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    UnigramTable table;
    table.pieces = std::move(entries);
    table.unk_penalty = UnigramTable::default_unk_penalty(table.pieces);
    return table;
}

}  // namespace subtok
