#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "subtok/byte_alphabet.hpp"
#include "subtok/common.hpp"
#include "subtok/merge_table.hpp"
#include "subtok/model.hpp"
#include "subtok/unicode.hpp"
#include "subtok/vocab.hpp"
#include "subtok/word_counts.hpp"

namespace subtok {

// Training configuration. Unigram-only knobs are ignored by the other
// trainers; zero seed_vocab_size means the 25x-target default.
struct TrainSpec {
    std::size_t target_vocab_size = 30000;
    std::uint64_t min_frequency = 0;
    SpecialTokenSet special_tokens;
    ModelKind model_kind = ModelKind::CharBpe;

    std::string end_of_word_suffix;          // char-level BPE
    std::string continuation_prefix = "##";  // WordPiece

    std::size_t seed_vocab_size = 0;         // Unigram; 0 -> 25 * target
    double shrink_factor = 0.75;             // Unigram
    std::size_t em_iterations_per_round = 2; // Unigram
    std::size_t max_seed_piece_length = 8;   // Unigram, in codepoints
};

namespace detail {

inline std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Words as sequences of interned symbols, with the pair-count bookkeeping
// shared by the BPE and WordPiece trainers. Pair counts are maintained with
// whole-word subtract/re-add passes; correctness is defined by the
// from-scratch recount, which this must match exactly.
class PairCorpus {
public:
    PairCorpus(const WordCounts& counts, std::string_view end_of_word_suffix, bool byte_level) {
        if (counts.empty()) throw ValidationError("training corpus is empty");
        if (byte_level) {
            // The whole byte alphabet is a symbol even if unobserved, so the
            // trained model covers arbitrary input.
            const auto& alphabet = ByteAlphabet::instance();
            for (int b = 0; b < 256; ++b) intern(unicode::to_utf8(alphabet.forward(static_cast<std::uint8_t>(b))));
        }
        words_.reserve(counts.distinct());
        word_counts_.reserve(counts.distinct());
        for (const auto& [word, count] : counts.items()) {
            std::vector<std::uint32_t> syms;
            std::size_t i = 0;
            while (i < word.size()) {
                const std::size_t start = i;
                unicode::decode(word, i);
                std::string sym(word.substr(start, i - start));
                if (!end_of_word_suffix.empty() && i == word.size()) sym += end_of_word_suffix;
                if (byte_level && !sym_ids_.contains(sym))
                    throw ValidationError("byte-level training corpus contains symbol \"" + sym +
                                          "\" outside the byte alphabet; pre-tokenize with byte_level");
                syms.push_back(intern(std::move(sym)));
            }
            words_.push_back(std::move(syms));
            word_counts_.push_back(count);
        }
        alphabet_size_ = sym_strings_.size();
        init_counts();
    }

    std::uint32_t intern(std::string sym) {
        auto it = sym_ids_.find(sym);
        if (it != sym_ids_.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(sym_strings_.size());
        sym_ids_.emplace(sym, id);
        sym_strings_.push_back(std::move(sym));
        return id;
    }

    const std::string& sym(std::uint32_t id) const { return sym_strings_[id]; }
    std::size_t alphabet_size() const { return alphabet_size_; }

    // Alphabet symbols in lexicographic order (UTF-8 byte order, which for
    // single codepoints equals codepoint order).
    std::vector<std::string> sorted_alphabet() const {
        std::vector<std::string> out(sym_strings_.begin(),
                                     sym_strings_.begin() + static_cast<std::ptrdiff_t>(alphabet_size_));
        std::sort(out.begin(), out.end());
        return out;
    }

    const std::unordered_map<std::uint64_t, std::int64_t>& pair_counts() const { return pair_counts_; }

    std::int64_t pair_count(std::uint64_t key) const {
        auto it = pair_counts_.find(key);
        return it == pair_counts_.end() ? 0 : it->second;
    }

    std::int64_t symbol_total(std::uint32_t sym) const {
        return sym < symbol_totals_.size() ? symbol_totals_[sym] : 0;
    }

    struct MergeOutcome {
        std::uint32_t merged_sym = 0;
        bool occurred_word_initial = false;
        bool occurred_word_internal = false;
        // Pairs whose count grew during the merge (new adjacencies). Pairs
        // that only shrank are caught by the caller's stale-entry check.
        std::vector<std::uint64_t> grown;
    };

    // Replaces every (left,right) adjacency (leftmost-first within a word)
    // with a fresh symbol, updating pair counts, symbol totals, and the
    // pair->word index.
    MergeOutcome apply_merge(std::uint32_t left, std::uint32_t right) {
        MergeOutcome outcome;
        outcome.merged_sym = intern(sym(left) + sym(right));
        const std::uint64_t key = pack_pair(left, right);
        auto where_it = pair_words_.find(key);
        if (where_it == pair_words_.end()) return outcome;
        const std::vector<std::uint32_t> affected(where_it->second.begin(), where_it->second.end());
        std::unordered_set<std::uint64_t> grown;
        for (const std::uint32_t w : affected) {
            auto& word = words_[w];
            if (!contains_pair(word, left, right)) continue;
            const std::uint64_t wc = word_counts_[w];
            account_word(word, w, -static_cast<std::int64_t>(wc), false, nullptr);
            std::size_t out = 0;
            for (std::size_t r = 0; r < word.size();) {
                if (r + 1 < word.size() && word[r] == left && word[r + 1] == right) {
                    if (r == 0)
                        outcome.occurred_word_initial = true;
                    else
                        outcome.occurred_word_internal = true;
                    word[out++] = outcome.merged_sym;
                    r += 2;
                } else {
                    word[out++] = word[r++];
                }
            }
            word.resize(out);
            account_word(word, w, static_cast<std::int64_t>(wc), true, &grown);
        }
        pair_counts_.erase(key);
        pair_words_.erase(key);
        grown.erase(key);
        outcome.grown.assign(grown.begin(), grown.end());
        return outcome;
    }

    // Occurrence positions of each alphabet symbol, for WordPiece
    // materialization of the seed alphabet.
    void alphabet_positions(std::vector<bool>& initial, std::vector<bool>& internal) const {
        initial.assign(alphabet_size_, false);
        internal.assign(alphabet_size_, false);
        for (const auto& word : words_)
            for (std::size_t i = 0; i < word.size(); ++i)
                (i == 0 ? initial : internal)[word[i]] = true;
    }

private:
    void init_counts() {
        symbol_totals_.assign(sym_strings_.size(), 0);
        for (std::size_t w = 0; w < words_.size(); ++w)
            account_word(words_[w], static_cast<std::uint32_t>(w),
                         static_cast<std::int64_t>(word_counts_[w]), true, nullptr);
    }

    void account_word(const std::vector<std::uint32_t>& word, std::uint32_t word_idx,
                      std::int64_t delta, bool register_where,
                      std::unordered_set<std::uint64_t>* grown) {
        if (symbol_totals_.size() < sym_strings_.size()) symbol_totals_.resize(sym_strings_.size(), 0);
        for (std::size_t i = 0; i < word.size(); ++i) {
            symbol_totals_[word[i]] += delta;
            if (i + 1 < word.size()) {
                const std::uint64_t key = pack_pair(word[i], word[i + 1]);
                auto& c = pair_counts_[key];
                c += delta;
                if (c == 0) pair_counts_.erase(key);
                if (register_where) pair_words_[key].insert(word_idx);
                if (grown && delta > 0) grown->insert(key);
            }
        }
    }

    static bool contains_pair(const std::vector<std::uint32_t>& word, std::uint32_t left,
                              std::uint32_t right) {
        for (std::size_t i = 0; i + 1 < word.size(); ++i)
            if (word[i] == left && word[i + 1] == right) return true;
        return false;
    }

    std::vector<std::string> sym_strings_;
    std::unordered_map<std::string, std::uint32_t, StringHash, StringEq> sym_ids_;
    std::size_t alphabet_size_ = 0;
    std::vector<std::vector<std::uint32_t>> words_;
    std::vector<std::uint64_t> word_counts_;
    std::unordered_map<std::uint64_t, std::int64_t> pair_counts_;
    std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> pair_words_;
    std::vector<std::int64_t> symbol_totals_;
};

}  // namespace detail

struct BpeTrainResult {
    Vocabulary vocab;
    MergeTable merges;
};

// Classic BPE merge learning: repeatedly record the most frequent adjacent
// symbol pair (weighted by word count) until the vocabulary reaches
// target_vocab_size or no pair's count exceeds min_frequency. Equal counts
// break toward the lexicographically smaller (left, right).
inline BpeTrainResult train_bpe(const WordCounts& counts, const TrainSpec& spec) {
    const bool byte_level = spec.model_kind == ModelKind::ByteBpe;
    detail::PairCorpus corpus(counts, byte_level ? "" : spec.end_of_word_suffix, byte_level);

    // Specials first so their ids do not depend on the corpus, then the
    // alphabet in lexicographic order, then merge products.
    std::vector<std::string> entries = spec.special_tokens.in_role_order();
    std::unordered_set<std::string> seen(entries.begin(), entries.end());
    for (const auto& s : corpus.sorted_alphabet())
        if (seen.insert(s).second) entries.push_back(s);
    if (spec.target_vocab_size < entries.size())
        throw ValidationError("target_vocab_size " + std::to_string(spec.target_vocab_size) +
                              " is smaller than alphabet plus specials (" +
                              std::to_string(entries.size()) + ")");

    struct HeapEntry {
        std::int64_t count;
        std::uint32_t left, right;
    };
    const auto lex_less = [&corpus](const HeapEntry& a, const HeapEntry& b) {
        // priority_queue pops the "largest": higher count first, then
        // lexicographically smaller pair.
        if (a.count != b.count) return a.count < b.count;
        if (corpus.sym(a.left) != corpus.sym(b.left)) return corpus.sym(a.left) > corpus.sym(b.left);
        return corpus.sym(a.right) > corpus.sym(b.right);
    };
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, decltype(lex_less)> heap(lex_less);
    for (const auto& [key, count] : corpus.pair_counts())
        heap.push({count, static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key)});

    MergeTable merges;
    while (entries.size() < spec.target_vocab_size && !heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        const std::int64_t current = corpus.pair_count(detail::pack_pair(top.left, top.right));
        if (current != top.count) {
            if (current > 0) heap.push({current, top.left, top.right});
            continue;
        }
        if (top.count <= static_cast<std::int64_t>(spec.min_frequency)) break;

        merges.push(corpus.sym(top.left), corpus.sym(top.right));
        const auto outcome = corpus.apply_merge(top.left, top.right);
        // Distinct merges can concatenate to the same string; keep one entry.
        if (seen.insert(corpus.sym(outcome.merged_sym)).second)
            entries.push_back(corpus.sym(outcome.merged_sym));
        for (const std::uint64_t key : outcome.grown)
            heap.push({corpus.pair_count(key), static_cast<std::uint32_t>(key >> 32),
                       static_cast<std::uint32_t>(key)});
    }

    auto vocab = Vocabulary::from_tokens(std::move(entries));
    vocab.set_special_tokens(spec.special_tokens);
    return {std::move(vocab), std::move(merges)};
}

// WordPiece vocabulary construction: BPE-style growth where a pair scores
// count(pair) / (count(left) * count(right)), and selected pieces
// materialize with the continuation prefix on word-internal occurrences.
inline Vocabulary train_wordpiece(const WordCounts& counts, const TrainSpec& spec) {
    if (!spec.special_tokens.unk)
        throw ValidationError("WordPiece training requires an unk special token");
    detail::PairCorpus corpus(counts, "", false);
    const std::string& prefix = spec.continuation_prefix;

    std::vector<std::string> entries = spec.special_tokens.in_role_order();
    std::unordered_set<std::string> seen(entries.begin(), entries.end());
    const auto push_entry = [&](const std::string& token) {
        if (seen.insert(token).second) entries.push_back(token);
    };
    {
        std::vector<bool> initial, internal;
        corpus.alphabet_positions(initial, internal);
        std::vector<std::pair<std::string, std::uint32_t>> alphabet;
        for (std::uint32_t s = 0; s < corpus.alphabet_size(); ++s)
            alphabet.emplace_back(corpus.sym(s), s);
        std::sort(alphabet.begin(), alphabet.end());
        for (const auto& [text, s] : alphabet) {
            if (initial[s]) push_entry(text);
            if (internal[s]) push_entry(prefix + text);
        }
        if (spec.target_vocab_size < entries.size())
            throw ValidationError("target_vocab_size " + std::to_string(spec.target_vocab_size) +
                                  " is smaller than alphabet plus specials (" +
                                  std::to_string(entries.size()) + ")");
    }

    while (entries.size() < spec.target_vocab_size) {
        // Denominators move with every merge, so each round rescans all
        // pairs for the best likelihood gain.
        bool found = false;
        double best_score = 0.0;
        std::uint32_t best_l = 0, best_r = 0;
        for (const auto& [key, count] : corpus.pair_counts()) {
            if (count <= static_cast<std::int64_t>(spec.min_frequency)) continue;
            const auto l = static_cast<std::uint32_t>(key >> 32);
            const auto r = static_cast<std::uint32_t>(key);
            const double score = static_cast<double>(count) /
                                 (static_cast<double>(corpus.symbol_total(l)) *
                                  static_cast<double>(corpus.symbol_total(r)));
            const bool better =
                !found || score > best_score ||
                (score == best_score &&
                 (corpus.sym(l) < corpus.sym(best_l) ||
                  (corpus.sym(l) == corpus.sym(best_l) && corpus.sym(r) < corpus.sym(best_r))));
            if (better) {
                found = true;
                best_score = score;
                best_l = l;
                best_r = r;
            }
        }
        if (!found) break;
        const auto outcome = corpus.apply_merge(best_l, best_r);
        const std::string& merged = corpus.sym(outcome.merged_sym);
        if (outcome.occurred_word_initial) push_entry(merged);
        if (outcome.occurred_word_internal) push_entry(prefix + merged);
    }

    auto vocab = Vocabulary::from_tokens(std::move(entries));
    vocab.set_special_tokens(spec.special_tokens);
    return vocab;
}

// Character vocabulary: observed characters meeting min_frequency, ordered
// by first occurrence, plus the specials.
inline Vocabulary train_char(const WordCounts& counts, const TrainSpec& spec) {
    if (counts.empty()) throw ValidationError("training corpus is empty");
    std::vector<std::pair<std::string, std::uint64_t>> chars;  // first-seen order
    std::unordered_map<std::string, std::size_t, StringHash, StringEq> index;
    for (const auto& [word, count] : counts.items()) {
        std::size_t i = 0;
        while (i < word.size()) {
            const std::size_t start = i;
            unicode::decode(word, i);
            const std::string_view ch = std::string_view(word).substr(start, i - start);
            auto it = index.find(ch);
            if (it == index.end()) {
                index.emplace(std::string(ch), chars.size());
                chars.emplace_back(std::string(ch), count);
            } else {
                chars[it->second].second += count;
            }
        }
    }
    std::vector<std::string> entries = spec.special_tokens.in_role_order();
    std::unordered_set<std::string_view> seen(entries.begin(), entries.end());
    for (const auto& [ch, n] : chars)
        if (n >= spec.min_frequency && !seen.contains(ch)) entries.push_back(ch);
    auto vocab = Vocabulary::from_tokens(std::move(entries));
    vocab.set_special_tokens(spec.special_tokens);
    return vocab;
}

}  // namespace subtok
