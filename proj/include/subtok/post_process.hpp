#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subtok/common.hpp"
#include "subtok/model.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// Model-ready output for one (possibly paired) input. All parallel lists
// have equal length. attention_mask is 0 exactly on padding positions;
// special_mask is 1 exactly on template-inserted tokens. Offsets of inserted
// specials and padding are the (0,0) sentinel.
struct Encoding {
    std::vector<TokenId> ids;
    std::vector<std::string> tokens;
    std::vector<std::uint8_t> type_ids;
    std::vector<std::uint8_t> attention_mask;
    std::vector<std::uint8_t> special_mask;
    std::vector<ByteRange> offsets;
    std::vector<Encoding> overflowing;

    std::size_t size() const { return ids.size(); }

    friend bool operator==(const Encoding&, const Encoding&) = default;
};

// Special-token template. Slots are emitted in order; SeqA/SeqB expand to
// the corresponding token sequence, Special inserts a named token. The pair
// template must contain SeqA and SeqB exactly once; the single template SeqA
// exactly once.
//
// Serialized micro-format, one slot per space-separated item:
//   "[CLS] $A [SEP] $B:1 [SEP]:1"
// "$A"/"$B" are sequence slots, everything else a special token; a trailing
// ":N" sets the slot's type id (default 0). Special tokens must not contain
// whitespace or ':' so the format round-trips exactly.
class Template {
public:
    struct Slot {
        enum class Kind { SeqA, SeqB, Special } kind;
        std::string token;  // Special only
        std::uint8_t type_id = 0;
        friend bool operator==(const Slot&, const Slot&) = default;
    };

    // No inserted specials; pairs concatenate with type ids 0/1.
    Template() : Template("$A", "$A $B:1") {}

    Template(std::string_view single_spec, std::string_view pair_spec) {
        single_ = parse(single_spec, false);
        if (!pair_spec.empty()) pair_ = parse(pair_spec, true);
    }

    static Template identity() { return Template(); }

    const std::vector<Slot>& single() const { return single_; }
    const std::vector<Slot>& pair() const { return pair_; }
    bool has_pair() const { return !pair_.empty(); }

    // Number of template-inserted tokens around the sequences.
    std::size_t overhead(bool pair) const {
        const auto& slots = pair ? pair_ : single_;
        if (pair && pair_.empty())
            throw ValidationError("template has no pair form");
        std::size_t n = 0;
        for (const auto& s : slots)
            if (s.kind == Slot::Kind::Special) ++n;
        return n;
    }

    // Every named special must resolve in the vocabulary.
    void validate_against(const Vocabulary& vocab) const {
        for (const auto* slots : {&single_, &pair_})
            for (const auto& s : *slots)
                if (s.kind == Slot::Kind::Special && !vocab.token_to_id(s.token))
                    throw ValidationError("template special token \"" + s.token +
                                          "\" missing from vocabulary");
    }

    Encoding apply(const TokenSeq& a, const TokenSeq* b, const Vocabulary& vocab,
                   std::span<const ByteRange> a_offsets = {},
                   std::span<const ByteRange> b_offsets = {}) const {
        const bool pair = b != nullptr;
        const auto& slots = pair ? pair_ : single_;
        if (pair && pair_.empty())
            throw ValidationError("pair input requires a pair template");
        validate_against(vocab);

        Encoding enc;
        const std::size_t total = a.size() + (b ? b->size() : 0) + overhead(pair);
        enc.ids.reserve(total);
        enc.tokens.reserve(total);
        enc.type_ids.reserve(total);
        enc.attention_mask.reserve(total);
        enc.special_mask.reserve(total);
        enc.offsets.reserve(total);

        const auto emit_seq = [&](const TokenSeq& seq, std::span<const ByteRange> offs,
                                  std::uint8_t type_id) {
            for (std::size_t i = 0; i < seq.size(); ++i) {
                enc.ids.push_back(seq.ids[i]);
                enc.tokens.push_back(seq.tokens[i]);
                enc.type_ids.push_back(type_id);
                enc.attention_mask.push_back(1);
                enc.special_mask.push_back(0);
                enc.offsets.push_back(i < offs.size() ? offs[i] : ByteRange{});
            }
        };
        for (const auto& slot : slots) {
            switch (slot.kind) {
                case Slot::Kind::SeqA:
                    emit_seq(a, a_offsets, slot.type_id);
                    break;
                case Slot::Kind::SeqB:
                    emit_seq(*b, b_offsets, slot.type_id);
                    break;
                case Slot::Kind::Special: {
                    enc.ids.push_back(*vocab.token_to_id(slot.token));
                    enc.tokens.push_back(slot.token);
                    enc.type_ids.push_back(slot.type_id);
                    enc.attention_mask.push_back(1);
                    enc.special_mask.push_back(1);
                    enc.offsets.push_back(ByteRange{});
                    break;
                }
            }
        }
        return enc;
    }

    friend bool operator==(const Template& x, const Template& y) {
        return x.single_ == y.single_ && x.pair_ == y.pair_;
    }

private:
    static std::vector<Slot> parse(std::string_view spec, bool expect_pair) {
        std::vector<Slot> slots;
        std::size_t seq_a = 0, seq_b = 0;
        std::size_t i = 0;
        while (i < spec.size()) {
            while (i < spec.size() && spec[i] == ' ') ++i;
            if (i >= spec.size()) break;
            const std::size_t start = i;
            while (i < spec.size() && spec[i] != ' ') ++i;
            std::string_view item = spec.substr(start, i - start);

            Slot slot;
            // Optional ":N" type-id suffix.
            const auto colon = item.rfind(':');
            if (colon != std::string_view::npos && colon + 1 < item.size()) {
                bool digits = true;
                for (std::size_t k = colon + 1; k < item.size(); ++k)
                    digits = digits && item[k] >= '0' && item[k] <= '9';
                if (digits) {
                    int v = 0;
                    for (std::size_t k = colon + 1; k < item.size(); ++k)
                        v = v * 10 + (item[k] - '0');
                    if (v > 255) throw ParseError("template type id out of range in \"" +
                                                  std::string(item) + "\"");
                    slot.type_id = static_cast<std::uint8_t>(v);
                    item = item.substr(0, colon);
                }
            }
            if (item == "$A") {
                slot.kind = Slot::Kind::SeqA;
                ++seq_a;
            } else if (item == "$B") {
                slot.kind = Slot::Kind::SeqB;
                ++seq_b;
            } else {
                if (item.find(':') != std::string_view::npos)
                    throw ParseError("template special token \"" + std::string(item) +
                                     "\" must not contain ':'");
                slot.kind = Slot::Kind::Special;
                slot.token = std::string(item);
            }
            slots.push_back(std::move(slot));
        }
        if (expect_pair) {
            if (seq_a != 1 || seq_b != 1)
                throw ParseError("pair template must contain $A and $B exactly once");
        } else {
            if (seq_a != 1 || seq_b != 0)
                throw ParseError("single template must contain $A exactly once and no $B");
        }
        return slots;
    }

    static std::string serialize(const std::vector<Slot>& slots) {
        std::string out;
        for (const auto& s : slots) {
            if (!out.empty()) out.push_back(' ');
            switch (s.kind) {
                case Slot::Kind::SeqA: out += "$A"; break;
                case Slot::Kind::SeqB: out += "$B"; break;
                case Slot::Kind::Special: out += s.token; break;
            }
            if (s.type_id != 0) {
                out.push_back(':');
                out += std::to_string(s.type_id);
            }
        }
        return out;
    }

public:
    // Canonical text forms (re-serialized, independent of input spacing).
    std::string canonical_single() const { return serialize(single_); }
    std::string canonical_pair() const { return pair_.empty() ? "" : serialize(pair_); }

private:
    std::vector<Slot> single_;
    std::vector<Slot> pair_;
};

inline Encoding apply_template(const TokenSeq& a, const TokenSeq* b, const Template& t,
                               const Vocabulary& vocab) {
    return t.apply(a, b, vocab);
}

// ---- truncation ----------------------------------------------------------

enum class TruncationStrategy { LongestFirst, OnlyFirst, OnlySecond };

inline std::string_view to_string(TruncationStrategy s) {
    switch (s) {
        case TruncationStrategy::LongestFirst: return "longest_first";
        case TruncationStrategy::OnlyFirst: return "only_first";
        case TruncationStrategy::OnlySecond: return "only_second";
    }
    throw ValidationError("unknown truncation strategy");
}

inline TruncationStrategy truncation_strategy_from_string(std::string_view s) {
    if (s == "longest_first") return TruncationStrategy::LongestFirst;
    if (s == "only_first") return TruncationStrategy::OnlyFirst;
    if (s == "only_second") return TruncationStrategy::OnlySecond;
    throw ParseError("unknown truncation strategy \"" + std::string(s) + "\"");
}

struct TruncationSpec {
    std::size_t max_length = 512;
    TruncationStrategy strategy = TruncationStrategy::LongestFirst;
    std::size_t stride = 0;

    void validate() const {
        if (max_length == 0) throw ValidationError("max_length must be positive");
        if (stride >= max_length) throw ValidationError("stride must be smaller than max_length");
    }
};

struct OverflowWindow {
    bool from_second = false;  // window taken from b rather than a
    TokenSeq tokens;
};

struct TruncateResult {
    TokenSeq first;
    std::optional<TokenSeq> second;
    std::vector<OverflowWindow> windows;
};

namespace detail {

inline TokenSeq slice(const TokenSeq& seq, std::size_t begin, std::size_t end) {
    TokenSeq out;
    out.tokens.assign(seq.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                      seq.tokens.begin() + static_cast<std::ptrdiff_t>(end));
    out.ids.assign(seq.ids.begin() + static_cast<std::ptrdiff_t>(begin),
                   seq.ids.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

// Overflow windows for a sequence truncated from `full` to its first `kept`
// tokens. Window capacity equals `kept`, so a window re-paired with the
// other (already truncated) sequence and re-templated never exceeds the
// original budget. Consecutive windows overlap by `stride` context tokens.
inline void emit_windows(const TokenSeq& full, std::size_t kept, std::size_t stride,
                         bool from_second, std::vector<OverflowWindow>& out) {
    if (kept == 0 || kept >= full.size()) return;
    const std::size_t stride_eff = std::min(stride, kept - 1);
    const std::size_t step = kept - stride_eff;
    for (std::size_t chunk = kept; chunk < full.size(); chunk += step) {
        const std::size_t begin = chunk - stride_eff;
        const std::size_t end = std::min(begin + kept, full.size());
        out.push_back({from_second, slice(full, begin, end)});
    }
}

}  // namespace detail

// Shortens a (and b, when paired) so that |a| + |b| + template_overhead
// fits within spec.max_length. longest_first removes one token at a time
// from the tail of the currently longer sequence (ties remove from the
// second); only_first / only_second trim the named sequence only. Removed
// spans come back as overflow windows prefixed with `stride` retained
// tokens.
inline TruncateResult truncate(const TokenSeq& a, const TokenSeq* b, const TruncationSpec& spec,
                               std::size_t template_overhead) {
    spec.validate();
    if (spec.max_length <= template_overhead)
        throw TruncationError("max_length " + std::to_string(spec.max_length) +
                              " leaves no room after template overhead " +
                              std::to_string(template_overhead));
    const std::size_t budget = spec.max_length - template_overhead;
    const std::size_t a_len = a.size();
    const std::size_t b_len = b ? b->size() : 0;

    std::size_t keep_a = a_len, keep_b = b_len;
    if (a_len + b_len > budget) {
        switch (spec.strategy) {
            case TruncationStrategy::LongestFirst: {
                std::size_t excess = a_len + b_len - budget;
                while (excess-- > 0) {
                    if (keep_a > keep_b)
                        --keep_a;
                    else
                        --keep_b;
                }
                break;
            }
            case TruncationStrategy::OnlyFirst:
                if (b_len > budget)
                    throw TruncationError(
                        "only_first cannot reach the budget: second sequence alone has " +
                        std::to_string(b_len) + " tokens for budget " + std::to_string(budget));
                keep_a = budget - b_len;
                break;
            case TruncationStrategy::OnlySecond:
                if (a_len > budget)
                    throw TruncationError(
                        "only_second cannot reach the budget: first sequence alone has " +
                        std::to_string(a_len) + " tokens for budget " + std::to_string(budget));
                keep_b = budget - a_len;
                break;
        }
    }

    TruncateResult result;
    result.first = detail::slice(a, 0, keep_a);
    if (b) result.second = detail::slice(*b, 0, keep_b);
    detail::emit_windows(a, keep_a, spec.stride, false, result.windows);
    if (b) detail::emit_windows(*b, keep_b, spec.stride, true, result.windows);
    return result;
}

// ---- padding -------------------------------------------------------------

enum class PadSide { Right, Left };

struct PadTo {
    // Pad to the longest member unless a fixed length is given.
    std::optional<std::size_t> fixed;

    static PadTo longest() { return {}; }
    static PadTo fixed_length(std::size_t n) { return {n}; }
};

inline std::vector<Encoding> pad_batch(std::vector<Encoding> batch, PadTo pad_to,
                                       const std::string& pad_token, const Vocabulary& vocab,
                                       PadSide side = PadSide::Right) {
    const auto pad_id = vocab.token_to_id(pad_token);
    if (!pad_id) throw ValidationError("pad token \"" + pad_token + "\" missing from vocabulary");
    std::size_t longest = 0;
    for (const auto& e : batch) longest = std::max(longest, e.size());
    std::size_t target = longest;
    if (pad_to.fixed) {
        if (*pad_to.fixed < longest)
            throw ValidationError("fixed pad length " + std::to_string(*pad_to.fixed) +
                                  " is smaller than the longest member (" +
                                  std::to_string(longest) + ")");
        target = *pad_to.fixed;
    }
    for (auto& e : batch) {
        const std::size_t missing = target - e.size();
        if (missing == 0) continue;
        const auto insert_at = [&](auto& vec, auto value) {
            if (side == PadSide::Right)
                vec.insert(vec.end(), missing, value);
            else
                vec.insert(vec.begin(), missing, value);
        };
        insert_at(e.ids, *pad_id);
        insert_at(e.tokens, pad_token);
        insert_at(e.type_ids, std::uint8_t{0});
        insert_at(e.attention_mask, std::uint8_t{0});
        insert_at(e.special_mask, std::uint8_t{0});
        insert_at(e.offsets, ByteRange{});
    }
    return batch;
}

}  // namespace subtok
