#include <doctest.h>

#include <string>
#include <vector>

#include "oracles.hpp"
#include "subtok/post_process.hpp"

using namespace subtok;

namespace {

Vocabulary bert_vocab() {
    auto vocab = Vocabulary::from_tokens({"[CLS]", "[SEP]", "[PAD]", "x1", "x2", "y1"});
    SpecialTokenSet set;
    set.cls = "[CLS]";
    set.sep = "[SEP]";
    set.pad = "[PAD]";
    vocab.set_special_tokens(set);
    return vocab;
}

TokenSeq seq(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
    TokenSeq s;
    for (const auto& t : tokens) s.push(t, *vocab.token_to_id(t));
    return s;
}

TokenSeq numbered(std::size_t n, const std::string& stem = "t") {
    TokenSeq s;
    for (std::size_t i = 0; i < n; ++i) s.push(stem + std::to_string(i), static_cast<TokenId>(i));
    return s;
}

}  // namespace

TEST_CASE("template micro-format parses and round-trips exactly") {
    const Template t("[CLS] $A [SEP]", "[CLS] $A [SEP] $B:1 [SEP]:1");
    CHECK(t.canonical_single() == "[CLS] $A [SEP]");
    CHECK(t.canonical_pair() == "[CLS] $A [SEP] $B:1 [SEP]:1");
    CHECK(t.overhead(false) == 2);
    CHECK(t.overhead(true) == 3);

    const Template reparsed(t.canonical_single(), t.canonical_pair());
    CHECK(reparsed == t);

    CHECK_THROWS_AS(Template("$A $A", ""), ParseError);
    CHECK_THROWS_AS(Template("[CLS]", ""), ParseError);          // no $A
    CHECK_THROWS_AS(Template("$A", "$A [SEP]"), ParseError);     // pair lacks $B
    CHECK_THROWS_AS(Template("a:b $A", ""), ParseError);         // ':' in special
}

TEST_CASE("apply_template expands slots with type ids and special mask") {
    const auto vocab = bert_vocab();
    const Template t("[CLS] $A [SEP]", "[CLS] $A [SEP] $B:1 [SEP]:1");

    SUBCASE("pair expansion") {
        const auto a = seq(vocab, {"x1", "x2"});
        const auto b = seq(vocab, {"y1"});
        const Encoding enc = apply_template(a, &b, t, vocab);
        CHECK(enc.tokens ==
              std::vector<std::string>{"[CLS]", "x1", "x2", "[SEP]", "y1", "[SEP]"});
        CHECK(enc.type_ids == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1});
        CHECK(enc.special_mask == std::vector<std::uint8_t>{1, 0, 0, 1, 0, 1});
        CHECK(enc.attention_mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1});
        CHECK(enc.size() == a.size() + b.size() + t.overhead(true));
    }
    SUBCASE("empty sequence still gets its specials") {
        const Encoding enc = apply_template(TokenSeq{}, nullptr, t, vocab);
        CHECK(enc.tokens == std::vector<std::string>{"[CLS]", "[SEP]"});
        CHECK(enc.type_ids == std::vector<std::uint8_t>{0, 0});
    }
    SUBCASE("identity template") {
        const Encoding enc = apply_template(seq(vocab, {"x1"}), nullptr, Template::identity(), vocab);
        CHECK(enc.tokens == std::vector<std::string>{"x1"});
        CHECK(enc.type_ids == std::vector<std::uint8_t>{0});
        CHECK(enc.special_mask == std::vector<std::uint8_t>{0});
    }
    SUBCASE("missing template special is a validation error") {
        const auto bare = Vocabulary::from_tokens({"x1"});
        CHECK_THROWS_AS(apply_template(seq(bare, {"x1"}), nullptr, Template("[CLS] $A", ""), bare),
                        ValidationError);
    }
}

TEST_CASE("truncate follows the stated strategies") {
    TruncationSpec spec;
    spec.max_length = 6;

    SUBCASE("longest_first (5,3) -> (3,3)") {
        const auto a = numbered(5, "a"), b = numbered(3, "b");
        const auto r = truncate(a, &b, spec, 0);
        CHECK(r.first.size() == 3);
        CHECK(r.second->size() == 3);
    }
    SUBCASE("longest_first (7,2) -> (4,2)") {
        const auto a = numbered(7, "a"), b = numbered(2, "b");
        const auto r = truncate(a, &b, spec, 0);
        CHECK(r.first.size() == 4);
        CHECK(r.second->size() == 2);
    }
    SUBCASE("only_second (5,3) -> (5,1)") {
        spec.strategy = TruncationStrategy::OnlySecond;
        const auto a = numbered(5, "a"), b = numbered(3, "b");
        const auto r = truncate(a, &b, spec, 0);
        CHECK(r.first.size() == 5);
        CHECK(r.second->size() == 1);
    }
    SUBCASE("under budget is untouched") {
        const auto a = numbered(2, "a"), b = numbered(2, "b");
        const auto r = truncate(a, &b, spec, 0);
        CHECK(r.first.size() == 2);
        CHECK(r.second->size() == 2);
        CHECK(r.windows.empty());
    }
    SUBCASE("only_first that cannot reach the budget raises") {
        spec.strategy = TruncationStrategy::OnlyFirst;
        const auto a = numbered(1, "a"), b = numbered(9, "b");
        CHECK_THROWS_AS(truncate(a, &b, spec, 0), TruncationError);
    }
    SUBCASE("template overhead shrinks the budget") {
        const auto a = numbered(5, "a"), b = numbered(3, "b");
        const auto r = truncate(a, &b, spec, 3);  // budget 3
        CHECK(r.first.size() + r.second->size() == 3);
    }
}

TEST_CASE("truncate matches the stepwise oracle over the full grid") {
    for (std::size_t a_len = 0; a_len <= 20; ++a_len)
        for (std::size_t b_len = 0; b_len <= 20; ++b_len)
            for (std::size_t max = 1; max <= 24; ++max)
                for (const auto* strategy : {"longest_first", "only_first", "only_second"}) {
                    TruncationSpec spec;
                    spec.max_length = max;
                    spec.strategy = truncation_strategy_from_string(strategy);
                    const auto a = numbered(a_len, "a");
                    const auto b = numbered(b_len, "b");
                    const auto expected = oracle::truncate_stepwise(a_len, b_len, max, 0, strategy);
                    if (expected.error) {
                        CHECK_THROWS_AS(truncate(a, &b, spec, 0), TruncationError);
                        continue;
                    }
                    const auto r = truncate(a, &b, spec, 0);
                    CHECK(r.first.size() == expected.a);
                    CHECK(r.second->size() == expected.b);
                }
}

TEST_CASE("overflow windows carry stride context and fit the kept budget") {
    TruncationSpec spec;
    spec.max_length = 4;
    spec.stride = 1;
    const auto a = numbered(10, "a");
    const auto r = truncate(a, nullptr, spec, 0);
    CHECK(r.first.size() == 4);
    REQUIRE_FALSE(r.windows.empty());
    // First window: one stride token of context then the removed span.
    CHECK(r.windows[0].tokens.tokens[0] == "a3");
    std::size_t covered = r.first.size();
    for (const auto& w : r.windows) {
        CHECK(w.tokens.size() <= 4);
        CHECK_FALSE(w.from_second);
        covered += w.tokens.size() - 1;  // minus the stride overlap
    }
    CHECK(covered >= a.size());
}

TEST_CASE("pad_batch fills attention masks") {
    const auto vocab = bert_vocab();
    const Template t("$A", "");
    std::vector<Encoding> batch;
    batch.push_back(apply_template(seq(vocab, {"x1", "x2", "y1"}), nullptr, t, vocab));
    batch.push_back(
        apply_template(seq(vocab, {"x1", "x2", "y1", "x1", "x2"}), nullptr, t, vocab));

    SUBCASE("pad to longest, right side") {
        const auto padded = pad_batch(batch, PadTo::longest(), "[PAD]", vocab);
        CHECK(padded[0].attention_mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
        CHECK(padded[1].attention_mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
        CHECK(padded[0].tokens[4] == "[PAD]");
    }
    SUBCASE("single encoding to longest is unchanged") {
        std::vector<Encoding> one = {batch[0]};
        const auto padded = pad_batch(one, PadTo::longest(), "[PAD]", vocab);
        CHECK(padded[0] == batch[0]);
    }
    SUBCASE("fixed length with left padding") {
        std::vector<Encoding> two = {apply_template(seq(vocab, {"x1", "x2"}), nullptr, t, vocab)};
        const auto padded = pad_batch(two, PadTo::fixed_length(4), "[PAD]", vocab, PadSide::Left);
        CHECK(padded[0].attention_mask == std::vector<std::uint8_t>{0, 0, 1, 1});
        CHECK(padded[0].tokens[0] == "[PAD]");
    }
    SUBCASE("fixed length below the longest member is an error") {
        CHECK_THROWS_AS(pad_batch(batch, PadTo::fixed_length(3), "[PAD]", vocab), ValidationError);
    }
    SUBCASE("missing pad token is an error") {
        CHECK_THROWS_AS(pad_batch(batch, PadTo::longest(), "<pad>", vocab), ValidationError);
    }
    SUBCASE("sum of attention mask equals pre-padding length") {
        const auto padded = pad_batch(batch, PadTo::fixed_length(9), "[PAD]", vocab);
        for (std::size_t i = 0; i < padded.size(); ++i) {
            std::size_t live = 0;
            for (const auto m : padded[i].attention_mask) live += m;
            CHECK(live == batch[i].size());
        }
    }
}
