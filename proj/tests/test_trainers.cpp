#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "subtok/bpe_model.hpp"
#include "subtok/char_model.hpp"
#include "subtok/trainers.hpp"
#include "subtok/wordpiece_model.hpp"

using namespace subtok;

namespace {

WordCounts make_counts(const std::vector<std::pair<std::string, std::uint64_t>>& items) {
    WordCounts counts;
    for (const auto& [word, count] : items) counts.add(word, count);
    return counts;
}

TrainSpec bpe_spec(std::size_t target) {
    TrainSpec spec;
    spec.model_kind = ModelKind::CharBpe;
    spec.target_vocab_size = target;
    return spec;
}

}  // namespace

TEST_CASE("train_bpe picks the most frequent pair with lexicographic ties") {
    const auto counts = make_counts({{"low", 5}, {"lower", 2}, {"newest", 6}, {"widest", 3}});
    // ("e","s") and ("s","t") both weigh 9; the tie breaks to ("e","s").
    const auto result = train_bpe(counts, bpe_spec(100));
    REQUIRE_FALSE(result.merges.empty());
    CHECK(result.merges.merges()[0] == std::pair<std::string, std::string>{"e", "s"});
}

TEST_CASE("train_bpe trivial corpora") {
    SUBCASE("single repeated pair") {
        const auto counts = make_counts({{"aa", 1}});
        // alphabet {a} -> target alphabet+1 yields exactly one merge
        const auto result = train_bpe(counts, bpe_spec(2));
        REQUIRE(result.merges.size() == 1);
        CHECK(result.merges.merges()[0] == std::pair<std::string, std::string>{"a", "a"});
    }
    SUBCASE("length-1 words produce no merges") {
        const auto counts = make_counts({{"a", 3}, {"b", 2}});
        const auto result = train_bpe(counts, bpe_spec(50));
        CHECK(result.merges.empty());
    }
    SUBCASE("target below alphabet is a validation error") {
        const auto counts = make_counts({{"abcdef", 1}});
        CHECK_THROWS_AS(train_bpe(counts, bpe_spec(3)), ValidationError);
    }
    SUBCASE("empty corpus is a validation error") {
        CHECK_THROWS_AS(train_bpe(WordCounts{}, bpe_spec(10)), ValidationError);
    }
}

TEST_CASE("train_bpe matches the per-round recount oracle on random corpora") {
    std::mt19937 rng(53);
    const std::string alphabet = "abcde";
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::pair<std::string, std::uint64_t>> items;
        const std::size_t n_words = 1 + rng() % 60;
        for (std::size_t w = 0; w < n_words; ++w) {
            std::string word;
            const std::size_t len = 1 + rng() % 8;
            for (std::size_t i = 0; i < len; ++i) word.push_back(alphabet[rng() % alphabet.size()]);
            items.emplace_back(word, 1 + rng() % 9);
        }
        const auto counts = make_counts(items);

        TrainSpec spec = bpe_spec(0);
        spec.special_tokens.unk = "[UNK]";
        // Leave room for up to ~30 merges above specials+alphabet.
        spec.target_vocab_size = 1 + 5 + 1 + rng() % 30;

        const auto got = train_bpe(counts, spec);
        const auto expected = oracle::bpe_train_recount(counts.items(), spec.target_vocab_size,
                                                        spec.min_frequency, {"[UNK]"});
        CHECK(got.merges.merges() == expected.merges);
        CHECK(got.vocab.entries() == expected.vocab);
    }
}

TEST_CASE("train_bpe honors min_frequency strictly") {
    const auto counts = make_counts({{"ab", 2}, {"cd", 3}});
    TrainSpec spec = bpe_spec(20);
    spec.min_frequency = 2;
    // (a,b) weighs 2 which does not exceed 2; (c,d) weighs 3 and does.
    const auto result = train_bpe(counts, spec);
    REQUIRE(result.merges.size() == 1);
    CHECK(result.merges.merges()[0] == std::pair<std::string, std::string>{"c", "d"});
}

TEST_CASE("trained bpe encodes training words into in-vocabulary tokens") {
    const auto counts =
        make_counts({{"rug", 10}, {"pug", 5}, {"pun", 12}, {"bun", 4}, {"rugs", 5}});
    TrainSpec spec = bpe_spec(18);
    const auto result = train_bpe(counts, spec);
    const BpeModel model(result.vocab, result.merges, false);
    for (const auto& [word, count] : counts.items())
        for (const auto& token : model.encode_pretoken(word).tokens)
            CHECK(result.vocab.token_to_id(token).has_value());
}

TEST_CASE("byte-level training seeds the full byte alphabet") {
    WordCounts counts;
    for (const auto& pt : pre_tokenize("hi there", PreTokenizerMode::ByteLevel))
        counts.add(pt.text);
    TrainSpec spec;
    spec.model_kind = ModelKind::ByteBpe;
    spec.target_vocab_size = 260;
    const auto result = train_bpe(counts, spec);
    CHECK(result.vocab.size() >= 256);
    const BpeModel model(result.vocab, result.merges, true);
    // Bytes never seen in training still encode (and round trip).
    std::string exotic;
    for (int b : {0x00, 0xFF, 0x80, 0x20, 0x7A}) exotic.push_back(static_cast<char>(b));
    const auto mapped = ByteAlphabet::instance().map_bytes(exotic);
    const auto seq = model.encode_pretoken(mapped);
    REQUIRE_FALSE(seq.ids.empty());
    CHECK(model.decode(seq.ids, false) == exotic);
}

TEST_CASE("train_wordpiece scores pairs by likelihood gain") {
    // counts={"aab":4}: (a,a) scores 4/(8*8), (a,b) scores 4/(8*4); the
    // winner materializes word-internally as ##ab.
    const auto counts = make_counts({{"aab", 4}});
    TrainSpec spec;
    spec.model_kind = ModelKind::WordPiece;
    spec.special_tokens.unk = "[UNK]";
    spec.target_vocab_size = 5;
    const auto vocab = train_wordpiece(counts, spec);
    // [UNK], a, ##a, ##b, then the first selection ##ab
    CHECK(vocab.token_to_id("##ab").has_value());
    CHECK_FALSE(vocab.token_to_id("ab").has_value());
    CHECK_FALSE(vocab.token_to_id("##aa").has_value());
}

TEST_CASE("train_wordpiece single-candidate and alphabet-only targets") {
    TrainSpec spec;
    spec.model_kind = ModelKind::WordPiece;
    spec.special_tokens.unk = "[UNK]";
    SUBCASE("single-word corpus gains its only candidate piece") {
        spec.target_vocab_size = 4;
        const auto vocab = train_wordpiece(make_counts({{"ab", 1}}), spec);
        CHECK(vocab.token_to_id("ab").has_value());
    }
    SUBCASE("alphabet-only target adds no pieces") {
        spec.target_vocab_size = 3;  // [UNK], a, ##b
        const auto vocab = train_wordpiece(make_counts({{"ab", 1}}), spec);
        CHECK(vocab.size() == 3);
        CHECK(vocab.token_to_id("a").has_value());
        CHECK(vocab.token_to_id("##b").has_value());
        CHECK_FALSE(vocab.token_to_id("ab").has_value());
    }
    SUBCASE("unk is required") {
        TrainSpec no_unk;
        no_unk.model_kind = ModelKind::WordPiece;
        no_unk.target_vocab_size = 10;
        CHECK_THROWS_AS(train_wordpiece(make_counts({{"ab", 1}}), no_unk), ValidationError);
    }
}

TEST_CASE("trained wordpiece greedily encodes training words in vocabulary") {
    const auto counts =
        make_counts({{"jumping", 8}, {"jumps", 6}, {"jump", 10}, {"pump", 3}, {"bumps", 2}});
    TrainSpec spec;
    spec.model_kind = ModelKind::WordPiece;
    spec.special_tokens.unk = "[UNK]";
    spec.target_vocab_size = 40;
    const auto vocab = train_wordpiece(counts, spec);
    const WordPieceModel model(vocab);
    for (const auto& [word, count] : counts.items()) {
        const auto seq = model.encode_pretoken(word);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            CHECK(seq.tokens[i] != "[UNK]");
            CHECK(vocab.token_to_id(seq.tokens[i]).has_value());
        }
    }
}

TEST_CASE("train_char collects characters by first occurrence") {
    TrainSpec spec;
    spec.model_kind = ModelKind::Character;
    spec.special_tokens.unk = "[UNK]";
    SUBCASE("all observed characters") {
        spec.target_vocab_size = 10;
        const auto vocab = train_char(make_counts({{"ab", 1}}), spec);
        CHECK(vocab.token_to_id("[UNK]") == TokenId{0});
        CHECK(vocab.token_to_id("a") == TokenId{1});
        CHECK(vocab.token_to_id("b") == TokenId{2});
    }
    SUBCASE("min_frequency filters rare characters") {
        spec.min_frequency = 2;
        const auto vocab = train_char(make_counts({{"ab", 1}, {"a", 1}}), spec);
        CHECK(vocab.token_to_id("a").has_value());
        CHECK_FALSE(vocab.token_to_id("b").has_value());
    }
    SUBCASE("single-character corpus") {
        spec.min_frequency = 0;
        const auto vocab = train_char(make_counts({{"a", 1}}), spec);
        CHECK(vocab.token_to_id("a").has_value());
    }
}

TEST_CASE("word counts run the text pipeline over corpora deterministically") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "subtok_corpus_dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream b(dir / "b.txt", std::ios::binary);
        b << "Beta gamma\n";
        std::ofstream a(dir / "a.txt", std::ios::binary);
        a << "Alpha beta\n";
    }
    const Normalizer lower{.lowercase = true};
    const auto counts = WordCounts::from_corpus(dir, lower, PreTokenizerMode::Whitespace);
    // Files in lexicographic order: a.txt first, so "alpha" is seen first.
    REQUIRE(counts.distinct() == 3);
    CHECK(counts.items()[0].first == "alpha");
    CHECK(counts.items()[1].first == "beta");
    CHECK(counts.count("beta") == 2);  // normalized across both files
    CHECK(counts.count("Beta") == 0);
}

TEST_CASE("training is deterministic across runs") {
    std::mt19937 rng(59);
    std::vector<std::pair<std::string, std::uint64_t>> items;
    for (int w = 0; w < 40; ++w) {
        std::string word;
        const std::size_t len = 1 + rng() % 6;
        for (std::size_t i = 0; i < len; ++i) word.push_back("abcdef"[rng() % 6]);
        items.emplace_back(word, 1 + rng() % 5);
    }
    TrainSpec spec = bpe_spec(30);
    spec.special_tokens.unk = "[UNK]";
    const auto first = train_bpe(make_counts(items), spec);
    const auto second = train_bpe(make_counts(items), spec);
    CHECK(first.vocab.entries() == second.vocab.entries());
    CHECK(first.merges.merges() == second.merges.merges());

    TrainSpec wp_spec = spec;
    wp_spec.model_kind = ModelKind::WordPiece;
    CHECK(train_wordpiece(make_counts(items), wp_spec).entries() ==
          train_wordpiece(make_counts(items), wp_spec).entries());
}
