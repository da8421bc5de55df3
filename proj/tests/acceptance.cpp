// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL line each. Exit code is the number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "subtok/subtok.hpp"

using namespace subtok;
namespace fs = std::filesystem;

namespace {

struct Failure {
    std::string detail;
};

class Checker {
public:
    void require(bool ok, const std::string& detail) {
        ++checks_;
        if (!ok && failures_.size() < 8) failures_.push_back({detail});
        if (!ok) ++failed_;
    }
    std::size_t checks() const { return checks_; }
    std::size_t failed() const { return failed_; }
    const std::vector<Failure>& failures() const { return failures_; }

private:
    std::size_t checks_ = 0;
    std::size_t failed_ = 0;
    std::vector<Failure> failures_;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "subtok_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Deterministic english-like corpus text.
std::string synth_line(std::mt19937_64& rng) {
    static const std::vector<std::string> syllables = {
        "ing", "er",  "an", "tion", "re",  "de",  "on",  "es", "en",  "ti",
        "st",  "le",  "co", "un",   "at",  "ar",  "ment", "al", "ous", "pre",
        "per", "sub", "to", "ken",  "izer", "lib", "rar", "y"};
    std::string line;
    const std::size_t words = 6 + rng() % 9;
    for (std::size_t w = 0; w < words; ++w) {
        if (w) line.push_back(' ');
        const std::size_t parts = 1 + rng() % 3;
        for (std::size_t p = 0; p < parts; ++p) line += syllables[rng() % syllables.size()];
    }
    return line;
}

std::vector<std::string> synth_corpus(std::size_t min_bytes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> lines;
    std::size_t total = 0;
    while (total < min_bytes) {
        lines.push_back(synth_line(rng));
        total += lines.back().size() + 1;
    }
    return lines;
}

fs::path write_corpus(const std::vector<std::string>& lines, const std::string& name) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path, std::ios::binary);
    for (const auto& line : lines) out << line << '\n';
    return path;
}

Tokenizer train_byte_bpe(const fs::path& corpus, std::size_t vocab_size) {
    TrainOptions options;
    options.spec.model_kind = ModelKind::ByteBpe;
    options.spec.target_vocab_size = vocab_size;
    return train_tokenizer(corpus, options);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- criterion 1: byte-level losslessness ---------------------------------

void criterion_losslessness(Checker& check) {
    const auto start = std::chrono::steady_clock::now();
    const auto corpus = write_corpus(synth_corpus(64 * 1024, 101), "loss_train.txt");
    const Tokenizer tok = train_byte_bpe(corpus, 320);

    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = trial == 0 ? 0 : rng() % 4097;
        std::string raw;
        raw.reserve(len);
        for (std::size_t i = 0; i < len; ++i) raw.push_back(static_cast<char>(rng() & 0xFF));
        const Encoding enc = tok.encode(raw);
        const std::string back = tok.decode(enc.ids);
        if (back != raw) {
            check.require(false, "round trip failed at trial " + std::to_string(trial) +
                                     " (len " + std::to_string(len) + ")");
            return;
        }
    }
    check.require(true, "");
    const double elapsed = seconds_since(start);
    check.require(elapsed < 10.0, "runtime " + std::to_string(elapsed) + "s exceeds 10s");
}

// ---- criterion 2: unigram viterbi vs exhaustive enumeration ----------------

// Max segmentation score by plain recursion over a per-position match table.
double enumerate_max(const std::vector<std::array<double, 4>>& match, std::size_t at,
                     std::size_t n) {
    if (at == n) return 0.0;
    double best = -1e300;
    for (std::size_t len = 1; len <= 4 && at + len <= n; ++len) {
        const double lp = match[at][len - 1];
        if (std::isnan(lp)) continue;
        const double rest = enumerate_max(match, at + len, n);
        if (rest <= -1e299) continue;
        best = std::max(best, lp + rest);
    }
    return best;
}

void criterion_viterbi(Checker& check) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(201);
    std::uniform_real_distribution<double> logp(-9.0, -0.25);

    std::size_t mismatches = 0;
    for (int table_idx = 0; table_idx < 50 && mismatches == 0; ++table_idx) {
        // Random table over {a,b}: both single chars plus up to 28 longer
        // pieces (max 4 chars), 30 pieces total at most.
        std::map<std::string, double> pieces;
        pieces["a"] = logp(rng);
        pieces["b"] = logp(rng);
        const std::size_t extra = rng() % 29;
        while (pieces.size() < 2 + extra) {
            std::string piece;
            const std::size_t len = 2 + rng() % 3;
            for (std::size_t i = 0; i < len; ++i) piece.push_back(rng() % 2 ? 'a' : 'b');
            pieces.emplace(piece, logp(rng));
        }
        UnigramTable table;
        for (const auto& [p, lp] : pieces) table.pieces.emplace_back(p, lp);
        const UnigramModel model(table);

        // Every string over {a,b} with length 1..12.
        for (std::size_t len = 1; len <= 12 && mismatches == 0; ++len) {
            for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << len); ++bits) {
                std::string text;
                for (std::size_t i = 0; i < len; ++i)
                    text.push_back((bits >> i) & 1 ? 'b' : 'a');

                std::vector<std::array<double, 4>> match(len);
                for (std::size_t i = 0; i < len; ++i)
                    for (std::size_t l = 1; l <= 4; ++l) {
                        match[i][l - 1] = std::numeric_limits<double>::quiet_NaN();
                        if (i + l > len) continue;
                        auto it = pieces.find(text.substr(i, l));
                        if (it != pieces.end()) match[i][l - 1] = it->second;
                    }

                double got_score = 0.0;
                const TokenSeq seq = model.viterbi(text, &got_score);
                const double best = enumerate_max(match, 0, len);

                bool ok = std::abs(got_score - best) <= 1e-9;
                // Tie-set membership: the returned segmentation must be a
                // valid piece cover of the text scoring within 1e-9 of max.
                std::string joined;
                double rescored = 0.0;
                for (const auto& token : seq.tokens) {
                    joined += token;
                    auto it = pieces.find(token);
                    ok = ok && it != pieces.end();
                    if (it != pieces.end()) rescored += it->second;
                }
                ok = ok && joined == text && std::abs(rescored - best) <= 1e-9;
                if (!ok) {
                    ++mismatches;
                    check.require(false, "table " + std::to_string(table_idx) + " text \"" + text +
                                             "\": score " + std::to_string(got_score) +
                                             " vs enumerated " + std::to_string(best));
                    break;
                }
            }
        }
    }
    check.require(mismatches == 0, "viterbi mismatches: " + std::to_string(mismatches));
    const double elapsed = seconds_since(start);
    check.require(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s exceeds 60s");
}

// ---- criterion 3: BPE trainer vs per-round recount oracle ------------------

void criterion_bpe_trainer(Checker& check) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(301);
    const std::string alphabet = "abcdef";
    for (int trial = 0; trial < 25; ++trial) {
        WordCounts counts;
        const std::size_t n_words = 1 + rng() % 100;
        for (std::size_t w = 0; w < n_words; ++w) {
            std::string word;
            const std::size_t len = 1 + rng() % 9;
            for (std::size_t i = 0; i < len; ++i) word.push_back(alphabet[rng() % alphabet.size()]);
            counts.add(word, 1 + rng() % 12);
        }
        TrainSpec spec;
        spec.model_kind = ModelKind::CharBpe;
        spec.special_tokens.unk = "[UNK]";
        // Alphabet is at most 6 chars + 1 special; allow up to 50 merges.
        spec.target_vocab_size = 7 + 1 + rng() % 50;

        const auto got = train_bpe(counts, spec);
        const auto expected = oracle::bpe_train_recount(counts.items(), spec.target_vocab_size,
                                                        spec.min_frequency, {"[UNK]"});
        const bool merges_equal = got.merges.merges() == expected.merges;
        check.require(merges_equal, "trial " + std::to_string(trial) + ": merge lists differ");
        if (!merges_equal) break;

        const fs::path got_path = work_dir() / "merges_got.txt";
        const fs::path want_path = work_dir() / "merges_want.txt";
        got.merges.save(got_path);
        MergeTable::from_pairs(expected.merges).save(want_path);
        check.require(slurp(got_path) == slurp(want_path),
                      "trial " + std::to_string(trial) + ": merges.txt not byte-identical");
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s exceeds 60s");
}

// ---- criterion 4: wordpiece greedy vs all-prefix reference -----------------

void criterion_wordpiece(Checker& check) {
    std::mt19937_64 rng(401);
    const std::string alphabet = "abcd";
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::set<std::string> pieces;
        const std::size_t n_pieces = 1 + rng() % 14;
        for (std::size_t p = 0; p < n_pieces; ++p) {
            std::string piece;
            const std::size_t len = 1 + rng() % 5;
            for (std::size_t i = 0; i < len; ++i) piece.push_back(alphabet[rng() % alphabet.size()]);
            if (rng() % 2) piece = "##" + piece;
            pieces.insert(piece);
        }
        std::vector<std::string> tokens = {"[UNK]"};
        tokens.insert(tokens.end(), pieces.begin(), pieces.end());
        auto vocab = Vocabulary::from_tokens(tokens);
        SpecialTokenSet set;
        set.unk = "[UNK]";
        vocab.set_special_tokens(set);

        std::string word;
        const std::size_t len = 1 + rng() % 10;
        for (std::size_t i = 0; i < len; ++i) word.push_back(alphabet[rng() % alphabet.size()]);

        const auto got = wordpiece_encode(word, vocab);
        const auto expected = oracle::wordpiece_all_prefix(word, pieces, "##", "[UNK]", 100);
        if (got.tokens != expected) {
            ++mismatches;
            check.require(false, "trial " + std::to_string(trial) + " word \"" + word + "\"");
            break;
        }
    }
    check.require(mismatches == 0, "mismatches: " + std::to_string(mismatches));
}

// ---- criterion 5: truncation exhaustive grid --------------------------------

void criterion_truncation(Checker& check) {
    std::size_t violations = 0;
    const auto numbered = [](std::size_t n) {
        TokenSeq s;
        for (std::size_t i = 0; i < n; ++i) s.push("t" + std::to_string(i), static_cast<TokenId>(i));
        return s;
    };
    for (std::size_t a_len = 0; a_len <= 20 && violations == 0; ++a_len)
        for (std::size_t b_len = 0; b_len <= 20 && violations == 0; ++b_len)
            for (std::size_t max = 1; max <= 24 && violations == 0; ++max)
                for (const std::size_t overhead : {std::size_t{0}, std::size_t{2}, std::size_t{3}})
                    for (const auto* strategy : {"longest_first", "only_first", "only_second"}) {
                        TruncationSpec spec;
                        spec.max_length = max;
                        spec.strategy = truncation_strategy_from_string(strategy);
                        const auto a = numbered(a_len);
                        const auto b = numbered(b_len);
                        const auto expected =
                            oracle::truncate_stepwise(a_len, b_len, max, overhead, strategy);
                        if (expected.error || max <= overhead) {
                            bool threw = false;
                            try {
                                (void)truncate(a, &b, spec, overhead);
                            } catch (const TruncationError&) {
                                threw = true;
                            }
                            if (!threw) ++violations;
                            continue;
                        }
                        const auto r = truncate(a, &b, spec, overhead);
                        const std::size_t budget = max - overhead;
                        const std::size_t total = r.first.size() + r.second->size();
                        const std::size_t removed = a_len + b_len - total;
                        const bool ok =
                            total <= budget && r.first.size() == expected.a &&
                            r.second->size() == expected.b &&
                            removed == (a_len + b_len > budget ? a_len + b_len - budget : 0) &&
                            (spec.strategy != TruncationStrategy::OnlyFirst ||
                             r.second->size() == b_len) &&
                            (spec.strategy != TruncationStrategy::OnlySecond ||
                             r.first.size() == a_len);
                        if (!ok) {
                            ++violations;
                            check.require(false, "a=" + std::to_string(a_len) + " b=" +
                                                     std::to_string(b_len) + " max=" +
                                                     std::to_string(max) + " overhead=" +
                                                     std::to_string(overhead) + " " + strategy);
                        }
                    }
    check.require(violations == 0, "violations: " + std::to_string(violations));
}

// ---- criterion 6: unigram EM monotonicity -----------------------------------

void criterion_em_monotonic(Checker& check) {
    std::mt19937_64 rng(601);
    for (int corpus_idx = 0; corpus_idx < 10; ++corpus_idx) {
        WordCounts counts;
        const std::size_t n_words = 8 + rng() % 24;
        for (std::size_t w = 0; w < n_words; ++w) {
            std::string word;
            const std::size_t len = 1 + rng() % 8;
            for (std::size_t i = 0; i < len; ++i) word.push_back("abcde"[rng() % 5]);
            counts.add(word, 1 + rng() % 10);
        }
        TrainSpec spec;
        spec.model_kind = ModelKind::UnigramLm;
        spec.target_vocab_size = 10;
        spec.em_iterations_per_round = 3;
        UnigramTrainStats stats;
        train_unigram(counts, spec, &stats);
        for (const auto& round : stats.round_log_likelihoods)
            for (std::size_t i = 1; i < round.size(); ++i) {
                const double tolerance = 1e-9 * std::abs(round[i - 1]);
                if (round[i] < round[i - 1] - tolerance) {
                    check.require(false, "corpus " + std::to_string(corpus_idx) +
                                             ": LL dropped from " + std::to_string(round[i - 1]) +
                                             " to " + std::to_string(round[i]));
                    return;
                }
            }
    }
    check.require(true, "");
}

// ---- criterion 7: registry round trip for all five kinds --------------------

Tokenizer train_kind(ModelKind kind, const fs::path& corpus) {
    TrainOptions options;
    options.spec.model_kind = kind;
    switch (kind) {
        case ModelKind::ByteBpe:
            options.spec.target_vocab_size = 300;
            break;
        case ModelKind::UnigramLm:
            options.spec.target_vocab_size = 48;
            options.spec.special_tokens.unk = "[UNK]";
            break;
        case ModelKind::WordPiece:
            options.spec.target_vocab_size = 120;
            options.spec.special_tokens = {"[UNK]", "[CLS]", "[SEP]", "[PAD]", "[MASK]", {}};
            options.token_template = Template("[CLS] $A [SEP]", "[CLS] $A [SEP] $B:1 [SEP]:1");
            break;
        case ModelKind::CharBpe:
            options.spec.target_vocab_size = 96;
            options.spec.special_tokens.unk = "[UNK]";
            options.spec.end_of_word_suffix = "</w>";
            break;
        case ModelKind::Character:
            options.spec.target_vocab_size = 64;
            options.spec.special_tokens.unk = "[UNK]";
            break;
    }
    return train_tokenizer(corpus, options);
}

void criterion_registry_round_trip(Checker& check) {
    const auto corpus = write_corpus(synth_corpus(48 * 1024, 701), "registry_train.txt");
    const auto eval_lines = synth_corpus(40 * 1024, 702);
    std::vector<std::string> eval(eval_lines.begin(),
                                  eval_lines.begin() + std::min<std::size_t>(1000, eval_lines.size()));
    while (eval.size() < 1000) eval.push_back(eval[eval.size() % eval_lines.size()]);

    const fs::path store = work_dir() / "store7";
    const fs::path cache = work_dir() / "cache7";
    ModelCard card;
    card.description = "acceptance model";
    card.training_data = "synthetic";
    card.caveats_and_biases = "synthetic data only";
    card.license = "apache-2.0";

    for (const ModelKind kind : {ModelKind::CharBpe, ModelKind::ByteBpe, ModelKind::WordPiece,
                                 ModelKind::UnigramLm, ModelKind::Character}) {
        const std::string kind_name(to_string(kind));
        const Tokenizer trained = train_kind(kind, corpus);
        const fs::path dir = work_dir() / ("tok7_" + kind_name);
        fs::remove_all(dir);
        trained.save(dir);

        const std::string name = "acceptance/" + std::string(kind_name == "char" ? "charm" : kind_name);
        publish(dir, name, card, store.string(), true);
        const Tokenizer loaded = load_tokenizer(name, cache, store.string());

        bool identical = true;
        for (const auto& line : eval) {
            if (loaded.encode(line).ids != trained.encode(line).ids) {
                identical = false;
                break;
            }
        }
        check.require(identical, kind_name + ": encodings differ after publish/resolve/load");

        // Re-serialization must be byte-identical.
        const fs::path again = work_dir() / ("tok7_again_" + kind_name);
        fs::remove_all(again);
        loaded.save(again);
        check.require(slurp(dir / "tokenizer_config.json") ==
                          slurp(again / "tokenizer_config.json"),
                      kind_name + ": config re-serialization differs");
    }
}

// ---- criterion 8: determinism ------------------------------------------------

void criterion_determinism(Checker& check) {
    const auto corpus = write_corpus(synth_corpus(48 * 1024, 801), "determinism_train.txt");
    for (const ModelKind kind : {ModelKind::CharBpe, ModelKind::ByteBpe, ModelKind::WordPiece,
                                 ModelKind::UnigramLm, ModelKind::Character}) {
        const std::string kind_name(to_string(kind));
        const fs::path dir_a = work_dir() / ("det_a_" + kind_name);
        const fs::path dir_b = work_dir() / ("det_b_" + kind_name);
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);
        train_kind(kind, corpus).save(dir_a);
        train_kind(kind, corpus).save(dir_b);

        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(dir_a))
            names.push_back(entry.path().filename().string());
        std::sort(names.begin(), names.end());
        for (const auto& file : names)
            check.require(slurp(dir_a / file) == slurp(dir_b / file),
                          kind_name + ": artifact " + file + " differs between runs");
    }

    // 1 MB corpus encoded with 1 vs 4 workers.
    const auto lines = synth_corpus(1 << 20, 802);
    const Tokenizer tok =
        train_byte_bpe(write_corpus(synth_corpus(32 * 1024, 803), "det_bb.txt"), 300);
    const auto one = tok.encode_batch(lines, 1);
    const auto four = tok.encode_batch(lines, 4);
    bool same = one.size() == four.size();
    for (std::size_t i = 0; same && i < one.size(); ++i) same = one[i] == four[i];
    check.require(same, "1-thread and 4-thread encodings differ");
}

// ---- criterion 9: throughput --------------------------------------------------

void criterion_throughput(Checker& check) {
    const auto lines = synth_corpus(10 * 1000 * 1000 + 500 * 1000, 901);
    const Tokenizer tok =
        train_byte_bpe(write_corpus(synth_corpus(96 * 1024, 902), "bench_train.txt"), 512);

    std::uint64_t corpus_bytes = 0;
    for (const auto& l : lines) corpus_bytes += l.size();
    check.require(corpus_bytes >= 10 * 1000 * 1000,
                  "corpus too small: " + std::to_string(corpus_bytes));

    (void)run_bench(tok, std::span<const std::string>(lines.data(), lines.size() / 20), 1);  // warmup
    const auto single = run_bench(tok, lines, 1);
    const auto multi = run_bench(tok, lines, 4);

    std::printf("         throughput: 1 thread %.2f MB/s (%.0f tokens/s), 4 threads %.2f MB/s, "
                "aggregate speedup %.2fx (%u logical cpus visible)\n",
                single.mb_per_sec(), single.tokens_per_sec(), multi.mb_per_sec(),
                single.seconds / multi.seconds, std::thread::hardware_concurrency());
    check.require(single.mb_per_sec() >= 5.0,
                  "single-thread throughput " + std::to_string(single.mb_per_sec()) +
                      " MB/s below 5 MB/s");
    check.require(multi.mb_per_sec() >= 2.0 * single.mb_per_sec(),
                  "4-thread aggregate " + std::to_string(multi.mb_per_sec()) +
                      " MB/s is below 2x single-thread " + std::to_string(single.mb_per_sec()));
}

struct CriterionSpec {
    int id;
    const char* name;
    std::function<void(Checker&)> run;
};

}  // namespace

int main() {
    const std::vector<CriterionSpec> criteria = {
        {1, "byte-level BPE losslessness (1000 random byte strings)", criterion_losslessness},
        {2, "unigram viterbi equals exhaustive enumeration", criterion_viterbi},
        {3, "BPE trainer equals per-round recount oracle", criterion_bpe_trainer},
        {4, "wordpiece greedy equals all-prefix reference", criterion_wordpiece},
        {5, "truncation exhaustive grid", criterion_truncation},
        {6, "unigram EM log-likelihood monotonicity", criterion_em_monotonic},
        {7, "registry publish/resolve/load round trip", criterion_registry_round_trip},
        {8, "training and parallel-encode determinism", criterion_determinism},
        {9, "byte-level encoding throughput", criterion_throughput},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        Checker check;
        std::string error;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(check);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed = seconds_since(start);
        const bool ok = error.empty() && check.failed() == 0;
        std::printf("[%s] criterion %d: %s (%zu checks, %.1fs)\n", ok ? "PASS" : "FAIL",
                    criterion.id, criterion.name, check.checks(), elapsed);
        if (!error.empty()) std::printf("         exception: %s\n", error.c_str());
        for (const auto& failure : check.failures())
            std::printf("         %s\n", failure.detail.c_str());
        if (!ok) ++failed;
        std::fflush(stdout);
    }
    if (failed == 0)
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    else
        std::printf("%d acceptance criteria FAILED\n", failed);
    return failed;
}
