#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subtok/subtok.hpp"

namespace {

using namespace subtok;

ModelKind cli_model_kind(const std::string& name) {
    if (name == "bpe") return ModelKind::CharBpe;
    if (name == "byte-bpe") return ModelKind::ByteBpe;
    if (name == "wordpiece") return ModelKind::WordPiece;
    if (name == "unigram") return ModelKind::UnigramLm;
    if (name == "char") return ModelKind::Character;
    throw ValidationError("unknown model \"" + name + "\" (expected bpe|byte-bpe|wordpiece|unigram|char)");
}

struct RegistryArgs {
    std::string cache;
    std::string store;

    std::filesystem::path cache_root() const {
        return cache.empty() ? default_cache_root() : std::filesystem::path(cache);
    }
    std::string store_root() const { return store.empty() ? default_store_root().string() : store; }

    void attach(CLI::App& cmd) {
        cmd.add_option("--cache", cache, "Cache root (overrides SUBTOK_CACHE)");
        cmd.add_option("--store", store, "Registry root: directory or http:// URL (overrides SUBTOK_STORE)");
    }
};

Tokenizer load_from(const std::string& name_or_path, const RegistryArgs& reg) {
    return load_tokenizer(name_or_path, reg.cache_root(), reg.store_root());
}

std::optional<TruncationSpec> truncation_from_flags(unsigned max_length,
                                                    const std::string& strategy, unsigned stride) {
    if (max_length == 0) return std::nullopt;
    TruncationSpec spec;
    spec.max_length = max_length;
    spec.strategy = truncation_strategy_from_string(strategy);
    spec.stride = stride;
    return spec;
}

void print_encoding(const Encoding& enc, bool show_tokens) {
    for (std::size_t i = 0; i < enc.size(); ++i) {
        if (i) std::fputc(' ', stdout);
        std::printf("%u", enc.ids[i]);
    }
    std::fputc('\n', stdout);
    if (show_tokens) {
        for (std::size_t i = 0; i < enc.size(); ++i) {
            if (i) std::fputc(' ', stdout);
            std::fwrite(enc.tokens[i].data(), 1, enc.tokens[i].size(), stdout);
        }
        std::fputc('\n', stdout);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"subword tokenizer toolkit: train, encode, and publish tokenizer archives"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train = app.add_subcommand("train", "Train a tokenizer model from a text corpus");
    std::string train_model = "bpe", train_input, train_out, train_suffix, train_prefix = "##";
    unsigned train_vocab_size = 30000;
    std::uint64_t train_min_freq = 0;
    unsigned train_seed_size = 0, train_em_iters = 2;
    double train_shrink = 0.75;
    std::string opt_unk, opt_cls, opt_sep, opt_pad, opt_mask;
    std::vector<std::string> opt_additional;
    bool no_default_specials = false;
    bool norm_lower = false, norm_nfc = false, norm_strip = false, norm_collapse = false;
    std::string train_pretok;
    train->add_option("--model", train_model, "bpe|byte-bpe|wordpiece|unigram|char")->required();
    train->add_option("--vocab-size", train_vocab_size, "Target vocabulary size")->required();
    train->add_option("--input", train_input, "Corpus file or directory")->required();
    train->add_option("--out", train_out, "Output tokenizer directory")->required();
    train->add_option("--min-frequency", train_min_freq, "Minimum pair/char frequency");
    train->add_option("--end-of-word-suffix", train_suffix, "Char-BPE end-of-word suffix");
    train->add_option("--continuation-prefix", train_prefix, "WordPiece continuation prefix");
    train->add_option("--seed-vocab-size", train_seed_size, "Unigram seed size (0 = 25x target)");
    train->add_option("--shrink-factor", train_shrink, "Unigram prune keep ratio");
    train->add_option("--em-iterations", train_em_iters, "Unigram EM iterations per round");
    train->add_option("--unk", opt_unk, "Unknown token");
    train->add_option("--cls", opt_cls, "Classification token");
    train->add_option("--sep", opt_sep, "Separator token");
    train->add_option("--pad", opt_pad, "Padding token");
    train->add_option("--mask", opt_mask, "Mask token");
    train->add_option("--special", opt_additional, "Additional special token (repeatable)");
    train->add_flag("--no-default-specials", no_default_specials,
                    "Do not add the model kind's default special tokens");
    train->add_flag("--lowercase", norm_lower, "Normalizer: lowercase");
    train->add_flag("--nfc", norm_nfc, "Normalizer: NFC composition");
    train->add_flag("--strip-accents", norm_strip, "Normalizer: strip accents");
    train->add_flag("--collapse-whitespace", norm_collapse, "Normalizer: collapse whitespace");
    train->add_option("--pre-tokenizer", train_pretok,
                      "whitespace|whitespace_punct|byte_level (default depends on model)");

    // ---- encode ----
    auto* encode = app.add_subcommand("encode", "Encode text to token ids");
    std::string enc_model, enc_input, enc_pair;
    std::vector<std::string> enc_texts;
    unsigned enc_max_length = 0, enc_stride = 0, enc_threads = 1;
    std::string enc_strategy = "longest_first";
    bool enc_show_tokens = false;
    RegistryArgs enc_reg;
    encode->add_option("--model", enc_model, "Canonical name or tokenizer directory")->required();
    encode->add_option("--text", enc_texts, "Text to encode (repeatable; default: stdin lines)");
    encode->add_option("--pair", enc_pair, "Second sequence (pair encoding, with --text)");
    encode->add_option("--input", enc_input, "Read inputs from file, one per line");
    encode->add_option("--max-length", enc_max_length, "Enable truncation to this length");
    encode->add_option("--truncation", enc_strategy, "longest_first|only_first|only_second");
    encode->add_option("--stride", enc_stride, "Overflow window context length");
    encode->add_option("--threads", enc_threads, "Worker threads for batch input");
    encode->add_flag("--show-tokens", enc_show_tokens, "Print token strings after ids");
    enc_reg.attach(*encode);

    // ---- decode ----
    auto* decode = app.add_subcommand("decode", "Decode token ids back to text");
    std::string dec_model, dec_ids;
    bool dec_skip_special = false;
    RegistryArgs dec_reg;
    decode->add_option("--model", dec_model, "Canonical name or tokenizer directory")->required();
    decode->add_option("--ids", dec_ids, "Whitespace-separated ids (default: stdin)");
    decode->add_flag("--skip-special", dec_skip_special, "Drop special tokens before decoding");
    dec_reg.attach(*decode);

    // ---- publish ----
    auto* publish_cmd = app.add_subcommand("publish", "Publish a tokenizer directory to the registry");
    std::string pub_dir, pub_name, pub_card;
    bool pub_overwrite = false;
    RegistryArgs pub_reg;
    publish_cmd->add_option("--dir", pub_dir, "Tokenizer directory to publish")->required();
    publish_cmd->add_option("--name", pub_name, "Canonical name namespace/model")->required();
    publish_cmd->add_option("--card", pub_card, "Model card JSON file")->required();
    publish_cmd->add_flag("--overwrite", pub_overwrite, "Replace an existing archive");
    pub_reg.attach(*publish_cmd);

    // ---- pull ----
    auto* pull = app.add_subcommand("pull", "Download and cache a model by canonical name");
    std::string pull_name;
    RegistryArgs pull_reg;
    pull->add_option("name", pull_name, "Canonical name namespace/model")->required();
    pull_reg.attach(*pull);

    // ---- ls ----
    auto* ls = app.add_subcommand("ls", "List models in the registry store");
    std::string ls_filter;
    RegistryArgs ls_reg;
    ls->add_option("filter", ls_filter, "Case-insensitive substring filter");
    ls_reg.attach(*ls);

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Measure encoding throughput");
    std::string bench_model, bench_input;
    unsigned bench_threads = 4;
    RegistryArgs bench_reg;
    bench->add_option("--model", bench_model, "Canonical name or tokenizer directory")->required();
    bench->add_option("--input", bench_input, "Text corpus, one document per line")->required();
    bench->add_option("--threads", bench_threads, "Thread count for the multi-thread pass");
    bench_reg.attach(*bench);

    CLI11_PARSE(app, argc, argv);

    if (*train) {
        TrainOptions options;
        options.spec.model_kind = cli_model_kind(train_model);
        options.spec.target_vocab_size = train_vocab_size;
        options.spec.min_frequency = train_min_freq;
        options.spec.end_of_word_suffix = train_suffix;
        options.spec.continuation_prefix = train_prefix;
        options.spec.seed_vocab_size = train_seed_size;
        options.spec.shrink_factor = train_shrink;
        options.spec.em_iterations_per_round = train_em_iters;
        options.normalizer = {norm_lower, norm_nfc, norm_strip, norm_collapse};
        if (!train_pretok.empty())
            options.pre_tokenizer = pre_tokenizer_mode_from_string(train_pretok);

        SpecialTokenSet specials;
        const ModelKind kind = options.spec.model_kind;
        if (!no_default_specials) {
            if (kind == ModelKind::WordPiece) {
                specials = {"[UNK]", "[CLS]", "[SEP]", "[PAD]", "[MASK]", {}};
                options.token_template = Template("[CLS] $A [SEP]", "[CLS] $A [SEP] $B:1 [SEP]:1");
            } else if (kind != ModelKind::ByteBpe) {
                specials.unk = "[UNK]";
            }
        }
        if (!opt_unk.empty()) specials.unk = opt_unk;
        if (!opt_cls.empty()) specials.cls = opt_cls;
        if (!opt_sep.empty()) specials.sep = opt_sep;
        if (!opt_pad.empty()) specials.pad = opt_pad;
        if (!opt_mask.empty()) specials.mask = opt_mask;
        specials.additional = opt_additional;
        options.spec.special_tokens = specials;

        const Tokenizer tokenizer = train_tokenizer(train_input, options);
        tokenizer.save(train_out);
        std::printf("trained %s model: vocab %zu, saved to %s\n", train_model.c_str(),
                    tokenizer.vocab().size(), train_out.c_str());
        return 0;
    }

    if (*encode) {
        const auto truncation = truncation_from_flags(enc_max_length, enc_strategy, enc_stride);
        const Tokenizer tokenizer =
            truncation ? load_from(enc_model, enc_reg).with_truncation(truncation)
                       : load_from(enc_model, enc_reg);
        if (!enc_pair.empty()) {
            if (enc_texts.size() != 1)
                throw ValidationError("--pair requires exactly one --text");
            print_encoding(tokenizer.encode(enc_texts[0], enc_pair), enc_show_tokens);
            return 0;
        }
        std::vector<std::string> inputs = enc_texts;
        if (!enc_input.empty()) {
            auto lines = read_lines(enc_input);
            inputs.insert(inputs.end(), lines.begin(), lines.end());
        }
        if (inputs.empty()) {
            std::string line;
            while (std::getline(std::cin, line)) inputs.push_back(line);
        }
        if (enc_threads > 1) {
            for (const auto& enc : tokenizer.encode_batch(inputs, enc_threads))
                print_encoding(enc, enc_show_tokens);
        } else {
            for (const auto& text : inputs) print_encoding(tokenizer.encode(text), enc_show_tokens);
        }
        return 0;
    }

    if (*decode) {
        const Tokenizer tokenizer = load_from(dec_model, dec_reg);
        std::string payload = dec_ids;
        if (payload.empty()) {
            std::ostringstream all;
            all << std::cin.rdbuf();
            payload = all.str();
        }
        std::istringstream in(payload);
        std::vector<TokenId> ids;
        std::uint64_t id;
        while (in >> id) ids.push_back(static_cast<TokenId>(id));
        const std::string text = tokenizer.decode(ids, dec_skip_special);
        bool replaced = false;
        const std::string printable = unicode::sanitize(text, &replaced);
        std::fwrite(printable.data(), 1, printable.size(), stdout);
        std::fputc('\n', stdout);
        if (replaced)
            std::fprintf(stderr, "note: decoded bytes were not valid UTF-8; invalid sequences replaced for display\n");
        return 0;
    }

    if (*publish_cmd) {
        const ModelCard card = ModelCard::load(pub_card);
        const auto manifest =
            publish(pub_dir, pub_name, card, pub_reg.store_root(), pub_overwrite);
        std::printf("published %s (%zu files)\n", manifest.canonical_name.c_str(),
                    manifest.files.size());
        for (const auto& f : manifest.files)
            std::printf("  %-24s %8llu  %s\n", f.path.c_str(),
                        static_cast<unsigned long long>(f.size), f.digest.c_str());
        return 0;
    }

    if (*pull) {
        const auto path = resolve(pull_name, pull_reg.cache_root(), pull_reg.store_root());
        std::printf("%s\n", path.c_str());
        return 0;
    }

    if (*ls) {
        for (const auto& [name, description] : list_models(ls_reg.store_root(), ls_filter))
            std::printf("%-40s %s\n", name.c_str(), description.c_str());
        return 0;
    }

    if (*bench) {
        const Tokenizer tokenizer = load_from(bench_model, bench_reg);
        const auto docs = read_lines(bench_input);
        const auto single = run_bench(tokenizer, docs, 1);
        const auto multi = run_bench(tokenizer, docs, bench_threads);
        std::printf("documents: %zu, bytes: %llu\n", docs.size(),
                    static_cast<unsigned long long>(single.total_bytes));
        std::printf("1 thread : %8.2f MB/s  %12.0f tokens/s  (%.3f s)\n", single.mb_per_sec(),
                    single.tokens_per_sec(), single.seconds);
        std::printf("%u threads: %8.2f MB/s  %12.0f tokens/s  (%.3f s)\n", bench_threads,
                    multi.mb_per_sec(), multi.tokens_per_sec(), multi.seconds);
        std::printf("speedup  : %.2fx\n",
                    single.seconds > 0 && multi.seconds > 0 ? single.seconds / multi.seconds : 0.0);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const subtok::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
