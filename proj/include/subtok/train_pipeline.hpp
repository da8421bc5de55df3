#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subtok/bench.hpp"
#include "subtok/bpe_model.hpp"
#include "subtok/char_model.hpp"
#include "subtok/sha256.hpp"
#include "subtok/tokenizer.hpp"
#include "subtok/trainers.hpp"
#include "subtok/unigram_model.hpp"
#include "subtok/unigram_trainer.hpp"
#include "subtok/word_counts.hpp"
#include "subtok/wordpiece_model.hpp"

namespace subtok {

struct TrainOptions {
    TrainSpec spec;
    Normalizer normalizer;
    // Defaults by kind when unset: byte_level for byte-BPE,
    // whitespace_punct for WordPiece, whitespace otherwise.
    std::optional<PreTokenizerMode> pre_tokenizer;
    std::optional<Template> token_template;
    std::optional<TruncationSpec> truncation;
};

inline PreTokenizerMode default_pre_tokenizer(ModelKind kind) {
    switch (kind) {
        case ModelKind::ByteBpe: return PreTokenizerMode::ByteLevel;
        case ModelKind::WordPiece: return PreTokenizerMode::WhitespacePunct;
        default: return PreTokenizerMode::Whitespace;
    }
}

// One digest over every corpus file's bytes in processing order.
inline std::string digest_corpus(const std::filesystem::path& input) {
    namespace fs = std::filesystem;
    Sha256 hash;
    const auto feed = [&hash](const fs::path& file) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw NotFoundError("cannot open corpus file " + file.string());
        char buf[1 << 16];
        while (in.read(buf, sizeof buf) || in.gcount() > 0)
            hash.update(buf, static_cast<std::size_t>(in.gcount()));
    };
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) feed(f);
    } else {
        feed(input);
    }
    return "sha256:" + hash.finish_hex();
}

inline nlohmann::json train_spec_json(const TrainSpec& spec) {
    const auto& sp = spec.special_tokens;
    const auto role = [](const std::optional<std::string>& t) {
        return t ? nlohmann::json(*t) : nlohmann::json(nullptr);
    };
    return {{"target_vocab_size", spec.target_vocab_size},
            {"min_frequency", spec.min_frequency},
            {"model_kind", std::string(to_string(spec.model_kind))},
            {"end_of_word_suffix", spec.end_of_word_suffix},
            {"continuation_prefix", spec.continuation_prefix},
            {"seed_vocab_size", spec.seed_vocab_size},
            {"shrink_factor", spec.shrink_factor},
            {"em_iterations_per_round", spec.em_iterations_per_round},
            {"max_seed_piece_length", spec.max_seed_piece_length},
            {"special_tokens",
             {{"unk", role(sp.unk)},
              {"cls", role(sp.cls)},
              {"sep", role(sp.sep)},
              {"pad", role(sp.pad)},
              {"mask", role(sp.mask)},
              {"additional", sp.additional}}}};
}

// Full training pipeline: harvest word counts through the text pipeline,
// train the model, and assemble a ready tokenizer with the training
// provenance (spec snapshot + corpus digest) stamped into its config.
inline Tokenizer train_tokenizer(const std::filesystem::path& corpus, const TrainOptions& options) {
    const ModelKind kind = options.spec.model_kind;
    const PreTokenizerMode mode =
        options.pre_tokenizer ? *options.pre_tokenizer : default_pre_tokenizer(kind);
    const WordCounts counts = WordCounts::from_corpus(corpus, options.normalizer, mode);

    std::shared_ptr<Model> model;
    switch (kind) {
        case ModelKind::CharBpe:
        case ModelKind::ByteBpe: {
            auto [vocab, merges] = train_bpe(counts, options.spec);
            model = std::make_shared<BpeModel>(std::move(vocab), std::move(merges),
                                               kind == ModelKind::ByteBpe,
                                               kind == ModelKind::ByteBpe
                                                   ? std::string{}
                                                   : options.spec.end_of_word_suffix);
            break;
        }
        case ModelKind::WordPiece:
            model = std::make_shared<WordPieceModel>(train_wordpiece(counts, options.spec),
                                                     options.spec.continuation_prefix);
            break;
        case ModelKind::UnigramLm:
            model = std::make_shared<UnigramModel>(train_unigram(counts, options.spec),
                                                   options.spec.special_tokens);
            break;
        case ModelKind::Character:
            model = std::make_shared<CharModel>(train_char(counts, options.spec));
            break;
    }

    Tokenizer tokenizer(std::move(model), options.normalizer, mode,
                        options.token_template ? *options.token_template : Template::identity(),
                        options.truncation);
    tokenizer.set_provenance(
        {{"train_spec", train_spec_json(options.spec)}, {"corpus_digest", digest_corpus(corpus)}});
    return tokenizer;
}

}  // namespace subtok
