#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "subtok/common.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

enum class ModelKind { CharBpe, ByteBpe, WordPiece, UnigramLm, Character };

inline std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::CharBpe: return "bpe";
        case ModelKind::ByteBpe: return "byte_bpe";
        case ModelKind::WordPiece: return "wordpiece";
        case ModelKind::UnigramLm: return "unigram";
        case ModelKind::Character: return "char";
    }
    throw ValidationError("unknown model kind");
}

inline ModelKind model_kind_from_string(std::string_view s) {
    if (s == "bpe") return ModelKind::CharBpe;
    if (s == "byte_bpe") return ModelKind::ByteBpe;
    if (s == "wordpiece") return ModelKind::WordPiece;
    if (s == "unigram") return ModelKind::UnigramLm;
    if (s == "char") return ModelKind::Character;
    throw ParseError("unknown model kind \"" + std::string(s) + "\"");
}

// Parallel token strings and ids produced by a model for one input unit.
struct TokenSeq {
    std::vector<std::string> tokens;
    std::vector<TokenId> ids;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }

    void push(std::string token, TokenId id) {
        tokens.push_back(std::move(token));
        ids.push_back(id);
    }

    void append(TokenSeq other) {
        for (std::size_t i = 0; i < other.size(); ++i)
            push(std::move(other.tokens[i]), other.ids[i]);
    }

    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Pluggable subword model. The five built-ins implement this interface; a
// custom model supplies the same encode/decode/serialize hooks and registers
// a loader under its kind name (see config.hpp).
//
// Models are immutable after construction/load; any number of concurrent
// encode calls on one instance must be safe.
class Model {
public:
    virtual ~Model() = default;

    virtual std::string kind_name() const = 0;
    virtual const Vocabulary& vocab() const = 0;
    virtual Vocabulary& mutable_vocab() = 0;

    // Encodes one pre-token (byte-level models receive the mapped text).
    virtual TokenSeq encode_pretoken(std::string_view pretoken) const = 0;

    // Batch-friendly variant appending into an existing sequence; models on
    // hot paths override this to skip the intermediate TokenSeq.
    virtual void encode_pretoken_into(std::string_view pretoken, TokenSeq& out) const {
        out.append(encode_pretoken(pretoken));
    }

    // Inverse of the model's surface conventions over a whole id sequence.
    virtual std::string decode(std::span<const TokenId> ids, bool skip_special) const = 0;

    // Model-specific entries of the config's "model" object. Implementations
    // must not emit the "kind" key; the caller adds it.
    virtual nlohmann::json config_payload() const = 0;

    // Writes side files (vocab.txt / vocab.json / merges.txt) next to the
    // config. Models whose payload is self-contained write nothing.
    virtual void save_files(const std::filesystem::path& dir) const = 0;
};

namespace detail {

// Shared decode prelude: bounds-check ids and apply skip_special.
inline std::vector<TokenId> filter_ids(std::span<const TokenId> ids, const Vocabulary& vocab,
                                       bool skip_special) {
    std::vector<TokenId> kept;
    kept.reserve(ids.size());
    for (TokenId id : ids) {
        if (id >= vocab.size())
            throw ValidationError("token id " + std::to_string(id) + " out of range (size " +
                                  std::to_string(vocab.size()) + ")");
        if (skip_special && vocab.is_special(id)) continue;
        kept.push_back(id);
    }
    return kept;
}

}  // namespace detail

}  // namespace subtok
