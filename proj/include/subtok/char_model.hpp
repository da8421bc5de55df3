#pragma once

#include <span>
#include <string>
#include <string_view>

#include "subtok/model.hpp"
#include "subtok/unicode.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

// One token per Unicode scalar; unknown characters fall back to unk.
class CharModel final : public Model {
public:
    explicit CharModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    std::string kind_name() const override { return std::string(to_string(ModelKind::Character)); }
    const Vocabulary& vocab() const override { return vocab_; }
    Vocabulary& mutable_vocab() override { return vocab_; }

    TokenSeq encode_pretoken(std::string_view text) const override {
        TokenSeq out;
        std::size_t i = 0;
        while (i < text.size()) {
            const std::size_t start = i;
            unicode::decode(text, i);
            std::string ch(text.substr(start, i - start));
            if (auto id = vocab_.token_to_id(ch)) {
                out.push(std::move(ch), *id);
                continue;
            }
            const auto unk = vocab_.unk_id();
            if (!unk)
                throw EncodingError("character \"" + ch + "\" not in vocabulary and no unk token configured");
            out.push(*vocab_.specials().unk, *unk);
        }
        return out;
    }

    std::string decode(std::span<const TokenId> ids, bool skip_special) const override {
        const auto kept = detail::filter_ids(ids, vocab_, skip_special);
        std::string out;
        for (TokenId id : kept) out += vocab_.id_to_token(id);
        return out;
    }

    nlohmann::json config_payload() const override { return nlohmann::json::object(); }

    void save_files(const std::filesystem::path& dir) const override {
        vocab_.save_txt(dir / "vocab.txt");
    }

private:
    Vocabulary vocab_;
};

inline TokenSeq char_encode(std::string_view text, const Vocabulary& vocab) {
    return CharModel(vocab).encode_pretoken(text);
}

}  // namespace subtok
