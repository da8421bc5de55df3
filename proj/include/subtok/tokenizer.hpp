#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subtok/bpe_model.hpp"
#include "subtok/char_model.hpp"
#include "subtok/common.hpp"
#include "subtok/model.hpp"
#include "subtok/normalizer.hpp"
#include "subtok/post_process.hpp"
#include "subtok/pre_tokenizer.hpp"
#include "subtok/unigram_model.hpp"
#include "subtok/vocab.hpp"
#include "subtok/wordpiece_model.hpp"

namespace subtok {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kConfigFileName = "tokenizer_config.json";

// Loader hook: builds a model from its config payload and side files. The
// vocabulary it constructs must already contain `added` and have `specials`
// applied. Registering a loader under a new kind name plugs a custom model
// into load/save/registry dispatch.
using ModelLoader = std::function<std::unique_ptr<Model>(
    const nlohmann::json& payload, const std::filesystem::path& dir,
    const SpecialTokenSet& specials, const std::vector<std::string>& added)>;

namespace detail {

inline std::unordered_map<std::string, ModelLoader>& model_loaders();

inline Vocabulary load_vocab_with_added(std::vector<std::string> all_tokens,
                                        const std::vector<std::string>& added,
                                        const SpecialTokenSet& specials) {
    if (added.size() > all_tokens.size())
        throw ParseError("added_tokens longer than the stored vocabulary");
    const std::size_t base = all_tokens.size() - added.size();
    for (std::size_t i = 0; i < added.size(); ++i)
        if (all_tokens[base + i] != added[i])
            throw ParseError("added_tokens do not match the vocabulary tail: expected \"" +
                             added[i] + "\", found \"" + all_tokens[base + i] + "\"");
    all_tokens.resize(base);
    auto vocab = Vocabulary::from_tokens(std::move(all_tokens));
    vocab.add_tokens(std::span<const std::string>(added));
    vocab.set_special_tokens(specials);
    return vocab;
}

}  // namespace detail

// The full pipeline: normalization, pre-tokenization, subword model, and
// special-token post-processing, assembled either by hand or from a saved
// config. Immutable after construction; encode calls are freely concurrent.
class Tokenizer {
public:
    explicit Tokenizer(std::shared_ptr<Model> model, Normalizer normalizer = {},
                       PreTokenizerMode mode = PreTokenizerMode::Whitespace,
                       Template templ = Template::identity(),
                       std::optional<TruncationSpec> truncation = std::nullopt)
        : model_(std::move(model)),
          normalizer_(normalizer),
          pre_tokenizer_mode_(mode),
          template_(std::move(templ)),
          truncation_(truncation) {
        if (!model_) throw ValidationError("tokenizer requires a model");
        template_.validate_against(model_->vocab());
        if (truncation_) truncation_->validate();
        rebuild_atomic_index();
    }

    const Model& model() const { return *model_; }
    const Vocabulary& vocab() const { return model_->vocab(); }
    const Normalizer& normalizer() const { return normalizer_; }
    PreTokenizerMode pre_tokenizer_mode() const { return pre_tokenizer_mode_; }
    const Template& token_template() const { return template_; }
    const std::optional<TruncationSpec>& truncation() const { return truncation_; }
    const nlohmann::json& provenance() const { return provenance_; }
    void set_provenance(nlohmann::json p) { provenance_ = std::move(p); }

    // Copy with a different default truncation; the model is shared.
    Tokenizer with_truncation(std::optional<TruncationSpec> truncation) const {
        Tokenizer copy(*this);
        if (truncation) truncation->validate();
        copy.truncation_ = truncation;
        return copy;
    }

    // ---- encode / decode -------------------------------------------------

    Encoding encode(std::string_view text) const { return encode_impl(text, std::nullopt); }

    Encoding encode(std::string_view text, std::string_view pair) const {
        return encode_impl(text, pair);
    }

    Encoding encode(std::string_view text, std::optional<std::string_view> pair,
                    const std::optional<TruncationSpec>& truncation_override) const {
        return encode_impl(text, pair, &truncation_override);
    }

    // Sequence-level view without template/truncation, exposed for training
    // pipelines and tests.
    TokenSeq tokenize(std::string_view text) const {
        auto [seq, offsets] = run_model(text);
        return std::move(seq);
    }

    std::string decode(std::span<const TokenId> ids, bool skip_special = false) const {
        return model_->decode(ids, skip_special);
    }

    // Order-preserving parallel batch encode: results are identical for any
    // worker count.
    std::vector<Encoding> encode_batch(std::span<const std::string> texts,
                                       std::size_t n_threads = 1) const {
        std::vector<Encoding> out(texts.size());
        if (texts.empty()) return out;
        n_threads = std::clamp<std::size_t>(n_threads, 1, texts.size());
        if (n_threads == 1) {
            for (std::size_t i = 0; i < texts.size(); ++i) out[i] = encode(texts[i]);
            return out;
        }
        std::vector<std::thread> workers;
        workers.reserve(n_threads);
        std::exception_ptr error;
        std::mutex error_mu;
        const std::size_t chunk = (texts.size() + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(begin + chunk, texts.size());
            if (begin >= end) break;
            workers.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) out[i] = encode(texts[i]);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        if (error) std::rethrow_exception(error);
        return out;
    }

    // ---- persistence -------------------------------------------------------

    nlohmann::json config_json() const {
        nlohmann::json j;
        j["format_version"] = kFormatVersion;
        nlohmann::json model = model_->config_payload();
        model["kind"] = model_->kind_name();
        j["model"] = std::move(model);
        j["normalizer"] = {{"lowercase", normalizer_.lowercase},
                           {"unicode_nfc", normalizer_.unicode_nfc},
                           {"strip_accents", normalizer_.strip_accents},
                           {"collapse_whitespace", normalizer_.collapse_whitespace}};
        j["pre_tokenizer"] = {{"mode", std::string(to_string(pre_tokenizer_mode_))}};
        const auto& specials = vocab().specials();
        const auto role = [](const std::optional<std::string>& t) {
            return t ? nlohmann::json(*t) : nlohmann::json(nullptr);
        };
        j["special_tokens"] = {{"unk", role(specials.unk)},   {"cls", role(specials.cls)},
                               {"sep", role(specials.sep)},   {"pad", role(specials.pad)},
                               {"mask", role(specials.mask)}, {"additional", specials.additional}};
        j["added_tokens"] = vocab().added_tokens();
        j["template"] = {{"single", template_.canonical_single()},
                         {"pair", template_.has_pair() ? nlohmann::json(template_.canonical_pair())
                                                       : nlohmann::json(nullptr)}};
        if (truncation_) {
            j["truncation"] = {{"max_length", truncation_->max_length},
                               {"strategy", std::string(to_string(truncation_->strategy))},
                               {"stride", truncation_->stride}};
        } else {
            j["truncation"] = nullptr;
        }
        j["provenance"] = provenance_.is_null() ? nlohmann::json(nullptr) : provenance_;
        return j;
    }

    // Writes tokenizer_config.json plus the model's side files. The config
    // serialization is canonical (sorted keys, two-space indent, trailing
    // newline), so save -> load -> save is byte-identical.
    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / kConfigFileName, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (dir / kConfigFileName).string());
        out << config_json().dump(2) << '\n';
        model_->save_files(dir);
    }

    static Tokenizer load(const std::filesystem::path& dir) {
        const auto config_path = dir / kConfigFileName;
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw NotFoundError("no tokenizer config at " + config_path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(config_path.string() + ": " + e.what());
        }
        return from_config(j, dir);
    }

    static Tokenizer from_config(const nlohmann::json& j, const std::filesystem::path& dir) {
        const auto context = (dir / kConfigFileName).string();
        const auto require = [&](const char* key) -> const nlohmann::json& {
            auto it = j.find(key);
            if (it == j.end()) throw ParseError(context + ": missing key \"" + key + "\"");
            return *it;
        };
        const auto version = require("format_version");
        if (!version.is_number_integer())
            throw ParseError(context + ": format_version must be an integer");
        if (version.get<int>() > kFormatVersion)
            throw VersionError(context + ": format_version " + std::to_string(version.get<int>()) +
                               " is newer than supported version " +
                               std::to_string(kFormatVersion));

        try {
            const auto& model_obj = require("model");
            const std::string kind = model_obj.at("kind").get<std::string>();

            const auto& norm_obj = require("normalizer");
            Normalizer norm;
            norm.lowercase = norm_obj.at("lowercase").get<bool>();
            norm.unicode_nfc = norm_obj.at("unicode_nfc").get<bool>();
            norm.strip_accents = norm_obj.at("strip_accents").get<bool>();
            norm.collapse_whitespace = norm_obj.at("collapse_whitespace").get<bool>();

            const auto mode =
                pre_tokenizer_mode_from_string(require("pre_tokenizer").at("mode").get<std::string>());

            const auto& sp = require("special_tokens");
            SpecialTokenSet specials;
            const auto role = [&](const char* key) -> std::optional<std::string> {
                const auto& v = sp.at(key);
                if (v.is_null()) return std::nullopt;
                return v.get<std::string>();
            };
            specials.unk = role("unk");
            specials.cls = role("cls");
            specials.sep = role("sep");
            specials.pad = role("pad");
            specials.mask = role("mask");
            specials.additional = sp.at("additional").get<std::vector<std::string>>();

            const auto added = require("added_tokens").get<std::vector<std::string>>();

            const auto& loaders = detail::model_loaders();
            auto loader = loaders.find(kind);
            if (loader == loaders.end())
                throw ParseError(context + ": no loader registered for model kind \"" + kind + "\"");
            std::shared_ptr<Model> model = loader->second(model_obj, dir, specials, added);

            const auto& tmpl_obj = require("template");
            const std::string single = tmpl_obj.at("single").get<std::string>();
            const std::string pair =
                tmpl_obj.at("pair").is_null() ? "" : tmpl_obj.at("pair").get<std::string>();
            Template templ(single, pair);

            std::optional<TruncationSpec> truncation;
            const auto& trunc_obj = require("truncation");
            if (!trunc_obj.is_null()) {
                TruncationSpec t;
                t.max_length = trunc_obj.at("max_length").get<std::size_t>();
                t.strategy =
                    truncation_strategy_from_string(trunc_obj.at("strategy").get<std::string>());
                t.stride = trunc_obj.at("stride").get<std::size_t>();
                truncation = t;
            }

            Tokenizer tok(std::move(model), norm, mode, std::move(templ), truncation);
            if (auto it = j.find("provenance"); it != j.end() && !it->is_null())
                tok.set_provenance(*it);
            return tok;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(context + ": " + e.what());
        }
    }

private:
    struct SeqWithOffsets {
        TokenSeq seq;
        std::vector<ByteRange> offsets;
    };

    // Splits raw text around atomic (special/added) tokens, then runs
    // normalize -> pre-tokenize -> model over the remaining segments.
    // Offsets refer to the concatenation of per-segment normalized text with
    // atomic tokens kept verbatim.
    SeqWithOffsets run_model(std::string_view text) const {
        SeqWithOffsets out;
        std::uint32_t cursor = 0;
        const bool raw_bytes_ok =
            pre_tokenizer_mode_ == PreTokenizerMode::ByteLevel && normalizer_.is_identity();

        const auto encode_segment = [&](std::string_view segment) {
            if (segment.empty()) return;
            std::string normalized_storage;
            std::string_view normalized = segment;
            if (!raw_bytes_ok) {
                normalized_storage = normalizer_.apply(segment);
                normalized = normalized_storage;
            }
            out.seq.tokens.reserve(out.seq.tokens.size() + normalized.size() / 3);
            out.seq.ids.reserve(out.seq.ids.size() + normalized.size() / 3);
            for (auto& pt : pre_tokenize(normalized, pre_tokenizer_mode_)) {
                const std::size_t before = out.seq.size();
                model_->encode_pretoken_into(pt.text, out.seq);
                for (std::size_t k = before; k < out.seq.size(); ++k)
                    out.offsets.push_back(
                        {cursor + pt.offset.begin, cursor + pt.offset.end});
            }
            cursor += static_cast<std::uint32_t>(normalized.size());
        };

        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto [token_id, at, len] = next_atomic(text, pos);
            if (len == 0) {
                encode_segment(text.substr(pos));
                break;
            }
            encode_segment(text.substr(pos, at - pos));
            const std::string& token = vocab().id_to_token(token_id);
            out.seq.push(token, token_id);
            out.offsets.push_back({cursor, cursor + static_cast<std::uint32_t>(token.size())});
            cursor += static_cast<std::uint32_t>(token.size());
            pos = at + len;
        }
        return out;
    }

    Encoding encode_impl(std::string_view text, std::optional<std::string_view> pair,
                         const std::optional<TruncationSpec>* truncation_override = nullptr) const {
        SeqWithOffsets a = run_model(text);
        std::optional<SeqWithOffsets> b;
        if (pair) b = run_model(*pair);

        const std::optional<TruncationSpec>& truncation =
            truncation_override ? *truncation_override : truncation_;

        if (!truncation) {
            return template_.apply(a.seq, b ? &b->seq : nullptr, vocab(), a.offsets,
                                   b ? std::span<const ByteRange>(b->offsets)
                                     : std::span<const ByteRange>{});
        }

        const std::size_t overhead = template_.overhead(b.has_value());
        TruncateResult trunc = truncate(a.seq, b ? &b->seq : nullptr, *truncation, overhead);
        a.offsets.resize(std::min(a.offsets.size(), trunc.first.size()));
        if (b) b->offsets.resize(std::min(b->offsets.size(), trunc.second->size()));

        Encoding enc = template_.apply(trunc.first, b ? &*trunc.second : nullptr, vocab(),
                                       a.offsets,
                                       b ? std::span<const ByteRange>(b->offsets)
                                         : std::span<const ByteRange>{});
        for (const auto& window : trunc.windows) {
            Encoding w =
                window.from_second
                    ? template_.apply(trunc.first, &window.tokens, vocab())
                    : (b ? template_.apply(window.tokens, &*trunc.second, vocab())
                         : template_.apply(window.tokens, nullptr, vocab()));
            enc.overflowing.push_back(std::move(w));
        }
        return enc;
    }

    // Longest atomic token match at or after `pos`; len 0 when none.
    std::tuple<TokenId, std::size_t, std::size_t> next_atomic(std::string_view text,
                                                              std::size_t pos) const {
        if (atomic_tokens_.empty()) return {0, text.size(), 0};
        for (std::size_t i = pos; i < text.size(); ++i) {
            for (const auto& [token, id] : atomic_tokens_) {
                if (token.size() <= text.size() - i &&
                    text.compare(i, token.size(), token) == 0)
                    return {id, i, token.size()};
            }
        }
        return {0, text.size(), 0};
    }

    void rebuild_atomic_index() {
        const auto& v = vocab();
        std::unordered_set<std::string> seen;
        const auto add = [&](const std::string& tok) {
            if (auto id = v.token_to_id(tok); id && seen.insert(tok).second)
                atomic_tokens_.emplace_back(tok, *id);
        };
        for (const auto& tok : v.specials().in_role_order()) add(tok);
        for (const auto& tok : v.added_tokens()) add(tok);
        // Longest first so overlapping tokens match deterministically.
        std::sort(atomic_tokens_.begin(), atomic_tokens_.end(), [](const auto& x, const auto& y) {
            if (x.first.size() != y.first.size()) return x.first.size() > y.first.size();
            return x.first < y.first;
        });
    }

    std::shared_ptr<Model> model_;
    Normalizer normalizer_;
    PreTokenizerMode pre_tokenizer_mode_;
    Template template_;
    std::optional<TruncationSpec> truncation_;
    nlohmann::json provenance_;
    std::vector<std::pair<std::string, TokenId>> atomic_tokens_;
};

namespace detail {

inline std::unordered_map<std::string, ModelLoader>& model_loaders() {
    static auto* loaders = [] {
        auto* m = new std::unordered_map<std::string, ModelLoader>();
        (*m)["bpe"] = [](const nlohmann::json& payload, const std::filesystem::path& dir,
                         const SpecialTokenSet& specials, const std::vector<std::string>& added) {
            auto vocab = load_vocab_with_added(
                [&] {
                    auto v = Vocabulary::load_json(dir / "vocab.json");
                    return v.entries();
                }(),
                added, specials);
            std::string suffix;
            if (auto it = payload.find("end_of_word_suffix"); it != payload.end() && !it->is_null())
                suffix = it->get<std::string>();
            return std::make_unique<BpeModel>(std::move(vocab), MergeTable::load(dir / "merges.txt"),
                                              false, std::move(suffix));
        };
        (*m)["byte_bpe"] = [](const nlohmann::json&, const std::filesystem::path& dir,
                              const SpecialTokenSet& specials,
                              const std::vector<std::string>& added) {
            auto vocab = load_vocab_with_added(
                [&] {
                    auto v = Vocabulary::load_json(dir / "vocab.json");
                    return v.entries();
                }(),
                added, specials);
            return std::make_unique<BpeModel>(std::move(vocab), MergeTable::load(dir / "merges.txt"),
                                              true);
        };
        (*m)["wordpiece"] = [](const nlohmann::json& payload, const std::filesystem::path& dir,
                               const SpecialTokenSet& specials,
                               const std::vector<std::string>& added) {
            auto vocab = load_vocab_with_added(Vocabulary::load_txt_tokens(dir / "vocab.txt"),
                                               added, specials);
            return std::make_unique<WordPieceModel>(
                std::move(vocab), payload.at("continuation_prefix").get<std::string>(),
                payload.at("max_chars_per_word").get<std::size_t>());
        };
        (*m)["unigram"] = [](const nlohmann::json& payload, const std::filesystem::path&,
                             const SpecialTokenSet& specials,
                             const std::vector<std::string>& added) {
            UnigramTable table;
            for (const auto& entry : payload.at("pieces"))
                table.pieces.emplace_back(entry.at(0).get<std::string>(),
                                          entry.at(1).get<double>());
            table.unk_penalty = payload.at("unk_penalty").get<double>();
            auto model = std::make_unique<UnigramModel>(std::move(table), specials);
            model->mutable_vocab().add_tokens(std::span<const std::string>(added));
            return model;
        };
        (*m)["char"] = [](const nlohmann::json&, const std::filesystem::path& dir,
                          const SpecialTokenSet& specials, const std::vector<std::string>& added) {
            auto vocab = load_vocab_with_added(Vocabulary::load_txt_tokens(dir / "vocab.txt"),
                                               added, specials);
            return std::make_unique<CharModel>(std::move(vocab));
        };
        return m;
    }();
    return *loaders;
}

}  // namespace detail

// Plugs a custom model kind into config-driven loading.
inline void register_model_loader(std::string kind, ModelLoader loader) {
    detail::model_loaders()[std::move(kind)] = std::move(loader);
}

}  // namespace subtok
