#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "subtok/common.hpp"

namespace subtok {

// Reserved-role tokens. A role is absent when the optional is empty.
struct SpecialTokenSet {
    std::optional<std::string> unk;
    std::optional<std::string> cls;
    std::optional<std::string> sep;
    std::optional<std::string> pad;
    std::optional<std::string> mask;
    std::vector<std::string> additional;

    // Role order is fixed so that derived vocabularies are reproducible.
    std::vector<std::string> in_role_order() const {
        std::vector<std::string> out;
        for (const auto& t : {unk, cls, sep, pad, mask})
            if (t) out.push_back(*t);
        out.insert(out.end(), additional.begin(), additional.end());
        return out;
    }

    bool empty() const {
        return !unk && !cls && !sep && !pad && !mask && additional.empty();
    }

    friend bool operator==(const SpecialTokenSet&, const SpecialTokenSet&) = default;
};

// Bidirectional token<->id map. Ids are dense in [0, size()); tokens added
// after construction keep appending at the tail, never renumbering existing
// entries. Immutable once the mutation phase is over; concurrent readers
// are safe, mutation needs exclusive access (caller's contract).
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary from_tokens(std::vector<std::string> tokens) {
        Vocabulary v;
        v.entries_.reserve(tokens.size());
        for (auto& t : tokens) v.append_entry(std::move(t));
        v.base_size_ = v.entries_.size();
        return v;
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t base_size() const { return base_size_; }

    std::optional<TokenId> token_to_id(std::string_view token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& id_to_token(TokenId id) const {
        if (id >= entries_.size())
            throw ValidationError("token id " + std::to_string(id) + " out of range (size " +
                                  std::to_string(entries_.size()) + ")");
        return entries_[id];
    }

    // Appends each token not already present; duplicates within the call are
    // added once. Returns the number actually added.
    std::size_t add_tokens(std::span<const std::string> tokens) {
        std::size_t added = 0;
        for (const auto& t : tokens) {
            if (t.empty()) throw ValidationError("cannot add an empty token");
            if (index_.contains(t)) continue;
            append_entry(t);
            ++added;
        }
        return added;
    }

    std::size_t add_tokens(std::initializer_list<std::string> tokens) {
        return add_tokens(std::span<const std::string>(tokens.begin(), tokens.size()));
    }

    // Ensures every member of the set is present (appending if missing) and
    // flags it so decoders can skip it and pre-tokenization keeps it whole.
    void set_special_tokens(const SpecialTokenSet& set) {
        specials_ = set;
        for (const auto& t : set.in_role_order()) {
            if (t.empty()) throw ValidationError("special token must not be empty");
            if (!index_.contains(t)) append_entry(t);
            special_flags_[*token_to_id(t)] = true;
        }
    }

    bool is_special(TokenId id) const {
        auto it = special_flags_.find(id);
        return it != special_flags_.end() && it->second;
    }

    const SpecialTokenSet& specials() const { return specials_; }

    // Tokens appended after the base vocabulary, in insertion order.
    std::vector<std::string> added_tokens() const {
        return {entries_.begin() + static_cast<std::ptrdiff_t>(base_size_), entries_.end()};
    }

    const std::vector<std::string>& entries() const { return entries_; }

    std::optional<TokenId> unk_id() const {
        if (!specials_.unk) return std::nullopt;
        return token_to_id(*specials_.unk);
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.entries_ == b.entries_ && a.base_size_ == b.base_size_ &&
               a.specials_ == b.specials_;
    }

    // ---- vocab.txt: one token per line, line number = id ----

    void save_txt(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path.string());
        for (const auto& t : entries_) {
            if (t.find('\n') != std::string::npos)
                throw ValidationError("token contains a newline and cannot be stored in vocab.txt");
            out << t << '\n';
        }
    }

    static std::vector<std::string> load_txt_tokens(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("cannot open " + path.string());
        std::vector<std::string> tokens;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                throw ParseError(path.string() + ":" + std::to_string(tokens.size() + 1) +
                                 ": empty token line");
            tokens.push_back(line);
        }
        return tokens;
    }

    static Vocabulary load_txt(const std::filesystem::path& path) {
        return from_tokens(load_txt_tokens(path));
    }

    // ---- vocab.json: object mapping token -> id ----

    void save_json(const std::filesystem::path& path) const {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < entries_.size(); ++i)
            obj[entries_[i]] = i;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path.string());
        out << obj.dump(2) << '\n';
    }

    static Vocabulary load_json(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("cannot open " + path.string());
        nlohmann::json obj;
        try {
            in >> obj;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        if (!obj.is_object()) throw ParseError(path.string() + ": expected a JSON object");
        // Ids must form a dense, duplicate-free range.
        std::vector<std::string> tokens(obj.size());
        std::vector<bool> seen(obj.size(), false);
        for (const auto& [token, id_json] : obj.items()) {
            if (!id_json.is_number_unsigned())
                throw ParseError(path.string() + ": id for \"" + token +
                                 "\" is not a non-negative integer");
            const auto id = id_json.get<std::uint64_t>();
            if (id >= tokens.size())
                throw ParseError(path.string() + ": id " + std::to_string(id) +
                                 " out of dense range [0, " + std::to_string(tokens.size()) + ")");
            if (seen[id])
                throw ParseError(path.string() + ": duplicate id " + std::to_string(id));
            seen[id] = true;
            tokens[id] = token;
        }
        return from_tokens(std::move(tokens));
    }

private:
    void append_entry(std::string token) {
        if (token.empty()) throw ValidationError("empty token");
        const TokenId id = static_cast<TokenId>(entries_.size());
        auto [it, inserted] = index_.emplace(token, id);
        if (!inserted) throw ValidationError("duplicate token \"" + token + "\"");
        entries_.push_back(std::move(token));
    }

    std::vector<std::string> entries_;
    std::unordered_map<std::string, TokenId, StringHash, StringEq> index_;
    std::unordered_map<TokenId, bool> special_flags_;
    std::size_t base_size_ = 0;
    SpecialTokenSet specials_;
};

}  // namespace subtok
