#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "subtok/common.hpp"
#include "subtok/unicode.hpp"

namespace subtok {

// Ordered list of BPE merges. Rank == list position; encoding replays merges
// in rank order, training appends them in discovery order.
class MergeTable {
public:
    MergeTable() = default;

    static MergeTable from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
        MergeTable t;
        t.merges_.reserve(pairs.size());
        for (auto& p : pairs) t.push(std::move(p.first), std::move(p.second));
        return t;
    }

    void push(std::string left, std::string right) {
        if (left.empty() || right.empty())
            throw ValidationError("merge parts must be non-empty");
        if (has_space(left) || has_space(right))
            throw ValidationError("merge parts must not contain whitespace: \"" + left + " " +
                                  right + "\"");
        std::string key = left + ' ' + right;
        const auto rank = static_cast<std::uint32_t>(merges_.size());
        if (!rank_.emplace(std::move(key), rank).second)
            throw ValidationError("duplicate merge \"" + left + " " + right + "\"");
        merges_.emplace_back(std::move(left), std::move(right));
    }

    std::size_t size() const { return merges_.size(); }
    bool empty() const { return merges_.empty(); }
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    std::optional<std::uint32_t> rank(std::string_view left, std::string_view right) const {
        std::string key;
        key.reserve(left.size() + right.size() + 1);
        key.append(left).push_back(' ');
        key.append(right);
        auto it = rank_.find(key);
        if (it == rank_.end()) return std::nullopt;
        return it->second;
    }

    // Every merge part must be a single symbol (one codepoint, optionally
    // carrying the end-of-word suffix) or the product of a lower-ranked
    // merge.
    void validate_closure(const std::string& end_of_word_suffix = "") const {
        std::unordered_set<std::string_view> produced;
        std::vector<std::string> results;
        results.reserve(merges_.size());
        const auto is_single_symbol = [&](std::string_view s) {
            std::string_view body = s;
            if (!end_of_word_suffix.empty() && body.size() > end_of_word_suffix.size() &&
                body.ends_with(end_of_word_suffix))
                body.remove_suffix(end_of_word_suffix.size());
            std::size_t i = 0;
            char32_t cp;
            return unicode::try_decode(body, i, cp) && i == body.size();
        };
        for (std::size_t r = 0; r < merges_.size(); ++r) {
            const auto& [left, right] = merges_[r];
            for (const auto* part : {&left, &right}) {
                if (!is_single_symbol(*part) && !produced.contains(*part))
                    throw ValidationError("merge rank " + std::to_string(r) + ": part \"" +
                                          *part + "\" is neither a single symbol nor a prior merge result");
            }
            results.push_back(left + right);
            produced.insert(results.back());
        }
    }

    friend bool operator==(const MergeTable& a, const MergeTable& b) {
        return a.merges_ == b.merges_;
    }

    // merges.txt: comment header line, then "left right" per line in rank
    // order, single space separated.
    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path.string());
        out << "#version: 1\n";
        for (const auto& [left, right] : merges_) out << left << ' ' << right << '\n';
    }

    static MergeTable load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("cannot open " + path.string());
        MergeTable t;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (lineno == 1 && line.starts_with('#')) continue;
            if (line.empty())
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty merge line");
            const auto space = line.find(' ');
            if (space == std::string::npos || space == 0 || space + 1 == line.size() ||
                line.find(' ', space + 1) != std::string::npos)
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected \"left right\"");
            t.push(line.substr(0, space), line.substr(space + 1));
        }
        return t;
    }

private:
    static bool has_space(std::string_view s) {
        return s.find_first_of(" \t\r\n") != std::string_view::npos;
    }

    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::string, std::uint32_t, StringHash, StringEq> rank_;
};

}  // namespace subtok
