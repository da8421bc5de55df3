#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subtok/common.hpp"
#include "subtok/normalizer.hpp"
#include "subtok/pre_tokenizer.hpp"

namespace subtok {

// Word -> count map over post-normalization pre-tokens, preserving first-seen
// order so every consumer iterates deterministically.
class WordCounts {
public:
    void add(std::string_view word, std::uint64_t n = 1) {
        if (word.empty() || n == 0) return;
        auto it = index_.find(word);
        if (it != index_.end()) {
            items_[it->second].second += n;
            return;
        }
        index_.emplace(std::string(word), items_.size());
        items_.emplace_back(std::string(word), n);
    }

    std::size_t distinct() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::vector<std::pair<std::string, std::uint64_t>>& items() const { return items_; }

    std::uint64_t count(std::string_view word) const {
        auto it = index_.find(word);
        return it == index_.end() ? 0 : items_[it->second].second;
    }

    // Runs the text pipeline over one newline-delimited UTF-8 file.
    void add_file(const std::filesystem::path& file, const Normalizer& norm,
                  PreTokenizerMode mode) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw NotFoundError("cannot open corpus file " + file.string());
        std::string line;
        while (std::getline(in, line)) {
            const std::string normalized = norm.is_identity() ? line : norm.apply(line);
            for (const auto& pt : pre_tokenize(normalized, mode)) add(pt.text);
        }
    }

    // A directory is processed in lexicographic filename order; a plain file
    // is read directly.
    static WordCounts from_corpus(const std::filesystem::path& input, const Normalizer& norm,
                                  PreTokenizerMode mode) {
        WordCounts counts;
        namespace fs = std::filesystem;
        if (fs::is_directory(input)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(input))
                if (entry.is_regular_file()) files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) counts.add_file(f, norm, mode);
        } else {
            counts.add_file(input, norm, mode);
        }
        return counts;
    }

private:
    std::vector<std::pair<std::string, std::uint64_t>> items_;
    std::unordered_map<std::string, std::size_t, StringHash, StringEq> index_;
};

}  // namespace subtok
