#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <thread>
#include <string>
#include <vector>

#include "subtok/common.hpp"
#include "subtok/tokenizer.hpp"

namespace subtok {

struct BenchResult {
    std::size_t threads = 1;
    std::uint64_t total_bytes = 0;
    std::uint64_t total_tokens = 0;
    double seconds = 0.0;

    double mb_per_sec() const {
        return seconds > 0 ? static_cast<double>(total_bytes) / 1e6 / seconds : 0.0;
    }
    double tokens_per_sec() const {
        return seconds > 0 ? static_cast<double>(total_tokens) / seconds : 0.0;
    }
};

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Encodes every document and reports wall-clock throughput. Documents fan
// out across `threads` workers over contiguous chunks; encodings are
// consumed as they are produced (their token counts accumulated) so the
// measurement reflects encoding work, not result storage.
inline BenchResult run_bench(const Tokenizer& tokenizer, std::span<const std::string> docs,
                             std::size_t threads) {
    BenchResult result;
    result.threads = threads;
    for (const auto& d : docs) result.total_bytes += d.size();
    if (docs.empty()) return result;
    threads = std::clamp<std::size_t>(threads, 1, docs.size());

    std::vector<std::uint64_t> counts(threads, 0);
    const auto start = std::chrono::steady_clock::now();
    if (threads == 1) {
        for (const auto& doc : docs) counts[0] += tokenizer.encode(doc).size();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(threads);
        const std::size_t chunk = (docs.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(begin + chunk, docs.size());
            if (begin >= end) break;
            workers.emplace_back([&, t, begin, end] {
                std::uint64_t local = 0;
                for (std::size_t i = begin; i < end; ++i) local += tokenizer.encode(docs[i]).size();
                counts[t] = local;
            });
        }
        for (auto& w : workers) w.join();
    }
    const auto stop = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(stop - start).count();
    for (const std::uint64_t c : counts) result.total_tokens += c;
    return result;
}

}  // namespace subtok
