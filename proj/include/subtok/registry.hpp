#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "subtok/common.hpp"
#include "subtok/sha256.hpp"
#include "subtok/tokenizer.hpp"

namespace subtok {

namespace fs = std::filesystem;

// Structured metadata published with a model.
struct ModelCard {
    std::string description;
    std::string training_data;
    std::optional<std::string> citation;
    std::string caveats_and_biases;
    std::string license;

    void validate() const {
        if (description.empty()) throw ValidationError("model card: description must be non-empty");
        if (training_data.empty())
            throw ValidationError("model card: training_data must be non-empty");
    }

    nlohmann::json to_json() const {
        return {{"description", description},
                {"training_data", training_data},
                {"citation", citation ? nlohmann::json(*citation) : nlohmann::json(nullptr)},
                {"caveats_and_biases", caveats_and_biases},
                {"license", license}};
    }

    static ModelCard from_json(const nlohmann::json& j) {
        try {
            ModelCard card;
            card.description = j.at("description").get<std::string>();
            card.training_data = j.at("training_data").get<std::string>();
            if (!j.at("citation").is_null()) card.citation = j.at("citation").get<std::string>();
            card.caveats_and_biases = j.at("caveats_and_biases").get<std::string>();
            card.license = j.at("license").get<std::string>();
            return card;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("model card: ") + e.what());
        }
    }

    void save(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path.string());
        out << to_json().dump(2) << '\n';
    }

    static ModelCard load(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("cannot open " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

// "namespace/model" — lowercase namespace, word characters plus ._- in the
// model part.
inline void validate_canonical_name(std::string_view name) {
    const auto slash = name.find('/');
    const auto bad = [&] {
        throw ValidationError("canonical name \"" + std::string(name) +
                              "\" must match [a-z0-9_-]+/[A-Za-z0-9._-]+");
    };
    if (slash == std::string_view::npos || slash == 0 || slash + 1 == name.size()) bad();
    if (name.find('/', slash + 1) != std::string_view::npos) bad();
    for (const char c : name.substr(0, slash))
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-')) bad();
    for (const char c : name.substr(slash + 1))
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-'))
            bad();
}

struct ManifestFile {
    std::string path;  // relative
    std::uint64_t size = 0;
    std::string digest;  // "sha256:<hex>"
    friend bool operator==(const ManifestFile&, const ManifestFile&) = default;
};

struct ArchiveManifest {
    std::string canonical_name;
    std::vector<ManifestFile> files;
    std::string created_at;  // ISO-8601 UTC
    ModelCard card;
    std::string digest_algorithm = "sha256";
    // Archives currently hold only the tokenizer; the field keeps the layout
    // forward-compatible with bundles that add model weights or heads.
    std::vector<std::string> components = {"tokenizer"};

    nlohmann::json to_json() const {
        nlohmann::json files_json = nlohmann::json::array();
        for (const auto& f : files)
            files_json.push_back(
                {{"path", f.path}, {"size", f.size}, {"digest", f.digest}});
        return {{"canonical_name", canonical_name},
                {"files", std::move(files_json)},
                {"created_at", created_at},
                {"card", card.to_json()},
                {"digest_algorithm", digest_algorithm},
                {"components", components}};
    }

    static ArchiveManifest from_json(const nlohmann::json& j) {
        try {
            ArchiveManifest m;
            m.canonical_name = j.at("canonical_name").get<std::string>();
            for (const auto& f : j.at("files"))
                m.files.push_back({f.at("path").get<std::string>(),
                                   f.at("size").get<std::uint64_t>(),
                                   f.at("digest").get<std::string>()});
            m.created_at = j.at("created_at").get<std::string>();
            m.card = ModelCard::from_json(j.at("card"));
            m.digest_algorithm = j.at("digest_algorithm").get<std::string>();
            m.components = j.at("components").get<std::vector<std::string>>();
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("manifest: ") + e.what());
        }
    }

    void save(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path.string());
        out << to_json().dump(2) << '\n';
    }

    static ArchiveManifest load(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("cannot open manifest " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

namespace detail {

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline std::string random_suffix() {
    static thread_local std::mt19937_64 rng(
        std::random_device{}() ^
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count()));
    static constexpr char kAlphabet[] = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string s;
    for (int i = 0; i < 12; ++i) s.push_back(kAlphabet[rng() % 36]);
    return s;
}

inline std::string file_digest(const fs::path& path) { return "sha256:" + sha256_file_hex(path); }

// Digest check for a materialized archive directory.
inline bool verify_archive(const fs::path& dir, const ArchiveManifest& manifest,
                           std::string* problem = nullptr) {
    if (manifest.digest_algorithm != "sha256") {
        if (problem) *problem = "unsupported digest algorithm " + manifest.digest_algorithm;
        return false;
    }
    for (const auto& f : manifest.files) {
        const fs::path p = dir / f.path;
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) {
            if (problem) *problem = "missing file " + f.path;
            return false;
        }
        if (fs::file_size(p, ec) != f.size) {
            if (problem) *problem = "size mismatch for " + f.path;
            return false;
        }
        if (file_digest(p) != f.digest) {
            if (problem) *problem = "digest mismatch for " + f.path;
            return false;
        }
    }
    return true;
}

inline std::pair<std::string, std::string> split_name(std::string_view name) {
    validate_canonical_name(name);
    const auto slash = name.find('/');
    return {std::string(name.substr(0, slash)), std::string(name.substr(slash + 1))};
}

}  // namespace detail

// Cache root: explicit argument > SUBTOK_CACHE environment > ~/.cache/subtok.
inline fs::path default_cache_root() {
    if (const char* env = std::getenv("SUBTOK_CACHE"); env && *env) return fs::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return fs::path(home) / ".cache" / "subtok";
    return fs::temp_directory_path() / "subtok-cache";
}

inline fs::path default_store_root() {
    if (const char* env = std::getenv("SUBTOK_STORE"); env && *env) return fs::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return fs::path(home) / ".local" / "share" / "subtok" / "store";
    return fs::temp_directory_path() / "subtok-store";
}

// Copies a validated tokenizer directory into the store under its canonical
// name, writing the model card and a manifest with per-file digests. The
// archive is staged in a temp directory and renamed into place; publishing
// over an existing name requires overwrite.
inline ArchiveManifest publish(const fs::path& dir, std::string_view name, const ModelCard& card,
                               const fs::path& store_root, bool overwrite = false) {
    const auto [ns, model_name] = detail::split_name(name);
    card.validate();
    try {
        (void)Tokenizer::load(dir);  // full config + side-file validation
    } catch (const Error& e) {
        throw ValidationError("cannot publish " + dir.string() + ": " + e.what());
    }

    const fs::path target = store_root / ns / model_name;
    if (fs::exists(target) && !overwrite)
        throw ConflictError("model \"" + std::string(name) +
                            "\" already published; pass overwrite to replace it");

    const fs::path staging = store_root / (".tmp-publish-" + detail::random_suffix());
    try {
        fs::create_directories(staging);
        ArchiveManifest manifest;
        manifest.canonical_name = std::string(name);
        manifest.created_at = detail::iso8601_utc_now();
        manifest.card = card;
        std::vector<fs::path> sources;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) sources.push_back(entry.path());
        std::sort(sources.begin(), sources.end());
        for (const auto& src : sources) {
            const std::string rel = src.filename().string();
            if (rel == "manifest.json" || rel == "model_card.json") continue;
            fs::copy_file(src, staging / rel);
        }
        card.save(staging / "model_card.json");
        for (const auto& entry : fs::directory_iterator(staging)) {
            const std::string rel = entry.path().filename().string();
            manifest.files.push_back(
                {rel, fs::file_size(entry.path()), detail::file_digest(entry.path())});
        }
        std::sort(manifest.files.begin(), manifest.files.end(),
                  [](const ManifestFile& a, const ManifestFile& b) { return a.path < b.path; });
        manifest.save(staging / "manifest.json");

        fs::create_directories(target.parent_path());
        if (fs::exists(target)) fs::remove_all(target);
        fs::rename(staging, target);
        return manifest;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

namespace detail {

inline bool is_http_store(std::string_view store) {
    return store.starts_with("http://") || store.starts_with("https://");
}

// Fetches manifest.json plus every listed file from a static HTTP file
// layout mirroring the local store tree.
inline void http_fetch_archive(std::string_view store_url, std::string_view ns,
                               std::string_view model_name, const fs::path& dest);

inline void local_fetch_archive(const fs::path& store_root, std::string_view ns,
                                std::string_view model_name, const fs::path& dest) {
    const fs::path src = store_root / ns / model_name;
    if (!fs::is_regular_file(src / "manifest.json"))
        throw NotFoundError("model \"" + std::string(ns) + "/" + std::string(model_name) +
                            "\" not found in store " + store_root.string());
    fs::create_directories(dest);
    for (const auto& entry : fs::directory_iterator(src))
        if (entry.is_regular_file()) fs::copy_file(entry.path(), dest / entry.path().filename());
}

}  // namespace detail

struct ResolveHooks {
    // Test-only fault injection point, called between fetch and commit.
    std::function<void()> before_commit;
};

// Returns a local directory for the named archive. Cache hits verify their
// digests and perform no store access; misses fetch into a temp directory,
// verify, and atomically rename into the cache. A corrupted cache entry is
// quarantined and reported; the next resolve re-fetches.
inline fs::path resolve(std::string_view name, const fs::path& cache_root,
                        const std::string& store, const ResolveHooks& hooks = {}) {
    const auto [ns, model_name] = detail::split_name(name);
    const fs::path cached = cache_root / ns / model_name;

    if (fs::is_regular_file(cached / "manifest.json")) {
        const auto manifest = ArchiveManifest::load(cached / "manifest.json");
        std::string problem;
        if (detail::verify_archive(cached, manifest, &problem)) return cached;
        const fs::path quarantine =
            cache_root / ".quarantine" / (ns + "--" + model_name + "-" + detail::random_suffix());
        fs::create_directories(quarantine.parent_path());
        fs::rename(cached, quarantine);
        throw IntegrityError("cached archive for \"" + std::string(name) + "\" failed verification (" +
                             problem + "); entry quarantined, resolve again to re-fetch");
    }

    const fs::path staging = cache_root / ".tmp" / detail::random_suffix();
    fs::create_directories(staging);
    try {
        if (detail::is_http_store(store))
            detail::http_fetch_archive(store, ns, model_name, staging);
        else
            detail::local_fetch_archive(fs::path(store), ns, model_name, staging);

        const auto manifest = ArchiveManifest::load(staging / "manifest.json");
        std::string problem;
        if (!detail::verify_archive(staging, manifest, &problem))
            throw IntegrityError("fetched archive for \"" + std::string(name) +
                                 "\" failed verification: " + problem);

        if (hooks.before_commit) hooks.before_commit();

        fs::create_directories(cached.parent_path());
        std::error_code ec;
        fs::rename(staging, cached, ec);
        if (ec) {
            // Lost a populate race; accept the existing entry if it verifies.
            if (fs::is_regular_file(cached / "manifest.json") &&
                detail::verify_archive(cached, ArchiveManifest::load(cached / "manifest.json"))) {
                fs::remove_all(staging);
                return cached;
            }
            throw IntegrityError("cannot commit cache entry for \"" + std::string(name) +
                                 "\": " + ec.message());
        }
        return cached;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

// Single polymorphic entry point: a readable directory loads directly, a
// canonical name resolves through cache and store first.
inline Tokenizer load_tokenizer(std::string_view name_or_path,
                                const fs::path& cache_root = default_cache_root(),
                                const std::string& store = default_store_root().string()) {
    const fs::path as_path(std::string{name_or_path});
    if (fs::is_directory(as_path)) return Tokenizer::load(as_path);
    return Tokenizer::load(resolve(name_or_path, cache_root, store));
}

namespace detail {

inline void http_fetch_archive(std::string_view store_url, std::string_view ns,
                               std::string_view model_name, const fs::path& dest) {
    if (store_url.starts_with("https://"))
        throw ValidationError("https stores are not supported by this build; use http or a local path");
    // Split "http://host:port[/prefix]" into client base and path prefix.
    const std::size_t authority_start = std::string_view("http://").size();
    const std::size_t path_start = store_url.find('/', authority_start);
    const std::string base(store_url.substr(0, path_start));
    std::string prefix = path_start == std::string_view::npos
                             ? std::string{}
                             : std::string(store_url.substr(path_start));
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    const std::string archive_path =
        prefix + "/" + std::string(ns) + "/" + std::string(model_name) + "/";

    const auto fetch = [&](const std::string& rel) {
        const auto res = client.Get(archive_path + rel);
        if (!res)
            throw NotFoundError("cannot reach store " + std::string(store_url) + ": " +
                                httplib::to_string(res.error()));
        if (res->status == 404)
            throw NotFoundError("model \"" + std::string(ns) + "/" + std::string(model_name) +
                                "\" not found in store " + std::string(store_url));
        if (res->status != 200)
            throw NotFoundError("store returned status " + std::to_string(res->status) + " for " +
                                archive_path + rel);
        std::ofstream out(dest / rel, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (dest / rel).string());
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    };

    fs::create_directories(dest);
    fetch("manifest.json");
    const auto manifest = ArchiveManifest::load(dest / "manifest.json");
    for (const auto& f : manifest.files) {
        if (f.path.find('/') != std::string::npos || f.path.find("..") != std::string::npos)
            throw IntegrityError("manifest lists a non-flat path: " + f.path);
        fetch(f.path);
    }
}

}  // namespace detail

// Store browsing (local directory stores). Lexicographically sorted; the
// filter is a case-insensitive substring on the canonical name.
inline std::vector<std::pair<std::string, std::string>> list_models(
    const fs::path& store_root, std::string_view filter = {}) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!fs::is_directory(store_root)) return out;
    const auto lower = [](std::string_view s) {
        std::string t(s);
        for (char& c : t)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 0x20);
        return t;
    };
    const std::string needle = lower(filter);
    for (const auto& ns_entry : fs::directory_iterator(store_root)) {
        if (!ns_entry.is_directory()) continue;
        const std::string ns = ns_entry.path().filename().string();
        if (ns.starts_with(".")) continue;
        for (const auto& model_entry : fs::directory_iterator(ns_entry.path())) {
            if (!model_entry.is_directory()) continue;
            const fs::path manifest_path = model_entry.path() / "manifest.json";
            if (!fs::is_regular_file(manifest_path)) continue;
            const std::string name = ns + "/" + model_entry.path().filename().string();
            if (!needle.empty() && lower(name).find(needle) == std::string::npos) continue;
            out.emplace_back(name, ArchiveManifest::load(manifest_path).card.description);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace subtok
