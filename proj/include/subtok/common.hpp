#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace subtok {

using TokenId = std::uint32_t;

// Error hierarchy. Absence of a value is expressed with std::optional,
// not with exceptions; these are reserved for contract violations and
// malformed inputs/files.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed file or config content.
class ParseError : public Error {
public:
    using Error::Error;
};

// Invalid UTF-8 at an API boundary; carries the byte position.
class Utf8Error : public Error {
public:
    Utf8Error(const std::string& what, std::size_t byte_pos)
        : Error(what + " at byte " + std::to_string(byte_pos)), byte_pos_(byte_pos) {}
    std::size_t byte_pos() const { return byte_pos_; }

private:
    std::size_t byte_pos_;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

// Transparent hash so unordered containers keyed by std::string accept
// std::string_view lookups without a temporary allocation.
struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
    std::size_t operator()(const std::string& s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

struct StringEq {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const noexcept { return a == b; }
};

// Half-open byte range [begin, end) into some reference string.
struct ByteRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

}  // namespace subtok
