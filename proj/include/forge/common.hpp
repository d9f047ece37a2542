#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace forge {

using json = nlohmann::json;

// Closed set of domain failures. Every module reports through forge::Error so
// the CLI can map domain errors to exit code 1 uniformly.
enum class ErrorKind {
    LaunchFailure,
    TraceUnavailable,
    NoCodeBlock,
    MissingSlot,
    UnknownTemplate,
    TransportError,
    AuthError,
    ProviderRefusal,
    ParseFailure,
    OutOfRange,
    ParameterOutOfDomain,
    NoTemplates,
    GenerationFailure,
    RenderFailure,
    PrincipleFailure,
    JudgeUnavailable,
    EmptyCorpus,
    EmptyGroup,
    InsufficientCandidates,
    RangeViolation,
    SchemaError,
    PreconditionViolation,
    UnknownSample,
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);

// Collapses every whitespace run to one space and trims; used for content
// dedup so formatting-only differences hash identically.
std::string normalize_whitespace(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);
std::vector<json> read_jsonl(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

// Rounds half away from zero at two decimals. The small bias absorbs binary
// representation error so 56.045 rounds to 56.05 like its decimal form.
double round2(double value);

// True when the bytes start with a PNG, JPEG, GIF, BMP or WebP signature.
bool looks_like_image(std::string_view bytes);

// Runs fn(i) for i in [0, count) on at most `workers` threads. Exceptions
// from jobs are rethrown (first one wins) after all workers join.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace forge
