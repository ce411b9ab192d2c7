#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace novelty {

enum class ErrorKind {
    // domain
    NoIdentifier,
    EmptyIdea,
    IdeaTooLong,
    InvalidConfig,
    InvariantViolation,
    DatasetParse,
    // gateway
    ProviderUnavailable,
    AuthError,
    ContextOverflow,
    EmptyText,
    // retrieval
    MalformedQueryResponse,
    HostError,
    QuotaExceeded,
    EmptyPool,
    // rerank
    DimensionMismatch,
    ZeroVector,
    UnparseableRanking,
    // judge
    NotEnoughExamples,
    UnparseableVerdict,
    // evaluation
    LengthMismatch,
    UnknownClass,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `stage` is filled in by the pipeline
/// driver when an error crosses a stage boundary ("retrieval", "rerank", ...).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string stage = {})
        : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

    Error with_stage(std::string stage) const { return Error(kind_, what(), std::move(stage)); }

    /// "[stage] Kind: message"
    std::string describe() const;

private:
    ErrorKind kind_;
    std::string stage_;
};

}  // namespace novelty
