#include "novelty/error.hpp"

namespace novelty {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NoIdentifier: return "NoIdentifier";
        case ErrorKind::EmptyIdea: return "EmptyIdea";
        case ErrorKind::IdeaTooLong: return "IdeaTooLong";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::DatasetParse: return "DatasetParse";
        case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorKind::AuthError: return "AuthError";
        case ErrorKind::ContextOverflow: return "ContextOverflow";
        case ErrorKind::EmptyText: return "EmptyText";
        case ErrorKind::MalformedQueryResponse: return "MalformedQueryResponse";
        case ErrorKind::HostError: return "HostError";
        case ErrorKind::QuotaExceeded: return "QuotaExceeded";
        case ErrorKind::EmptyPool: return "EmptyPool";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::UnparseableRanking: return "UnparseableRanking";
        case ErrorKind::NotEnoughExamples: return "NotEnoughExamples";
        case ErrorKind::UnparseableVerdict: return "UnparseableVerdict";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::UnknownClass: return "UnknownClass";
    }
    return "Unknown";
}

std::string Error::describe() const {
    std::string out;
    if (!stage_.empty()) {
        out += "[" + stage_ + "] ";
    }
    out += to_string(kind_);
    out += ": ";
    out += what();
    return out;
}

}  // namespace novelty
