#pragma once

#include <stdexcept>
#include <string>

// Typed error hierarchy. Every failure the library can signal is a subclass of
// mrrlvr::Error so callers (and the CLI exit-code mapping) can branch on kind
// without string matching.
namespace mrrlvr {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- corpus ----
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

struct SchemaError : Error {
    int line;            // 1-based line number in the offending file
    std::string field;   // field that was missing or ill-typed
    SchemaError(int line_, std::string field_, const std::string& msg)
        : Error(msg), line(line_), field(std::move(field_)) {}
};

struct DuplicateIdError : Error {
    std::string id;
    explicit DuplicateIdError(std::string id_)
        : Error("duplicate record id: " + id_), id(std::move(id_)) {}
};

struct BadFractionsError : Error {
    explicit BadFractionsError(const std::string& msg) : Error(msg) {}
};

struct EmptyDatasetError : Error {
    explicit EmptyDatasetError(const std::string& msg) : Error(msg) {}
};

// ---- mathtext ----
struct UnbalancedBracesError : Error {
    explicit UnbalancedBracesError(const std::string& msg) : Error(msg) {}
};

// ---- rewards ----
struct LengthMismatchError : Error {
    explicit LengthMismatchError(const std::string& msg) : Error(msg) {}
};

struct KindMismatchError : Error {
    explicit KindMismatchError(const std::string& msg) : Error(msg) {}
};

// ---- curation ----
struct TheoremNotFoundError : Error {
    std::string theorem;
    explicit TheoremNotFoundError(std::string theorem_)
        : Error("annotated theorem not found in trajectory: " + theorem_),
          theorem(std::move(theorem_)) {}
};

struct TooFewStepsError : Error {
    explicit TooFewStepsError(const std::string& msg) : Error(msg) {}
};

struct TooManyStepsError : Error {
    explicit TooManyStepsError(const std::string& msg) : Error(msg) {}
};

struct EmptyAnnotationError : Error {
    explicit EmptyAnnotationError(const std::string& msg) : Error(msg) {}
};

struct BadJsonError : Error {
    std::string excerpt;
    BadJsonError(const std::string& msg, std::string excerpt_)
        : Error(msg), excerpt(std::move(excerpt_)) {}
};

struct TransportError : Error {
    explicit TransportError(const std::string& msg) : Error(msg) {}
};

struct InsufficientDataError : Error {
    std::string stage;
    long needed;
    long available;
    InsufficientDataError(std::string stage_, long needed_, long available_)
        : Error("insufficient data for " + stage_ + ": need " +
                std::to_string(needed_) + ", have " + std::to_string(available_)),
          stage(std::move(stage_)), needed(needed_), available(available_) {}
};

// ---- grpo ----
struct GroupTooSmallError : Error {
    explicit GroupTooSmallError(const std::string& msg) : Error(msg) {}
};

struct ScoreMismatchError : Error {
    explicit ScoreMismatchError(const std::string& msg) : Error(msg) {}
};

// ---- pipeline ----
struct DatasetMissingError : Error {
    explicit DatasetMissingError(const std::string& msg) : Error(msg) {}
};

struct StageMismatchError : Error {
    explicit StageMismatchError(const std::string& msg) : Error(msg) {}
};

struct ConfigDriftError : Error {
    explicit ConfigDriftError(const std::string& msg) : Error(msg) {}
};

struct CheckpointError : Error {
    explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

// ---- eval ----
struct BadArgsError : Error {
    explicit BadArgsError(const std::string& msg) : Error(msg) {}
};

struct KExceedsNError : Error {
    std::string problem_id;
    KExceedsNError(std::string problem_id_, const std::string& msg)
        : Error(msg), problem_id(std::move(problem_id_)) {}
};

struct ZeroBaselineError : Error {
    explicit ZeroBaselineError(const std::string& msg) : Error(msg) {}
};

struct MissingCellsError : Error {
    explicit MissingCellsError(const std::string& msg) : Error(msg) {}
};

}  // namespace mrrlvr
