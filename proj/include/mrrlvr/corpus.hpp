#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrrlvr/io.hpp"

// Reasoning-trajectory corpus: record schemas, JSONL round-tripping, and
// deterministic dataset splitting.
namespace mrrlvr::corpus {

enum class ProblemKind { proof, computation };

const char* kind_name(ProblemKind k);
ProblemKind kind_from_name(const std::string& name, int line);

struct ProblemRecord {
    std::string id;
    std::string statement;
    std::vector<std::string> trajectory;  // ordered solution segments
    std::string final_answer;             // may be empty for proofs
    ProblemKind kind = ProblemKind::computation;
    std::string source_tag;
};

// Model-produced structure over one record's trajectory: key formulas sorted
// by importance (most important first) and the atomic step splitting.
struct TrajectoryAnnotation {
    std::string problem_id;
    std::vector<std::string> theorems;
    std::vector<std::string> steps;
};

struct DatasetSplit {
    std::string name;
    std::vector<std::string> record_ids;
    std::uint64_t seed = 0;
    std::vector<double> fractions;
};

// JSONL loaders/savers. Loaders validate the schema and raise SchemaError
// with 1-based line numbers and the offending field; load_records also raises
// DuplicateIdError. Savers emit one compact object per line, LF endings.
std::vector<ProblemRecord> load_records(const std::filesystem::path& path);
void save_records(const std::filesystem::path& path, const std::vector<ProblemRecord>& records);
std::vector<TrajectoryAnnotation> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      const std::vector<TrajectoryAnnotation>& annotations);

// Field-level converters (shared with the CLI and tests).
io::ojson record_to_json(const ProblemRecord& rec);
ProblemRecord record_from_json(const io::json& j, int line);
io::ojson annotation_to_json(const TrajectoryAnnotation& ann);
TrajectoryAnnotation annotation_from_json(const io::json& j, int line);

// Deterministic split: shuffle ids with `seed`, then cut into chunks whose
// sizes follow the largest-remainder method (ties broken by split index), so
// every size is within 1 of fraction * N and the union is exact and disjoint.
// Fractions must sum to 1 within 1e-9 (BadFractionsError); records must be
// non-empty (EmptyDatasetError).
std::vector<DatasetSplit> split_dataset(const std::vector<ProblemRecord>& records,
                                        const std::vector<double>& fractions,
                                        std::uint64_t seed);

// The flat text the curation stage operates on: trajectory segments joined
// with blank lines.
std::string flatten_trajectory(const ProblemRecord& rec);

}  // namespace mrrlvr::corpus
