#include "mrrlvr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/rng.hpp"

namespace mrrlvr::corpus {
namespace {

std::string require_string(const io::json& j, const char* field, int line,
                           bool allow_empty = true) {
    if (!j.contains(field) || !j[field].is_string()) {
        throw SchemaError(line, field,
                          "line " + std::to_string(line) + ": missing or non-string field '" +
                              field + "'");
    }
    std::string v = j[field].get<std::string>();
    if (!allow_empty && v.empty()) {
        throw SchemaError(line, field,
                          "line " + std::to_string(line) + ": field '" + field +
                              "' must be non-empty");
    }
    return v;
}

std::vector<std::string> require_string_array(const io::json& j, const char* field, int line,
                                              bool allow_empty_array) {
    if (!j.contains(field) || !j[field].is_array()) {
        throw SchemaError(line, field,
                          "line " + std::to_string(line) + ": missing or non-array field '" +
                              field + "'");
    }
    std::vector<std::string> out;
    for (const auto& item : j[field]) {
        if (!item.is_string()) {
            throw SchemaError(line, field,
                              "line " + std::to_string(line) + ": field '" + field +
                                  "' must contain only strings");
        }
        out.push_back(item.get<std::string>());
    }
    if (!allow_empty_array && out.empty()) {
        throw SchemaError(line, field,
                          "line " + std::to_string(line) + ": field '" + field +
                              "' must be a non-empty array");
    }
    return out;
}

}  // namespace

const char* kind_name(ProblemKind k) {
    return k == ProblemKind::proof ? "proof" : "computation";
}

ProblemKind kind_from_name(const std::string& name, int line) {
    if (name == "proof") return ProblemKind::proof;
    if (name == "computation") return ProblemKind::computation;
    throw SchemaError(line, "kind",
                      "line " + std::to_string(line) + ": kind must be 'proof' or 'computation', got '" +
                          name + "'");
}

io::ojson record_to_json(const ProblemRecord& rec) {
    io::ojson j;
    j["id"] = rec.id;
    j["statement"] = rec.statement;
    j["trajectory"] = rec.trajectory;
    j["final_answer"] = rec.final_answer;
    j["kind"] = kind_name(rec.kind);
    j["source_tag"] = rec.source_tag;
    return j;
}

ProblemRecord record_from_json(const io::json& j, int line) {
    ProblemRecord rec;
    rec.id = require_string(j, "id", line, /*allow_empty=*/false);
    rec.statement = require_string(j, "statement", line);
    rec.trajectory = require_string_array(j, "trajectory", line, /*allow_empty_array=*/false);
    rec.final_answer = require_string(j, "final_answer", line);
    rec.kind = kind_from_name(require_string(j, "kind", line), line);
    rec.source_tag = require_string(j, "source_tag", line);
    if (rec.kind == ProblemKind::computation && rec.final_answer.empty()) {
        throw SchemaError(line, "final_answer",
                          "line " + std::to_string(line) +
                              ": computation records need a non-empty final_answer");
    }
    return rec;
}

io::ojson annotation_to_json(const TrajectoryAnnotation& ann) {
    io::ojson j;
    j["problem_id"] = ann.problem_id;
    j["theorems"] = ann.theorems;
    j["steps"] = ann.steps;
    return j;
}

TrajectoryAnnotation annotation_from_json(const io::json& j, int line) {
    TrajectoryAnnotation ann;
    ann.problem_id = require_string(j, "problem_id", line, /*allow_empty=*/false);
    ann.theorems = require_string_array(j, "theorems", line, /*allow_empty_array=*/true);
    ann.steps = require_string_array(j, "steps", line, /*allow_empty_array=*/true);
    for (const auto& s : ann.steps) {
        if (s.empty()) {
            throw SchemaError(line, "steps",
                              "line " + std::to_string(line) + ": steps entries must be non-empty");
        }
    }
    return ann;
}

std::vector<ProblemRecord> load_records(const std::filesystem::path& path) {
    std::vector<ProblemRecord> records;
    std::unordered_set<std::string> seen;
    io::for_each_jsonl_row(path, [&](int line, const io::json& j) {
        ProblemRecord rec = record_from_json(j, line);
        if (!seen.insert(rec.id).second) {
            throw DuplicateIdError(rec.id);
        }
        records.push_back(std::move(rec));
    });
    return records;
}

void save_records(const std::filesystem::path& path, const std::vector<ProblemRecord>& records) {
    std::vector<io::ojson> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) rows.push_back(record_to_json(rec));
    io::write_file_atomic(path, io::to_jsonl(rows));
}

std::vector<TrajectoryAnnotation> load_annotations(const std::filesystem::path& path) {
    std::vector<TrajectoryAnnotation> out;
    io::for_each_jsonl_row(path, [&](int line, const io::json& j) {
        out.push_back(annotation_from_json(j, line));
    });
    return out;
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<TrajectoryAnnotation>& annotations) {
    std::vector<io::ojson> rows;
    rows.reserve(annotations.size());
    for (const auto& ann : annotations) rows.push_back(annotation_to_json(ann));
    io::write_file_atomic(path, io::to_jsonl(rows));
}

std::vector<DatasetSplit> split_dataset(const std::vector<ProblemRecord>& records,
                                        const std::vector<double>& fractions,
                                        std::uint64_t seed) {
    if (records.empty()) {
        throw EmptyDatasetError("split_dataset: no records");
    }
    if (fractions.empty()) {
        throw BadFractionsError("split_dataset: no fractions");
    }
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw BadFractionsError("split_dataset: negative fraction");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw BadFractionsError("split_dataset: fractions sum to " + std::to_string(sum) +
                                ", expected 1");
    }

    const std::size_t n = records.size();
    const std::size_t k = fractions.size();

    // Largest-remainder sizing: floor everything, then hand out the leftover
    // seats by descending fractional remainder, ties to the lower split index.
    std::vector<std::size_t> sizes(k);
    std::vector<double> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        double target = fractions[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(target));
        remainders[i] = target - std::floor(target);
        assigned += sizes[i];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t i = 0; assigned < n; ++i) {
        sizes[order[i % k]] += 1;
        ++assigned;
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<DatasetSplit> splits(k);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < k; ++i) {
        splits[i].name = "split_" + std::to_string(i);
        splits[i].seed = seed;
        splits[i].fractions = fractions;
        splits[i].record_ids.reserve(sizes[i]);
        for (std::size_t j = 0; j < sizes[i]; ++j) {
            splits[i].record_ids.push_back(records[idx[cursor++]].id);
        }
    }
    return splits;
}

std::string flatten_trajectory(const ProblemRecord& rec) {
    std::string out;
    for (std::size_t i = 0; i < rec.trajectory.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += rec.trajectory[i];
    }
    return out;
}

}  // namespace mrrlvr::corpus
