#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrrlvr/corpus.hpp"
#include "mrrlvr/rewards.hpp"

// Turns annotated trajectories into training instances: masked-then-fill
// (every occurrence of each annotated formula replaced by <formula_masked>),
// step reordering (non-identity shuffle with presentation prefixes), and
// outcome rows for answer-verifiable records.
namespace mrrlvr::curation {

inline constexpr const char* kMaskTag = "<formula_masked>";
inline constexpr const char* kStepPrefix = "Step ";

struct CurationConfig {
    int min_masks = 7;
    int min_steps = 3;
    int max_steps = 12;
    std::uint64_t seed = 0;
    int stage1_train = 0;  // requested instance counts; 0 = take everything
    int stage1_val = 0;
    int stage2_train = 0;
    int stage2_val = 0;

    void validate() const;  // BadArgsError on inconsistent bounds
};

// A verifiable computation problem for outcome-only training.
struct OutcomeInstance {
    std::string instance_id;
    std::string problem_id;
    std::string statement;
    std::string answer;  // reference final answer (non-empty)
};

struct StageDatasets {
    std::vector<rewards::InstancePayload> stage1_train;
    std::vector<rewards::InstancePayload> stage1_val;
    std::vector<OutcomeInstance> stage2_train;
    std::vector<OutcomeInstance> stage2_val;
};

// Replaces every occurrence of each annotated theorem (importance order) in
// the flattened trajectory with the mask tag. Occurrences overlapping an
// already-masked span are skipped; each skip appends a line to overlap_log
// when given. Ground truths are recorded in final tag order, so substituting
// them back into masked_text reconstructs the trajectory byte-exactly.
// Throws TheoremNotFoundError when a theorem never occurs in the original
// text, EmptyAnnotationError when the theorem list is empty.
rewards::MaskedInstance apply_masking(const corpus::ProblemRecord& record,
                                      const corpus::TrajectoryAnnotation& annotation,
                                      std::vector<std::string>* overlap_log = nullptr);

// Uniformly shuffles annotation.steps (re-drawing identity permutations)
// under `seed`. shuffled_steps[i] carries the "Step i: " presentation prefix;
// true_order holds presentation indices in logical order, so
// strip_step_prefix(shuffled_steps[true_order[j]]) == annotation.steps[j].
// Throws TooFewStepsError / TooManyStepsError against the config bounds.
rewards::ReorderInstance split_and_shuffle(const corpus::ProblemRecord& record,
                                           const corpus::TrajectoryAnnotation& annotation,
                                           std::uint64_t seed,
                                           const CurationConfig& config = {});

// "Step 3: text" -> "text"; returns the input unchanged when no prefix.
std::string strip_step_prefix(const std::string& presented);

// Keeps instances with mask_count >= min_masks, order preserved.
std::vector<rewards::MaskedInstance> filter_min_masks(
    const std::vector<rewards::MaskedInstance>& instances, int min_masks);

// Builds the two-stage training datasets. Stage 1 mixes mask and reorder
// instances half-and-half (train and val separately); stage 2 draws only
// computation records with final answers whose problems appear in the
// stage-1 training set. Deterministic under config.seed. Throws
// InsufficientDataError when a requested size cannot be met.
StageDatasets build_stage_datasets(const std::vector<corpus::ProblemRecord>& records,
                                   const std::vector<corpus::TrajectoryAnnotation>& annotations,
                                   const CurationConfig& config);

// JSONL persistence for curated instances. Rows carry a "task" discriminator.
void save_instances(const std::filesystem::path& path,
                    const std::vector<rewards::InstancePayload>& instances);
std::vector<rewards::InstancePayload> load_instances(const std::filesystem::path& path);
void save_outcomes(const std::filesystem::path& path,
                   const std::vector<OutcomeInstance>& outcomes);
std::vector<OutcomeInstance> load_outcomes(const std::filesystem::path& path);

const std::string& instance_id_of(const rewards::InstancePayload& p);
const std::string& problem_id_of(const rewards::InstancePayload& p);
rewards::ProcessTaskKind kind_of(const rewards::InstancePayload& p);

}  // namespace mrrlvr::curation
