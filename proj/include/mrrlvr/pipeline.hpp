#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrrlvr/curation.hpp"
#include "mrrlvr/grpo.hpp"
#include "mrrlvr/policy.hpp"
#include "mrrlvr/tasks.hpp"

// Two-stage training orchestration. Stage one optimizes the toy policy with
// process rewards only (mask-fill and reorder batches, alternating); stage
// two starts from a stage-one checkpoint and trains with the final-outcome
// reward only. Runs are fully reproducible: (datasets, config, seed)
// determine the metrics stream byte for byte, and checkpoints restore a run
// mid-flight with a bit-identical continuation.
namespace mrrlvr::pipeline {

enum class Stage { one, two };

const char* stage_name(Stage s);  // "one" / "two"

struct StageConfig {
    Stage stage = Stage::one;
    std::filesystem::path dataset_path;    // stage-one instances / stage-two outcomes
    std::filesystem::path checkpoint_dir;  // run.json, metrics.jsonl, ckpt_*.bin live here
    grpo::GrpoConfig grpo;
    policy::ToyPolicyConfig policy;  // m=6, n_max=8, max_steps=8
    int epochs = 3;
    int batch_queries = 8;
    std::uint64_t seed = 0;
    int checkpoint_interval = 100;  // also checkpoints at step 0 and at the end

    // Stage two only: the stage-one checkpoint to start from, or from_scratch
    // for the outcome-only baseline run.
    std::filesystem::path init_checkpoint;
    bool from_scratch = false;

    // Interruption knob: stop once the global step counter reaches this value
    // (0 = run the full schedule). Deliberately excluded from the config hash
    // so an interrupted run can be resumed with a different horizon.
    long stop_after = 0;

    // Documentation-only echoes of the reference full-scale setup; they do
    // not constrain the toy tasks.
    int doc_max_prompt_tokens = 1024;
    int doc_max_response_tokens = 3072;

    void validate() const;

    // Hash of everything that shapes the metric stream: stage, schedule,
    // seed, policy dims, optimizer settings, and dataset/init-checkpoint
    // content fingerprints. Resuming under a different hash is refused.
    std::string config_hash() const;
};

struct Checkpoint {
    std::vector<double> params;
    long step = 0;
    Stage stage = Stage::one;
    std::uint64_t rng_state = 0;
    std::uint64_t rng_calls = 0;
    std::string config_hash;
};

// Versioned little-endian binary plus a JSON sidecar describing it.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& bin_path);
// Highest-step ckpt_*.bin in the directory, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);

// Builds the toy task for a curated instance. Reorder instances map their
// true order directly onto position tokens; instances whose step count falls
// outside [2, n_max] yield nullopt and are dropped. Mask-fill and outcome
// instances derive small operand pairs from stable content hashes of their
// ids, so the same instance always yields the same toy prompt.
std::optional<tasks::TaskInstance> task_from_instance(const rewards::InstancePayload& payload,
                                                      const tasks::Vocab& vocab);
tasks::TaskInstance task_from_outcome(const curation::OutcomeInstance& outcome,
                                      const tasks::Vocab& vocab);

struct RunOutcome {
    Checkpoint checkpoint;
    long steps_run = 0;           // steps executed by THIS call
    bool finished = false;        // schedule complete
    bool already_finished = false;  // resume found nothing left to do
    std::filesystem::path metrics_path;
};

// Fresh runs refuse a checkpoint directory that already holds one; use
// resume() to continue. Both write run.json before the first step.
RunOutcome run_stage1(const StageConfig& config);
RunOutcome run_stage2(const StageConfig& config, const Checkpoint& init);
RunOutcome run_stage2_baseline(const StageConfig& config);  // from_scratch outcome-only

// Continues the run found in config.checkpoint_dir from its latest
// checkpoint. The config must hash identically (ConfigDriftError otherwise);
// a finished run returns with already_finished set and changes nothing.
RunOutcome resume(const StageConfig& config);

}  // namespace mrrlvr::pipeline
