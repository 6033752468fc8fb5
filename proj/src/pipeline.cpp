#include "mrrlvr/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/io.hpp"
#include "mrrlvr/rng.hpp"

namespace mrrlvr::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'M', 'R', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr const char* kCodeVersion = "mrrlvr 0.1.0";

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw CheckpointError("checkpoint file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw CheckpointError("checkpoint file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
}

std::string iso_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string ckpt_name(long step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06ld.bin", step);
    return buf;
}

const char* reward_kind_tag(tasks::TaskKind kind) {
    switch (kind) {
        case tasks::TaskKind::mask_fill: return "mask";
        case tasks::TaskKind::reorder: return "reorder";
        case tasks::TaskKind::outcome: return "final";
    }
    return "?";
}

struct TaskPools {
    // Stage one: pools[0] = mask, pools[1] = reorder. Stage two: pools[0].
    std::vector<std::vector<tasks::TaskInstance>> pools;
    long total() const {
        long t = 0;
        for (const auto& p : pools) t += static_cast<long>(p.size());
        return t;
    }
};

TaskPools load_pools(const StageConfig& cfg) {
    if (!fs::exists(cfg.dataset_path)) {
        throw DatasetMissingError("dataset not found: " + cfg.dataset_path.string());
    }
    tasks::Vocab vocab;
    vocab.m = cfg.policy.m;
    vocab.n_max = cfg.policy.n_max;
    TaskPools out;
    if (cfg.stage == Stage::one) {
        auto instances = curation::load_instances(cfg.dataset_path);
        out.pools.resize(2);
        for (const auto& inst : instances) {
            auto task = task_from_instance(inst, vocab);
            if (!task.has_value()) continue;  // reorder length outside the toy horizon
            const int slot = task->kind == tasks::TaskKind::mask_fill ? 0 : 1;
            out.pools[static_cast<std::size_t>(slot)].push_back(std::move(*task));
        }
        if (out.pools[0].empty()) {
            throw DatasetMissingError("stage-one dataset has no usable mask instances: " +
                                      cfg.dataset_path.string());
        }
        if (out.pools[1].empty()) {
            throw DatasetMissingError("stage-one dataset has no usable reorder instances: " +
                                      cfg.dataset_path.string());
        }
    } else {
        auto outcomes = curation::load_outcomes(cfg.dataset_path);
        out.pools.resize(1);
        for (const auto& o : outcomes) out.pools[0].push_back(task_from_outcome(o, vocab));
        if (out.pools[0].empty()) {
            throw DatasetMissingError("stage-two dataset has no outcome instances: " +
                                      cfg.dataset_path.string());
        }
    }
    return out;
}

long scheduled_steps(const StageConfig& cfg, const TaskPools& pools) {
    const long total = pools.total();
    const long per_epoch = (total + cfg.batch_queries - 1) / cfg.batch_queries;
    return static_cast<long>(cfg.epochs) * per_epoch;
}

// Deterministic batch for the 0-based step index: stage one alternates the
// mask and reorder pools (mask first, matching the dataset's mask-heavy
// split); each pool is consumed sequentially with wraparound.
std::vector<tasks::TaskInstance> batch_for(const TaskPools& pools, const StageConfig& cfg,
                                           long index) {
    const bool two_pools = pools.pools.size() == 2;
    const std::size_t pool_id = two_pools ? static_cast<std::size_t>(index % 2) : 0;
    const long pool_index = two_pools ? index / 2 : index;
    const auto& pool = pools.pools[pool_id];
    std::vector<tasks::TaskInstance> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_queries));
    const std::size_t start =
        static_cast<std::size_t>((pool_index * cfg.batch_queries) % static_cast<long>(pool.size()));
    for (int j = 0; j < cfg.batch_queries; ++j) {
        batch.push_back(pool[(start + static_cast<std::size_t>(j)) % pool.size()]);
    }
    return batch;
}

io::ojson metrics_row(long step, const StageConfig& cfg,
                      const std::vector<tasks::TaskInstance>& batch,
                      const grpo::StepMetrics& m) {
    io::ojson row;
    row["step"] = step;
    row["stage"] = cfg.stage == Stage::one ? 1 : 2;
    std::vector<std::string> kinds;
    for (const auto& task : batch) {
        const std::string tag = reward_kind_tag(task.kind);
        if (std::find(kinds.begin(), kinds.end(), tag) == kinds.end()) kinds.push_back(tag);
    }
    row["reward_kinds"] = kinds;
    row["mean_reward"] = m.mean_reward;
    row["objective"] = m.objective;
    row["kl"] = m.kl;
    row["clip_fraction"] = m.clip_fraction;
    return row;
}

void write_manifest(const StageConfig& cfg, const std::string& config_hash) {
    io::ojson m;
    m["run_id"] = config_hash;
    m["code_version"] = kCodeVersion;
    m["started_at"] = iso_now();
    m["stage"] = stage_name(cfg.stage);
    io::ojson c;
    c["epochs"] = cfg.epochs;
    c["batch_queries"] = cfg.batch_queries;
    c["seed"] = cfg.seed;
    c["checkpoint_interval"] = cfg.checkpoint_interval;
    c["grpo"] = {{"clip_eps", cfg.grpo.clip_eps},
                 {"kl_coef", cfg.grpo.kl_coef},
                 {"group_size", cfg.grpo.group_size},
                 {"learning_rate", cfg.grpo.learning_rate},
                 {"std_floor", cfg.grpo.std_floor},
                 {"kl_sequence_sum", cfg.grpo.kl_sequence_sum},
                 {"ref_ema_decay", cfg.grpo.ref_ema_decay}};
    c["policy"] = {{"m", cfg.policy.m},
                   {"n_max", cfg.policy.n_max},
                   {"max_steps", cfg.policy.max_steps}};
    c["reference_setup"] = {{"max_prompt_tokens", cfg.doc_max_prompt_tokens},
                            {"max_response_tokens", cfg.doc_max_response_tokens}};
    m["config"] = c;
    m["dataset"] = {{"path", cfg.dataset_path.string()},
                    {"fingerprint", io::file_fingerprint(cfg.dataset_path)}};
    if (cfg.stage == Stage::two) {
        if (cfg.from_scratch) {
            m["baseline"] = "outcome-only";
        } else {
            m["init_checkpoint"] = {{"path", cfg.init_checkpoint.string()},
                                    {"fingerprint", io::file_fingerprint(cfg.init_checkpoint)}};
        }
    }
    io::write_file_atomic(cfg.checkpoint_dir / "run.json", m.dump(2) + "\n");
}

// Keeps metric rows up to and including `step`, verifying the stream is the
// contiguous prefix 1..step the checkpoint promises.
void truncate_metrics(const fs::path& path, long step) {
    if (!fs::exists(path)) {
        if (step == 0) return;
        throw CheckpointError("metrics stream missing for resume: " + path.string());
    }
    std::istringstream in(io::read_file(path));
    std::string line, kept;
    long expected = 1;
    while (std::getline(in, line) && expected <= step) {
        io::json row;
        try {
            row = io::json::parse(line);
        } catch (const std::exception&) {
            throw CheckpointError("metrics stream is corrupt at row " +
                                  std::to_string(expected));
        }
        if (!row.contains("step") || row["step"].get<long>() != expected) {
            throw CheckpointError("metrics stream is not contiguous at row " +
                                  std::to_string(expected));
        }
        kept += line;
        kept += '\n';
        ++expected;
    }
    if (expected != step + 1) {
        throw CheckpointError("metrics stream ends at row " + std::to_string(expected - 1) +
                              " but the checkpoint is at step " + std::to_string(step));
    }
    io::write_file_atomic(path, kept);
}

std::vector<double> reference_params(const StageConfig& cfg) {
    policy::ToyPolicy zero(cfg.policy);
    if (cfg.stage == Stage::one || cfg.from_scratch) return zero.params();
    Checkpoint init = load_checkpoint(cfg.init_checkpoint);
    if (init.stage != Stage::one) {
        throw StageMismatchError("stage-two init checkpoint must come from stage one");
    }
    if (init.params.size() != zero.params().size()) {
        throw CheckpointError("init checkpoint has " + std::to_string(init.params.size()) +
                              " parameters, policy expects " +
                              std::to_string(zero.params().size()));
    }
    return init.params;
}

RunOutcome drive(const StageConfig& cfg, const Checkpoint& start, bool fresh) {
    const TaskPools pools = load_pools(cfg);
    const long scheduled = scheduled_steps(cfg, pools);
    const std::string hash = cfg.config_hash();
    const fs::path metrics_path = cfg.checkpoint_dir / "metrics.jsonl";

    policy::ToyPolicy pi(cfg.policy);
    if (start.params.size() != pi.params().size()) {
        throw CheckpointError("checkpoint has " + std::to_string(start.params.size()) +
                              " parameters, policy expects " +
                              std::to_string(pi.params().size()));
    }
    pi.params() = start.params;
    policy::ToyPolicy ref(cfg.policy);
    ref.params() = reference_params(cfg);

    Rng rng(0);
    rng.restore(start.rng_state, start.rng_calls);

    fs::create_directories(cfg.checkpoint_dir);
    if (fresh) {
        write_manifest(cfg, hash);
        io::write_file_atomic(metrics_path, "");
        save_checkpoint(start, cfg.checkpoint_dir);
    } else {
        truncate_metrics(metrics_path, start.step);
    }

    const long end_step =
        cfg.stop_after > 0 ? std::min(scheduled, cfg.stop_after) : scheduled;
    RunOutcome out;
    out.metrics_path = metrics_path;
    if (start.step >= end_step) {
        out.checkpoint = start;
        out.finished = start.step >= scheduled;
        out.already_finished = true;
        return out;
    }

    std::ofstream metrics(metrics_path, std::ios::app | std::ios::binary);
    if (!metrics) throw IoError("cannot open metrics stream: " + metrics_path.string());

    long step = start.step;
    while (step < end_step) {
        const auto batch = batch_for(pools, cfg, step);
        const auto m = grpo::train_step(pi, ref, batch, cfg.grpo, rng);
        ++step;
        metrics << metrics_row(step, cfg, batch, m).dump() << "\n";
        metrics.flush();
        ++out.steps_run;
        if (step % cfg.checkpoint_interval == 0 || step == end_step) {
            Checkpoint ck;
            ck.params = pi.params();
            ck.step = step;
            ck.stage = cfg.stage;
            ck.rng_state = rng.state();
            ck.rng_calls = rng.calls();
            ck.config_hash = hash;
            save_checkpoint(ck, cfg.checkpoint_dir);
            out.checkpoint = std::move(ck);
        }
    }
    out.finished = step >= scheduled;
    return out;
}

Checkpoint fresh_checkpoint(const StageConfig& cfg, std::vector<double> params) {
    Checkpoint ck;
    ck.params = std::move(params);
    ck.step = 0;
    ck.stage = cfg.stage;
    Rng rng(fnv1a64(cfg.stage == Stage::one ? "stage1" : "stage2", cfg.seed));
    ck.rng_state = rng.state();
    ck.rng_calls = rng.calls();
    ck.config_hash = cfg.config_hash();
    return ck;
}

void refuse_existing_run(const StageConfig& cfg) {
    if (latest_checkpoint(cfg.checkpoint_dir).has_value()) {
        throw BadArgsError("checkpoint dir already contains a run (use resume): " +
                           cfg.checkpoint_dir.string());
    }
}

}  // namespace

const char* stage_name(Stage s) { return s == Stage::one ? "one" : "two"; }

void StageConfig::validate() const {
    grpo.validate();
    if (dataset_path.empty()) throw BadArgsError("dataset_path must be set");
    if (checkpoint_dir.empty()) throw BadArgsError("checkpoint_dir must be set");
    if (epochs < 0) throw BadArgsError("epochs must be >= 0");
    if (batch_queries < 1) throw BadArgsError("batch_queries must be >= 1");
    if (checkpoint_interval < 1) throw BadArgsError("checkpoint_interval must be >= 1");
    if (stop_after < 0) throw BadArgsError("stop_after must be >= 0");
    if (stage == Stage::one) {
        if (from_scratch || !init_checkpoint.empty()) {
            throw BadArgsError("stage one takes neither init_checkpoint nor from_scratch");
        }
    } else {
        if (from_scratch && !init_checkpoint.empty()) {
            throw BadArgsError("from_scratch and init_checkpoint are mutually exclusive");
        }
        if (!from_scratch && init_checkpoint.empty()) {
            throw BadArgsError("stage two needs init_checkpoint (or from_scratch)");
        }
    }
}

std::string StageConfig::config_hash() const {
    if (!fs::exists(dataset_path)) {
        throw DatasetMissingError("dataset not found: " + dataset_path.string());
    }
    if (stage == Stage::two && !from_scratch && !fs::exists(init_checkpoint)) {
        throw CheckpointError("init checkpoint not found: " + init_checkpoint.string());
    }
    io::ojson j;
    j["stage"] = stage_name(stage);
    j["epochs"] = epochs;
    j["batch_queries"] = batch_queries;
    j["seed"] = seed;
    j["grpo"] = {{"clip_eps", grpo.clip_eps},
                 {"kl_coef", grpo.kl_coef},
                 {"group_size", grpo.group_size},
                 {"learning_rate", grpo.learning_rate},
                 {"std_floor", grpo.std_floor},
                 {"kl_sequence_sum", grpo.kl_sequence_sum},
                 {"ref_ema_decay", grpo.ref_ema_decay}};
    j["policy"] = {{"m", policy.m}, {"n_max", policy.n_max}, {"max_steps", policy.max_steps}};
    j["dataset"] = io::file_fingerprint(dataset_path);
    j["from_scratch"] = from_scratch;
    j["init"] = (stage == Stage::two && !from_scratch)
                    ? io::file_fingerprint(init_checkpoint)
                    : std::string();
    const std::string dump = j.dump();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dump)));
    return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
    fs::create_directories(dir);
    std::string blob;
    blob.append(kMagic, 4);
    put_u32(blob, kFormatVersion);
    put_u32(blob, ckpt.stage == Stage::one ? 1u : 2u);
    put_u64(blob, static_cast<std::uint64_t>(ckpt.step));
    put_u64(blob, ckpt.rng_state);
    put_u64(blob, ckpt.rng_calls);
    put_u64(blob, ckpt.params.size());
    for (double p : ckpt.params) put_u64(blob, std::bit_cast<std::uint64_t>(p));
    put_u64(blob, ckpt.config_hash.size());
    blob += ckpt.config_hash;

    const std::string base = ckpt_name(ckpt.step);
    io::write_file_atomic(dir / base, blob);

    io::ojson side;
    side["format_version"] = kFormatVersion;
    side["stage"] = stage_name(ckpt.stage);
    side["step"] = ckpt.step;
    side["param_count"] = ckpt.params.size();
    side["config_hash"] = ckpt.config_hash;
    fs::path side_path = dir / base;
    side_path.replace_extension(".json");
    io::write_file_atomic(side_path, side.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& bin_path) {
    if (!fs::exists(bin_path)) {
        throw CheckpointError("checkpoint not found: " + bin_path.string());
    }
    const std::string blob = io::read_file(bin_path);
    std::size_t pos = 0;
    if (blob.size() < 4 || blob.compare(0, 4, kMagic, 4) != 0) {
        throw CheckpointError("bad checkpoint magic in " + bin_path.string());
    }
    pos = 4;
    const std::uint32_t version = get_u32(blob, pos);
    if (version != kFormatVersion) {
        throw CheckpointError("unsupported checkpoint format version " +
                              std::to_string(version));
    }
    const std::uint32_t stage_code = get_u32(blob, pos);
    if (stage_code != 1 && stage_code != 2) {
        throw CheckpointError("bad stage code in " + bin_path.string());
    }
    Checkpoint ck;
    ck.stage = stage_code == 1 ? Stage::one : Stage::two;
    ck.step = static_cast<long>(get_u64(blob, pos));
    ck.rng_state = get_u64(blob, pos);
    ck.rng_calls = get_u64(blob, pos);
    const std::uint64_t count = get_u64(blob, pos);
    if (count > (blob.size() - pos) / 8) throw CheckpointError("checkpoint file truncated");
    ck.params.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ck.params.push_back(std::bit_cast<double>(get_u64(blob, pos)));
    }
    const std::uint64_t hash_len = get_u64(blob, pos);
    if (pos + hash_len != blob.size()) {
        throw CheckpointError("checkpoint trailer size mismatch in " + bin_path.string());
    }
    ck.config_hash = blob.substr(pos, hash_len);
    return ck;
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
    if (!fs::is_directory(dir)) return std::nullopt;
    std::optional<fs::path> best;
    long best_step = -1;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() != 15 || name.rfind("ckpt_", 0) != 0 ||
            name.compare(11, 4, ".bin") != 0) {
            continue;
        }
        const std::string digits = name.substr(5, 6);
        if (!std::all_of(digits.begin(), digits.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            continue;
        }
        const long step = std::stol(digits);
        if (step > best_step) {
            best_step = step;
            best = entry.path();
        }
    }
    return best;
}

std::optional<tasks::TaskInstance> task_from_instance(const rewards::InstancePayload& payload,
                                                      const tasks::Vocab& vocab) {
    if (std::holds_alternative<rewards::ReorderInstance>(payload)) {
        const auto& inst = std::get<rewards::ReorderInstance>(payload);
        const int n = static_cast<int>(inst.true_order.size());
        if (n < 2 || n > vocab.n_max) return std::nullopt;  // outside the toy horizon
        return tasks::make_reorder_task(vocab, inst.instance_id, inst.true_order);
    }
    const auto& inst = std::get<rewards::MaskedInstance>(payload);
    const std::uint64_t h = fnv1a64(inst.instance_id);
    const int a = static_cast<int>(h % static_cast<std::uint64_t>(vocab.m));
    const int d = static_cast<int>((h >> 8) % static_cast<std::uint64_t>(vocab.m));
    return tasks::make_fill_task(vocab, inst.instance_id, a, d);
}

tasks::TaskInstance task_from_outcome(const curation::OutcomeInstance& outcome,
                                      const tasks::Vocab& vocab) {
    const std::uint64_t h = fnv1a64(outcome.instance_id);
    const int a = static_cast<int>(h % static_cast<std::uint64_t>(vocab.m));
    const int b = static_cast<int>((h >> 8) % static_cast<std::uint64_t>(vocab.m));
    return tasks::make_outcome_task(vocab, outcome.instance_id, a, b);
}

RunOutcome run_stage1(const StageConfig& config) {
    config.validate();
    if (config.stage != Stage::one) throw BadArgsError("run_stage1 needs stage one config");
    refuse_existing_run(config);
    policy::ToyPolicy zero(config.policy);
    return drive(config, fresh_checkpoint(config, zero.params()), /*fresh=*/true);
}

RunOutcome run_stage2(const StageConfig& config, const Checkpoint& init) {
    config.validate();
    if (config.stage != Stage::two) throw BadArgsError("run_stage2 needs stage two config");
    if (config.from_scratch) {
        throw BadArgsError("run_stage2 with an init checkpoint contradicts from_scratch");
    }
    if (init.stage != Stage::one) {
        throw StageMismatchError("stage-two training must start from a stage-one checkpoint");
    }
    refuse_existing_run(config);
    return drive(config, fresh_checkpoint(config, init.params), /*fresh=*/true);
}

RunOutcome run_stage2_baseline(const StageConfig& config) {
    config.validate();
    if (config.stage != Stage::two || !config.from_scratch) {
        throw BadArgsError("baseline run needs stage two with from_scratch set");
    }
    refuse_existing_run(config);
    policy::ToyPolicy zero(config.policy);
    return drive(config, fresh_checkpoint(config, zero.params()), /*fresh=*/true);
}

RunOutcome resume(const StageConfig& config) {
    config.validate();
    const auto latest = latest_checkpoint(config.checkpoint_dir);
    if (!latest.has_value()) {
        throw CheckpointError("nothing to resume in " + config.checkpoint_dir.string());
    }
    Checkpoint ck = load_checkpoint(*latest);
    if (ck.stage != config.stage) {
        throw StageMismatchError(std::string("checkpoint is stage ") + stage_name(ck.stage) +
                                 " but the config says stage " + stage_name(config.stage));
    }
    const std::string hash = config.config_hash();
    if (ck.config_hash != hash) {
        throw ConfigDriftError("checkpoint config hash " + ck.config_hash +
                               " does not match current config " + hash);
    }
    return drive(config, ck, /*fresh=*/false);
}

}  // namespace mrrlvr::pipeline
