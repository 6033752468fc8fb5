// mrrlvr: curate -> score -> train -> eval -> report, one reproducible
// command-line entry point over the library.

#include <CLI11.hpp>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mrrlvr/annotation.hpp"
#include "mrrlvr/corpus.hpp"
#include "mrrlvr/curation.hpp"
#include "mrrlvr/errors.hpp"
#include "mrrlvr/eval.hpp"
#include "mrrlvr/io.hpp"
#include "mrrlvr/pipeline.hpp"
#include "mrrlvr/rewards.hpp"
#include "mrrlvr/rng.hpp"

namespace fs = std::filesystem;
using namespace mrrlvr;

namespace {

constexpr int kExitInput = 2;       // missing/invalid inputs, join failures
constexpr int kExitAnnotation = 3;  // annotation transport/format trouble
constexpr int kExitData = 4;        // not enough data to satisfy a request

// Everything a subcommand can consume, merged from built-in defaults, the
// --config JSON document, and command-line flags (strongest last).
struct Options {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;

    // curate
    std::string in_path, out_dir, annotations_path;
    bool live = false;
    curation::CurationConfig curation;

    // score
    std::vector<std::string> instance_paths;
    std::string outcomes_path, responses_path, out_path;
    int h = 7;
    double similarity_floor = 0.0;

    // train
    int stage = 1;
    std::string data_path, ckpt_dir, init_path;
    bool from_scratch = false;
    bool resume = false;
    bool paper_scale = false;
    grpo::GrpoConfig grpo;
    policy::ToyPolicyConfig policy;
    int epochs = 3;
    int batch_queries = 8;
    int checkpoint_interval = 100;
    long stop_after = 0;

    // eval / report
    std::string results_path;
    std::vector<int> ks{1, 5, 8};
    std::string from_path, report_out, report_csv;

    // annotation client knobs
    std::string model_name = "annotator-r1";
    int timeout_seconds = 30;
    int max_retries = 2;
};

[[noreturn]] void die(int code, const std::string& msg) {
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    std::exit(code);
}

long env_jobs() {
    const char* raw = std::getenv("MRLVR_JOBS");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == nullptr || *end != '\0' || v < 1) {
        die(kExitInput, std::string("MRLVR_JOBS is not a positive integer: ") + raw);
    }
    return v;
}

// Strict reader for one config section: unknown keys are typos, not noise.
class Section {
  public:
    Section(const io::json& doc, const std::string& name) : name_(name) {
        if (doc.contains(name)) {
            if (!doc.at(name).is_object()) {
                die(kExitInput, "config section \"" + name + "\" must be an object");
            }
            obj_ = doc.at(name);
        }
    }

    template <typename T>
    void read(const char* key, T& into) {
        if (!obj_.contains(key)) return;
        try {
            into = obj_.at(key).get<T>();
        } catch (const std::exception&) {
            die(kExitInput, "config key \"" + name_ + "." + key + "\" has the wrong type");
        }
        seen_.push_back(key);
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
                die(kExitInput, "unknown config key \"" + name_ + "." + it.key() + "\"");
            }
        }
    }

  private:
    std::string name_;
    io::json obj_ = io::json::object();
    std::vector<std::string> seen_;
};

void apply_config_file(Options& o, const std::string& path) {
    io::json doc;
    try {
        doc = io::json::parse(io::read_file(path));
    } catch (const std::exception& e) {
        die(kExitInput, "cannot read config " + path + ": " + e.what());
    }
    if (!doc.is_object()) die(kExitInput, "config must be a JSON object: " + path);

    static const std::vector<std::string> known{"seed",  "jobs",   "curation", "score",
                                               "grpo",  "policy", "train",    "eval",
                                               "annotation"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            die(kExitInput, "unknown config section \"" + it.key() + "\"");
        }
    }
    if (doc.contains("seed")) {
        o.seed = doc.at("seed").get<std::uint64_t>();
        o.seed_given = true;
    }
    if (doc.contains("jobs")) o.jobs = doc.at("jobs").get<int>();

    Section cur(doc, "curation");
    cur.read("min_masks", o.curation.min_masks);
    cur.read("min_steps", o.curation.min_steps);
    cur.read("max_steps", o.curation.max_steps);
    cur.read("stage1_train", o.curation.stage1_train);
    cur.read("stage1_val", o.curation.stage1_val);
    cur.read("stage2_train", o.curation.stage2_train);
    cur.read("stage2_val", o.curation.stage2_val);
    cur.finish();

    Section sc(doc, "score");
    sc.read("h", o.h);
    sc.read("similarity_floor", o.similarity_floor);
    sc.finish();

    Section g(doc, "grpo");
    g.read("clip_eps", o.grpo.clip_eps);
    g.read("kl_coef", o.grpo.kl_coef);
    g.read("group_size", o.grpo.group_size);
    g.read("learning_rate", o.grpo.learning_rate);
    g.read("std_floor", o.grpo.std_floor);
    g.read("kl_sequence_sum", o.grpo.kl_sequence_sum);
    g.read("ref_ema_decay", o.grpo.ref_ema_decay);
    g.finish();

    Section p(doc, "policy");
    p.read("m", o.policy.m);
    p.read("n_max", o.policy.n_max);
    p.read("max_steps", o.policy.max_steps);
    p.finish();

    Section t(doc, "train");
    t.read("epochs", o.epochs);
    t.read("batch_queries", o.batch_queries);
    t.read("checkpoint_interval", o.checkpoint_interval);
    t.read("stop_after", o.stop_after);
    t.finish();

    Section e(doc, "eval");
    e.read("ks", o.ks);
    e.finish();

    Section a(doc, "annotation");
    a.read("model_name", o.model_name);
    a.read("timeout_seconds", o.timeout_seconds);
    a.read("max_retries", o.max_retries);
    a.finish();
}

void resolve_seed(Options& o) {
    if (o.seed_given) return;
    std::random_device rd;
    o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    o.seed_given = true;
}

// The reproducibility banner: what this invocation will actually do.
void print_resolved(const std::string& subcommand, const io::ojson& fields) {
    io::ojson line;
    line["subcommand"] = subcommand;
    for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
    std::fprintf(stderr, "resolved config: %s\n", line.dump().c_str());
}

// Index-parallel loop with a deterministic result layout; the first worker
// exception wins and is rethrown on the caller thread.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> bail{false};
    std::exception_ptr first;
    std::mutex mu;
    auto worker = [&] {
        while (!bail.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
                bail.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

int cmd_curate(Options& o) {
    if (o.in_path.empty()) die(kExitInput, "curate needs --in <records.jsonl>");
    if (o.out_dir.empty()) die(kExitInput, "curate needs --out <dir>");
    resolve_seed(o);
    o.curation.seed = o.seed;

    io::ojson banner;
    banner["seed"] = o.seed;
    banner["in"] = o.in_path;
    banner["out"] = o.out_dir;
    banner["annotations"] = o.annotations_path.empty() ? "(generated)" : o.annotations_path;
    banner["mode"] = o.live ? "live" : "mock";
    banner["jobs"] = o.jobs;
    banner["min_masks"] = o.curation.min_masks;
    banner["min_steps"] = o.curation.min_steps;
    banner["max_steps"] = o.curation.max_steps;
    banner["stage1_train"] = o.curation.stage1_train;
    banner["stage1_val"] = o.curation.stage1_val;
    banner["stage2_train"] = o.curation.stage2_train;
    banner["stage2_val"] = o.curation.stage2_val;
    print_resolved("curate", banner);

    std::vector<corpus::ProblemRecord> records;
    try {
        records = corpus::load_records(o.in_path);
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }

    std::vector<corpus::TrajectoryAnnotation> annotations;
    long skipped_empty = 0;
    if (!o.annotations_path.empty()) {
        try {
            annotations = corpus::load_annotations(o.annotations_path);
        } catch (const Error& e) {
            die(kExitInput, e.what());
        }
    } else {
        annotation::AnnotationClient client = annotation::AnnotationClient::from_env(!o.live);
        client.model_name = o.model_name;
        client.timeout_seconds = o.timeout_seconds;
        client.max_retries = o.max_retries;
        std::vector<std::optional<corpus::TrajectoryAnnotation>> slots(records.size());
        try {
            parallel_for(records.size(), o.jobs, [&](std::size_t i) {
                corpus::TrajectoryAnnotation ann;
                ann.problem_id = records[i].id;
                bool any = false;
                try {
                    ann.theorems =
                        annotation::annotate(client, records[i], annotation::AnnotationKind::theorems)
                            .theorems;
                    any = true;
                } catch (const EmptyAnnotationError&) {
                }
                try {
                    ann.steps =
                        annotation::annotate(client, records[i], annotation::AnnotationKind::steps)
                            .steps;
                    any = true;
                } catch (const EmptyAnnotationError&) {
                }
                if (any) slots[i] = std::move(ann);
            });
        } catch (const Error& e) {
            die(kExitAnnotation, e.what());
        }
        for (auto& slot : slots) {
            if (slot.has_value()) {
                annotations.push_back(std::move(*slot));
            } else {
                ++skipped_empty;
            }
        }
    }

    curation::StageDatasets datasets;
    try {
        datasets = curation::build_stage_datasets(records, annotations, o.curation);
    } catch (const InsufficientDataError& e) {
        die(kExitData, e.what());
    } catch (const EmptyDatasetError& e) {
        die(kExitData, e.what());
    } catch (const BadArgsError& e) {
        die(kExitInput, e.what());
    } catch (const Error& e) {
        die(kExitAnnotation, e.what());  // drifted theorems, empty annotations
    }

    // Full pools for masked.jsonl / reorder.jsonl, built with the exact
    // per-record seeds the split above used.
    std::map<std::string, const corpus::TrajectoryAnnotation*> by_id;
    for (const auto& ann : annotations) by_id[ann.problem_id] = &ann;
    std::vector<rewards::MaskedInstance> mask_pool;
    std::vector<rewards::ReorderInstance> reorder_pool;
    long dropped_min_masks = 0, dropped_step_bounds = 0, unannotated = 0;
    for (const auto& record : records) {
        auto it = by_id.find(record.id);
        if (it == by_id.end()) {
            ++unannotated;
            continue;
        }
        const auto& ann = *it->second;
        if (!ann.theorems.empty()) {
            try {
                mask_pool.push_back(curation::apply_masking(record, ann));
            } catch (const Error& e) {
                die(kExitAnnotation, e.what());
            }
        }
        const int n = static_cast<int>(ann.steps.size());
        if (n >= o.curation.min_steps && n <= o.curation.max_steps) {
            reorder_pool.push_back(curation::split_and_shuffle(
                record, ann, fnv1a64(record.id, o.curation.seed), o.curation));
        } else if (!ann.steps.empty()) {
            ++dropped_step_bounds;
        }
    }
    const long before_filter = static_cast<long>(mask_pool.size());
    mask_pool = curation::filter_min_masks(mask_pool, o.curation.min_masks);
    dropped_min_masks = before_filter - static_cast<long>(mask_pool.size());

    const fs::path out(o.out_dir);
    fs::create_directories(out);
    std::vector<rewards::InstancePayload> mask_rows(mask_pool.begin(), mask_pool.end());
    std::vector<rewards::InstancePayload> reorder_rows(reorder_pool.begin(), reorder_pool.end());
    curation::save_instances(out / "masked.jsonl", mask_rows);
    curation::save_instances(out / "reorder.jsonl", reorder_rows);
    curation::save_instances(out / "stage1_train.jsonl", datasets.stage1_train);
    curation::save_instances(out / "stage1_val.jsonl", datasets.stage1_val);
    curation::save_outcomes(out / "stage2_train.jsonl", datasets.stage2_train);
    curation::save_outcomes(out / "stage2_val.jsonl", datasets.stage2_val);

    io::ojson summary;
    summary["seed"] = o.seed;
    summary["records"] = records.size();
    summary["annotated"] = annotations.size();
    summary["skipped_empty_annotation"] = skipped_empty;
    summary["unannotated"] = unannotated;
    summary["masked_kept"] = mask_pool.size();
    summary["masked_dropped_min_masks"] = dropped_min_masks;
    summary["reorder_kept"] = reorder_pool.size();
    summary["reorder_dropped_step_bounds"] = dropped_step_bounds;
    summary["stage1_train"] = datasets.stage1_train.size();
    summary["stage1_val"] = datasets.stage1_val.size();
    summary["stage2_train"] = datasets.stage2_train.size();
    summary["stage2_val"] = datasets.stage2_val.size();
    io::write_file_atomic(out / "curate_summary.json", summary.dump(2) + "\n");

    std::fprintf(stderr,
                 "curated %zu records -> %zu masked, %zu reorder "
                 "(dropped: %ld under-masked, %ld step bounds, %ld empty annotation)\n",
                 records.size(), mask_pool.size(), reorder_pool.size(), dropped_min_masks,
                 dropped_step_bounds, skipped_empty);
    std::fprintf(stderr, "stage1 train/val: %zu/%zu, stage2 train/val: %zu/%zu -> %s\n",
                 datasets.stage1_train.size(), datasets.stage1_val.size(),
                 datasets.stage2_train.size(), datasets.stage2_val.size(), out.string().c_str());
    return 0;
}

int cmd_score(Options& o) {
    if (o.instance_paths.empty() && o.outcomes_path.empty()) {
        die(kExitInput, "score needs --instances and/or --outcomes");
    }
    if (o.responses_path.empty()) die(kExitInput, "score needs --responses <jsonl>");
    if (o.out_path.empty()) die(kExitInput, "score needs --out <jsonl>");
    resolve_seed(o);

    io::ojson banner;
    banner["seed"] = o.seed;
    banner["responses"] = o.responses_path;
    banner["out"] = o.out_path;
    banner["h"] = o.h;
    banner["similarity_floor"] = o.similarity_floor;
    banner["jobs"] = o.jobs;
    print_resolved("score", banner);

    std::map<std::string, rewards::InstancePayload> instances;
    std::map<std::string, curation::OutcomeInstance> outcomes;
    try {
        for (const auto& path : o.instance_paths) {
            for (auto& inst : curation::load_instances(path)) {
                const std::string& id = curation::instance_id_of(inst);
                if (!instances.emplace(id, std::move(inst)).second) {
                    die(kExitInput, "duplicate instance_id across instance files: " + id);
                }
            }
        }
        if (!o.outcomes_path.empty()) {
            for (auto& out : curation::load_outcomes(o.outcomes_path)) {
                outcomes[out.instance_id] = std::move(out);
            }
        }
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }

    struct ResponseRow {
        std::string instance_id, kind, response;
        int line = 0;
    };
    std::vector<ResponseRow> rows;
    try {
        io::for_each_jsonl_row(o.responses_path, [&](int line, const io::json& row) {
            for (const char* field : {"instance_id", "kind", "response"}) {
                if (!row.contains(field) || !row.at(field).is_string()) {
                    throw SchemaError(line, field, "missing or non-string field");
                }
            }
            rows.push_back({row.at("instance_id").get<std::string>(),
                            row.at("kind").get<std::string>(),
                            row.at("response").get<std::string>(), line});
        });
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }

    std::vector<rewards::RewardValue> scored(rows.size());
    try {
        parallel_for(rows.size(), o.jobs, [&](std::size_t i) {
            const ResponseRow& row = rows[i];
            auto where = [&] { return " (responses line " + std::to_string(row.line) + ")"; };
            if (row.kind == "final") {
                auto it = outcomes.find(row.instance_id);
                if (it == outcomes.end()) {
                    throw BadArgsError("unknown outcome instance_id \"" + row.instance_id +
                                       "\"" + where());
                }
                scored[i] = rewards::final_reward(it->second.answer, row.response);
                return;
            }
            auto it = instances.find(row.instance_id);
            if (it == instances.end()) {
                throw BadArgsError("unknown instance_id \"" + row.instance_id + "\"" + where());
            }
            rewards::MaskEvalOptions opts;
            opts.h = o.h;
            opts.similarity_floor = o.similarity_floor;
            opts.seed = fnv1a64(row.instance_id, o.seed);
            if (row.kind == "mask") {
                const auto* masked = std::get_if<rewards::MaskedInstance>(&it->second);
                if (masked == nullptr) {
                    throw BadArgsError("instance \"" + row.instance_id +
                                       "\" is not a mask instance" + where());
                }
                auto parsed =
                    rewards::parse_mask_response(row.response, masked->mask_count, true);
                rewards::ResponsePayload payload =
                    std::holds_alternative<rewards::Malformed>(parsed)
                        ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
                        : rewards::ResponsePayload(std::get<rewards::MaskFillResponse>(parsed));
                scored[i] = rewards::process_reward(rewards::ProcessTaskKind::mask_fill,
                                                    it->second, payload, opts);
            } else if (row.kind == "reorder") {
                const auto* reorder = std::get_if<rewards::ReorderInstance>(&it->second);
                if (reorder == nullptr) {
                    throw BadArgsError("instance \"" + row.instance_id +
                                       "\" is not a reorder instance" + where());
                }
                auto parsed = rewards::parse_reorder_response(row.response, reorder->n, true);
                rewards::ResponsePayload payload =
                    std::holds_alternative<rewards::Malformed>(parsed)
                        ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
                        : rewards::ResponsePayload(std::get<rewards::ReorderResponse>(parsed));
                scored[i] = rewards::process_reward(rewards::ProcessTaskKind::reorder,
                                                    it->second, payload, opts);
            } else {
                throw BadArgsError("unknown kind \"" + row.kind + "\"" + where());
            }
        });
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }

    std::vector<io::ojson> out_rows;
    out_rows.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        io::ojson row;
        row["instance_id"] = rows[i].instance_id;
        row["reward"] = scored[i].value;
        io::ojson breakdown = io::ojson::object();
        for (const auto& [key, value] : scored[i].breakdown) breakdown[key] = value;
        row["breakdown"] = breakdown;
        if (!scored[i].note.empty()) row["note"] = scored[i].note;
        row["seed"] = o.seed;
        out_rows.push_back(std::move(row));
    }
    io::write_file_atomic(o.out_path, io::to_jsonl(out_rows));

    // Reward histogram on stderr: ten equal bins, top bin closed.
    long bins[10] = {0};
    double mean = 0.0;
    for (const auto& rv : scored) {
        const int b = std::min(9, static_cast<int>(rv.value * 10.0));
        ++bins[b];
        mean += rv.value;
    }
    if (!scored.empty()) mean /= static_cast<double>(scored.size());
    std::fprintf(stderr, "scored %zu responses, mean reward %.4f\n", scored.size(), mean);
    for (int b = 0; b < 10; ++b) {
        std::string bar(static_cast<std::size_t>(bins[b]), '#');
        if (bar.size() > 60) bar.resize(60);
        std::fprintf(stderr, "  [%.1f,%.1f%c %5ld %s\n", b / 10.0, (b + 1) / 10.0,
                     b == 9 ? ']' : ')', bins[b], bar.c_str());
    }
    return 0;
}

int cmd_train(Options& o) {
    if (o.data_path.empty()) die(kExitInput, "train needs --data <jsonl>");
    if (o.ckpt_dir.empty()) die(kExitInput, "train needs --ckpt-dir <dir>");
    resolve_seed(o);

    pipeline::StageConfig cfg;
    cfg.stage = o.stage == 1 ? pipeline::Stage::one : pipeline::Stage::two;
    cfg.dataset_path = o.data_path;
    cfg.checkpoint_dir = o.ckpt_dir;
    cfg.grpo = o.grpo;
    if (o.paper_scale) cfg.grpo.learning_rate = 1e-6;
    cfg.policy = o.policy;
    cfg.epochs = o.epochs;
    cfg.batch_queries = o.batch_queries;
    cfg.seed = o.seed;
    cfg.checkpoint_interval = o.checkpoint_interval;
    cfg.stop_after = o.stop_after;
    cfg.init_checkpoint = o.init_path;
    cfg.from_scratch = o.from_scratch;

    io::ojson banner;
    banner["seed"] = o.seed;
    banner["stage"] = o.stage;
    banner["data"] = o.data_path;
    banner["ckpt_dir"] = o.ckpt_dir;
    banner["epochs"] = cfg.epochs;
    banner["batch_queries"] = cfg.batch_queries;
    banner["group_size"] = cfg.grpo.group_size;
    banner["learning_rate"] = cfg.grpo.learning_rate;
    banner["clip_eps"] = cfg.grpo.clip_eps;
    banner["kl_coef"] = cfg.grpo.kl_coef;
    banner["policy_m"] = cfg.policy.m;
    banner["policy_n_max"] = cfg.policy.n_max;
    banner["resume"] = o.resume;
    if (o.stage == 2) {
        banner["init"] = o.from_scratch ? "(from scratch)" : o.init_path;
    }
    print_resolved("train", banner);

    pipeline::RunOutcome out;
    try {
        if (o.resume) {
            out = pipeline::resume(cfg);
        } else if (cfg.stage == pipeline::Stage::one) {
            out = pipeline::run_stage1(cfg);
        } else if (cfg.from_scratch) {
            out = pipeline::run_stage2_baseline(cfg);
        } else {
            if (o.init_path.empty()) {
                die(kExitInput, "stage 2 needs --init <checkpoint.bin> or --from-scratch");
            }
            const auto init = pipeline::load_checkpoint(o.init_path);
            out = pipeline::run_stage2(cfg, init);
        }
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }

    if (out.already_finished && out.steps_run == 0 && out.finished) {
        std::fprintf(stderr, "nothing to do: run already finished at step %ld\n",
                     out.checkpoint.step);
    }
    std::fprintf(stderr, "ran %ld steps (now at step %ld, %s); metrics: %s\n", out.steps_run,
                 out.checkpoint.step, out.finished ? "finished" : "stopped early",
                 out.metrics_path.string().c_str());
    std::printf("checkpoint: %s\n",
                (cfg.checkpoint_dir / ("ckpt_" + [&] {
                     char buf[16];
                     std::snprintf(buf, sizeof(buf), "%06ld", out.checkpoint.step);
                     return std::string(buf);
                 }() + ".bin"))
                    .string()
                    .c_str());
    return 0;
}

int cmd_eval(Options& o) {
    if (o.results_path.empty()) die(kExitInput, "eval needs --results <jsonl>");
    io::ojson banner;
    banner["results"] = o.results_path;
    io::ojson karr = io::ojson::array();
    for (int k : o.ks) karr.push_back(k);
    banner["ks"] = karr;
    if (!o.out_path.empty()) banner["out"] = o.out_path;
    print_resolved("eval", banner);

    try {
        const auto results = eval::load_results(o.results_path);
        const auto means = eval::evaluate_set(results, o.ks);
        io::ojson doc;
        doc["problems"] = results.size();
        io::ojson per_k = io::ojson::object();
        for (const auto& [k, mean] : means) {
            std::printf("pass@%d %.6f\n", k, mean);
            per_k["pass@" + std::to_string(k)] = mean;
        }
        doc["means"] = per_k;
        if (!o.out_path.empty()) io::write_file_atomic(o.out_path, doc.dump(2) + "\n");
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }
    return 0;
}

int cmd_report(Options& o) {
    if (o.from_path.empty()) die(kExitInput, "report needs --from <table.csv>");
    io::ojson banner;
    banner["from"] = o.from_path;
    if (!o.report_out.empty()) banner["out"] = o.report_out;
    if (!o.report_csv.empty()) banner["csv"] = o.report_csv;
    print_resolved("report", banner);

    try {
        const auto report = eval::BenchmarkReport::from_csv(o.from_path);
        report.validate();
        const std::string text = eval::render_report(report);
        std::fputs(text.c_str(), stdout);
        if (!o.report_out.empty()) io::write_file_atomic(o.report_out, text);
        if (!o.report_csv.empty()) io::write_file_atomic(o.report_csv, report.to_csv());
    } catch (const Error& e) {
        die(kExitInput, e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;

    // The config file is weaker than flags, so apply it before CLI11 binds
    // flag values over the struct.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            apply_config_file(o, argv[i + 1]);
            break;
        }
        if (arg.rfind("--config=", 0) == 0) {
            apply_config_file(o, arg.substr(9));
            break;
        }
    }
    if (const long jobs = env_jobs(); jobs > 0 && o.jobs == 1) {
        o.jobs = static_cast<int>(jobs);
    }

    CLI::App app{"mrrlvr: masked-and-reordered RLVR at desk scale"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override its values)");

    std::uint64_t seed_flag = 0;
    auto bind_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed_flag, "deterministic seed (drawn and printed if omitted)");
        sub->add_option("--jobs", o.jobs, "worker threads (also MRLVR_JOBS)")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* curate = app.add_subcommand("curate", "annotate records and build datasets");
    curate->add_option("--in", o.in_path, "problem records JSONL");
    curate->add_option("--out", o.out_dir, "output directory for dataset files");
    curate->add_option("--annotations", o.annotations_path,
                       "precomputed annotations JSONL (skips the annotation client)");
    auto* mock_flag = curate->add_flag("--mock", "use the offline rule-based annotator (default)");
    curate->add_flag("--live", o.live,
                     "POST curation prompts to MRLVR_ANNOT_URL with MRLVR_ANNOT_KEY")
        ->excludes(mock_flag);
    curate->add_option("--min-masks", o.curation.min_masks, "drop instances with fewer masks");
    curate->add_option("--min-steps", o.curation.min_steps, "reorder lower bound");
    curate->add_option("--max-steps", o.curation.max_steps, "reorder upper bound");
    curate->add_option("--stage1-train", o.curation.stage1_train, "instances (0 = everything)");
    curate->add_option("--stage1-val", o.curation.stage1_val, "instances");
    curate->add_option("--stage2-train", o.curation.stage2_train, "problems (0 = everything)");
    curate->add_option("--stage2-val", o.curation.stage2_val, "problems");
    bind_common(curate);

    CLI::App* score = app.add_subcommand("score", "score responses against curated instances");
    score->add_option("--instances", o.instance_paths,
                      "curated mask/reorder instance files (repeatable)");
    score->add_option("--outcomes", o.outcomes_path, "outcome instances for kind=final");
    score->add_option("--responses", o.responses_path,
                      "JSONL of {instance_id, kind, response}");
    score->add_option("--out", o.out_path, "rewards JSONL to write");
    score->add_option("--eval-h", o.h, "masks evaluated per instance")
        ->check(CLI::PositiveNumber);
    score->add_option("--similarity-floor", o.similarity_floor,
                      "clamp fallback similarities below this to 0");
    bind_common(score);

    CLI::App* train = app.add_subcommand("train", "run a training stage");
    train->add_option("--stage", o.stage, "1 = process rewards, 2 = outcome rewards")
        ->check(CLI::IsMember({1, 2}));
    train->add_option("--data", o.data_path, "curated dataset JSONL");
    train->add_option("--ckpt-dir", o.ckpt_dir, "checkpoint/metrics directory");
    train->add_option("--init", o.init_path, "stage-one checkpoint to start stage two from");
    train->add_flag("--from-scratch", o.from_scratch, "outcome-only baseline initialization");
    train->add_flag("--resume", o.resume, "continue the run in --ckpt-dir");
    train->add_flag("--paper-scale", o.paper_scale,
                    "use the reference learning rate 1e-6 instead of the toy default");
    train->add_option("--epochs", o.epochs, "passes over the dataset");
    train->add_option("--batch", o.batch_queries, "queries per step");
    train->add_option("--interval", o.checkpoint_interval, "steps between checkpoints");
    train->add_option("--stop-after", o.stop_after, "halt at this global step (0 = run out)");
    train->add_option("--lr", o.grpo.learning_rate, "gradient-ascent step size");
    train->add_option("--clip-eps", o.grpo.clip_eps, "PPO clip width");
    train->add_option("--kl-coef", o.grpo.kl_coef, "KL penalty weight");
    train->add_option("--group", o.grpo.group_size, "rollouts per query");
    train->add_option("--std-floor", o.grpo.std_floor, "reward-std floor for advantages");
    train->add_flag("--kl-seq-sum", o.grpo.kl_sequence_sum,
                    "sum KL over tokens instead of averaging");
    train->add_option("--ema-decay", o.grpo.ref_ema_decay,
                      "reference EMA decay (0 = fixed reference)");
    train->add_option("--m", o.policy.m, "content vocabulary size");
    train->add_option("--n-max", o.policy.n_max, "longest reorder sequence");
    train->add_option("--max-steps", o.policy.max_steps, "response length cap");
    bind_common(train);

    CLI::App* eval_cmd = app.add_subcommand("eval", "pass@k means over sample results");
    eval_cmd->add_option("--results", o.results_path, "JSONL of {problem_id, n, c}");
    eval_cmd->add_option("--k", o.ks, "pass@k values, comma separated")->delimiter(',');
    eval_cmd->add_option("--out", o.out_path, "write means as JSON here");

    CLI::App* report = app.add_subcommand("report", "render the benchmark gain table");
    report->add_option("--from", o.from_path, "benchmark means CSV");
    report->add_option("--out", o.report_out, "also write the rendered table here");
    report->add_option("--csv", o.report_csv, "write the table with recomputed gains as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    for (CLI::App* sub : {curate, score, train}) {
        if (sub->parsed() && sub->count("--seed") > 0) {
            o.seed = seed_flag;
            o.seed_given = true;
        }
    }

    try {
        if (curate->parsed()) return cmd_curate(o);
        if (score->parsed()) return cmd_score(o);
        if (train->parsed()) return cmd_train(o);
        if (eval_cmd->parsed()) return cmd_eval(o);
        if (report->parsed()) return cmd_report(o);
    } catch (const std::exception& e) {
        die(1, e.what());
    }
    return 0;
}
