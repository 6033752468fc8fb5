#include "mrrlvr/curation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/io.hpp"
#include "mrrlvr/rng.hpp"

namespace mrrlvr::curation {

using corpus::ProblemRecord;
using corpus::TrajectoryAnnotation;
using rewards::InstancePayload;
using rewards::MaskedInstance;
using rewards::ReorderInstance;

void CurationConfig::validate() const {
    if (min_masks < 1) throw BadArgsError("min_masks must be >= 1");
    if (min_steps < 3) throw BadArgsError("min_steps must be >= 3");
    if (max_steps < min_steps) throw BadArgsError("max_steps must be >= min_steps");
    if (stage1_train < 0 || stage1_val < 0 || stage2_train < 0 || stage2_val < 0) {
        throw BadArgsError("stage sizes must be non-negative");
    }
}

rewards::MaskedInstance apply_masking(const ProblemRecord& record,
                                      const TrajectoryAnnotation& annotation,
                                      std::vector<std::string>* overlap_log) {
    if (annotation.theorems.empty()) {
        throw EmptyAnnotationError("no theorems annotated for " + record.id);
    }
    const std::string flat = corpus::flatten_trajectory(record);

    // Accepted mask spans over the ORIGINAL text, kept disjoint. Later
    // (less important) theorems may not carve up a span already claimed.
    struct Span {
        std::size_t begin, end;
    };
    std::vector<Span> spans;
    auto overlaps = [&](std::size_t b, std::size_t e) {
        for (const Span& s : spans) {
            if (b < s.end && s.begin < e) return true;
        }
        return false;
    };

    for (const std::string& theorem : annotation.theorems) {
        if (theorem.empty()) throw EmptyAnnotationError("empty theorem string for " + record.id);
        bool found_any = false;
        std::size_t pos = 0;
        while ((pos = flat.find(theorem, pos)) != std::string::npos) {
            found_any = true;
            std::size_t end = pos + theorem.size();
            if (overlaps(pos, end)) {
                if (overlap_log != nullptr) {
                    overlap_log->push_back("overlap conflict: \"" + theorem +
                                           "\" at offset " + std::to_string(pos) +
                                           " in " + record.id + " skipped");
                }
                ++pos;  // keep scanning past the conflict
                continue;
            }
            spans.push_back({pos, end});
            pos = end;
        }
        if (!found_any) throw TheoremNotFoundError(theorem);
    }

    std::sort(spans.begin(), spans.end(),
              [](const Span& a, const Span& b) { return a.begin < b.begin; });

    MaskedInstance out;
    out.instance_id = record.id + "#mask";
    out.problem_id = record.id;
    out.mask_count = static_cast<int>(spans.size());
    std::size_t cursor = 0;
    for (const Span& s : spans) {
        out.masked_text.append(flat, cursor, s.begin - cursor);
        out.masked_text += kMaskTag;
        out.ground_truths.push_back(flat.substr(s.begin, s.end - s.begin));
        cursor = s.end;
    }
    out.masked_text.append(flat, cursor, flat.size() - cursor);
    return out;
}

rewards::ReorderInstance split_and_shuffle(const ProblemRecord& record,
                                           const TrajectoryAnnotation& annotation,
                                           std::uint64_t seed,
                                           const CurationConfig& config) {
    const int n = static_cast<int>(annotation.steps.size());
    if (n < config.min_steps) {
        throw TooFewStepsError(record.id + " has " + std::to_string(n) + " steps, need >= " +
                               std::to_string(config.min_steps));
    }
    if (n > config.max_steps) {
        throw TooManyStepsError(record.id + " has " + std::to_string(n) + " steps, cap is " +
                                std::to_string(config.max_steps));
    }

    Rng rng(seed);
    // perm[i] = logical step shown at presentation slot i; identity re-drawn.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        rng.shuffle(perm);
    } while (std::is_sorted(perm.begin(), perm.end()));

    ReorderInstance out;
    out.instance_id = record.id + "#reorder";
    out.problem_id = record.id;
    out.n = n;
    out.true_order.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const int logical = perm[static_cast<std::size_t>(i)];
        out.shuffled_steps.push_back(kStepPrefix + std::to_string(i) + ": " +
                                     annotation.steps[static_cast<std::size_t>(logical)]);
        out.true_order[static_cast<std::size_t>(logical)] = i;
    }
    return out;
}

std::string strip_step_prefix(const std::string& presented) {
    const std::string prefix = kStepPrefix;
    if (presented.rfind(prefix, 0) != 0) return presented;
    std::size_t i = prefix.size();
    std::size_t digits = 0;
    while (i < presented.size() && presented[i] >= '0' && presented[i] <= '9') {
        ++i;
        ++digits;
    }
    if (digits == 0 || i + 1 >= presented.size() || presented[i] != ':' ||
        presented[i + 1] != ' ') {
        return presented;
    }
    return presented.substr(i + 2);
}

std::vector<rewards::MaskedInstance> filter_min_masks(
    const std::vector<MaskedInstance>& instances, int min_masks) {
    std::vector<MaskedInstance> kept;
    for (const auto& inst : instances) {
        if (inst.mask_count >= min_masks) kept.push_back(inst);
    }
    return kept;
}

const std::string& instance_id_of(const InstancePayload& p) {
    if (const auto* m = std::get_if<MaskedInstance>(&p)) return m->instance_id;
    return std::get<ReorderInstance>(p).instance_id;
}

const std::string& problem_id_of(const InstancePayload& p) {
    if (const auto* m = std::get_if<MaskedInstance>(&p)) return m->problem_id;
    return std::get<ReorderInstance>(p).problem_id;
}

rewards::ProcessTaskKind kind_of(const InstancePayload& p) {
    return std::holds_alternative<MaskedInstance>(p) ? rewards::ProcessTaskKind::mask_fill
                                                     : rewards::ProcessTaskKind::reorder;
}

StageDatasets build_stage_datasets(const std::vector<ProblemRecord>& records,
                                   const std::vector<TrajectoryAnnotation>& annotations,
                                   const CurationConfig& config) {
    config.validate();
    if (records.empty()) throw EmptyDatasetError("no records to curate");

    std::map<std::string, const TrajectoryAnnotation*> by_id;
    for (const auto& ann : annotations) by_id[ann.problem_id] = &ann;
    std::map<std::string, const ProblemRecord*> record_by_id;

    std::vector<MaskedInstance> mask_pool;
    std::vector<ReorderInstance> reorder_pool;
    for (const auto& record : records) {
        record_by_id[record.id] = &record;
        auto it = by_id.find(record.id);
        if (it == by_id.end()) continue;
        const TrajectoryAnnotation& ann = *it->second;
        if (!ann.theorems.empty()) {
            mask_pool.push_back(apply_masking(record, ann));
        }
        const int n = static_cast<int>(ann.steps.size());
        if (n >= config.min_steps && n <= config.max_steps) {
            reorder_pool.push_back(
                split_and_shuffle(record, ann, fnv1a64(record.id, config.seed), config));
        }
    }
    mask_pool = filter_min_masks(mask_pool, config.min_masks);

    // Stage 1: half mask, half reorder, train and val separately. The mask
    // side takes the odd instance when a requested size is odd. A requested
    // size of 0 takes everything the validation split leaves behind.
    const int val_mask = config.stage1_val - config.stage1_val / 2;
    const int val_reorder = config.stage1_val / 2;
    const int train_mask =
        config.stage1_train == 0
            ? std::max(0, static_cast<int>(mask_pool.size()) - val_mask)
            : config.stage1_train - config.stage1_train / 2;
    const int train_reorder =
        config.stage1_train == 0
            ? std::max(0, static_cast<int>(reorder_pool.size()) - val_reorder)
            : config.stage1_train / 2;

    if (static_cast<int>(mask_pool.size()) < train_mask + val_mask) {
        throw InsufficientDataError("stage1", train_mask + val_mask,
                                    static_cast<long>(mask_pool.size()));
    }
    if (static_cast<int>(reorder_pool.size()) < train_reorder + val_reorder) {
        throw InsufficientDataError("stage1", train_reorder + val_reorder,
                                    static_cast<long>(reorder_pool.size()));
    }

    Rng mask_rng(fnv1a64("mask", config.seed));
    Rng reorder_rng(fnv1a64("reorder", config.seed));
    mask_rng.shuffle(mask_pool);
    reorder_rng.shuffle(reorder_pool);

    StageDatasets out;
    auto interleave = [](std::vector<InstancePayload>& dst,
                         const std::vector<MaskedInstance>& masks, int mask_from, int mask_n,
                         const std::vector<ReorderInstance>& orders, int order_from,
                         int order_n) {
        int mi = 0, ri = 0;
        while (mi < mask_n || ri < order_n) {
            if (mi < mask_n) dst.emplace_back(masks[static_cast<std::size_t>(mask_from + mi++)]);
            if (ri < order_n) {
                dst.emplace_back(orders[static_cast<std::size_t>(order_from + ri++)]);
            }
        }
    };
    interleave(out.stage1_train, mask_pool, 0, train_mask, reorder_pool, 0, train_reorder);
    interleave(out.stage1_val, mask_pool, train_mask, val_mask, reorder_pool, train_reorder,
               val_reorder);

    // Stage 2 draws verifiable computation problems from the stage-1 train set.
    std::set<std::string> train_problems;
    for (const auto& inst : out.stage1_train) train_problems.insert(problem_id_of(inst));
    std::vector<const ProblemRecord*> stage2_pool;
    for (const auto& id : train_problems) {
        const ProblemRecord* rec = record_by_id.at(id);
        if (rec->kind == corpus::ProblemKind::computation && !rec->final_answer.empty()) {
            stage2_pool.push_back(rec);
        }
    }
    const int stage2_train =
        config.stage2_train == 0
            ? std::max(0, static_cast<int>(stage2_pool.size()) - config.stage2_val)
            : config.stage2_train;
    const int stage2_need = stage2_train + config.stage2_val;
    if (static_cast<int>(stage2_pool.size()) < stage2_need) {
        throw InsufficientDataError("stage2", stage2_need,
                                    static_cast<long>(stage2_pool.size()));
    }
    Rng stage2_rng(fnv1a64("stage2", config.seed));
    stage2_rng.shuffle(stage2_pool);
    auto to_outcome = [](const ProblemRecord& rec) {
        OutcomeInstance o;
        o.instance_id = rec.id + "#outcome";
        o.problem_id = rec.id;
        o.statement = rec.statement;
        o.answer = rec.final_answer;
        return o;
    };
    for (int i = 0; i < stage2_train; ++i) {
        out.stage2_train.push_back(to_outcome(*stage2_pool[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i < config.stage2_val; ++i) {
        out.stage2_val.push_back(
            to_outcome(*stage2_pool[static_cast<std::size_t>(stage2_train + i)]));
    }
    return out;
}

void save_instances(const std::filesystem::path& path,
                    const std::vector<InstancePayload>& instances) {
    std::vector<io::ojson> rows;
    for (const auto& inst : instances) {
        io::ojson row;
        if (const auto* m = std::get_if<MaskedInstance>(&inst)) {
            row["instance_id"] = m->instance_id;
            row["problem_id"] = m->problem_id;
            row["task"] = "mask_fill";
            row["masked_text"] = m->masked_text;
            row["ground_truths"] = m->ground_truths;
            row["mask_count"] = m->mask_count;
        } else {
            const auto& r = std::get<ReorderInstance>(inst);
            row["instance_id"] = r.instance_id;
            row["problem_id"] = r.problem_id;
            row["task"] = "reorder";
            row["shuffled_steps"] = r.shuffled_steps;
            row["true_order"] = r.true_order;
            row["n"] = r.n;
        }
        rows.push_back(std::move(row));
    }
    io::write_file_atomic(path, io::to_jsonl(rows));
}

std::vector<rewards::InstancePayload> load_instances(const std::filesystem::path& path) {
    std::vector<InstancePayload> out;
    io::for_each_jsonl_row(path, [&](int line, const io::json& row) {
        auto need = [&](const char* field) -> const io::json& {
            if (!row.contains(field)) throw SchemaError(line, field, "missing field in " + path.string());
            return row.at(field);
        };
        const std::string task = need("task").get<std::string>();
        if (task == "mask_fill") {
            MaskedInstance m;
            m.instance_id = need("instance_id").get<std::string>();
            m.problem_id = need("problem_id").get<std::string>();
            m.masked_text = need("masked_text").get<std::string>();
            m.ground_truths = need("ground_truths").get<std::vector<std::string>>();
            m.mask_count = need("mask_count").get<int>();
            if (m.mask_count != static_cast<int>(m.ground_truths.size())) {
                throw SchemaError(line, "mask_count", "count does not match truths in " + path.string());
            }
            out.emplace_back(std::move(m));
        } else if (task == "reorder") {
            ReorderInstance r;
            r.instance_id = need("instance_id").get<std::string>();
            r.problem_id = need("problem_id").get<std::string>();
            r.shuffled_steps = need("shuffled_steps").get<std::vector<std::string>>();
            r.true_order = need("true_order").get<std::vector<int>>();
            r.n = need("n").get<int>();
            if (r.n != static_cast<int>(r.shuffled_steps.size()) ||
                r.n != static_cast<int>(r.true_order.size())) {
                throw SchemaError(line, "n", "length fields disagree in " + path.string());
            }
            std::vector<bool> seen(static_cast<std::size_t>(r.n), false);
            for (int v : r.true_order) {
                if (v < 0 || v >= r.n || seen[static_cast<std::size_t>(v)]) {
                    throw SchemaError(line, "true_order", "not a permutation in " + path.string());
                }
                seen[static_cast<std::size_t>(v)] = true;
            }
            out.emplace_back(std::move(r));
        } else {
            throw SchemaError(line, "task", "unknown task kind in " + path.string());
        }
    });
    return out;
}

void save_outcomes(const std::filesystem::path& path,
                   const std::vector<OutcomeInstance>& outcomes) {
    std::vector<io::ojson> rows;
    for (const auto& o : outcomes) {
        io::ojson row;
        row["instance_id"] = o.instance_id;
        row["problem_id"] = o.problem_id;
        row["statement"] = o.statement;
        row["answer"] = o.answer;
        rows.push_back(std::move(row));
    }
    io::write_file_atomic(path, io::to_jsonl(rows));
}

std::vector<OutcomeInstance> load_outcomes(const std::filesystem::path& path) {
    std::vector<OutcomeInstance> out;
    io::for_each_jsonl_row(path, [&](int line, const io::json& row) {
        auto need = [&](const char* field) -> const io::json& {
            if (!row.contains(field)) throw SchemaError(line, field, "missing field in " + path.string());
            return row.at(field);
        };
        OutcomeInstance o;
        o.instance_id = need("instance_id").get<std::string>();
        o.problem_id = need("problem_id").get<std::string>();
        o.statement = need("statement").get<std::string>();
        o.answer = need("answer").get<std::string>();
        if (o.answer.empty()) throw SchemaError(line, "answer", "empty answer in " + path.string());
        out.push_back(std::move(o));
    });
    return out;
}

}  // namespace mrrlvr::curation
