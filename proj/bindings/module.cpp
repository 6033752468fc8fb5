// Python bindings: the text/math layer, reward scoring, pass@k, and the
// two-stage trainer, exposed with plain dicts where a struct would just get
// in the way.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <variant>

#include "mrrlvr/curation.hpp"
#include "mrrlvr/errors.hpp"
#include "mrrlvr/eval.hpp"
#include "mrrlvr/mathtext.hpp"
#include "mrrlvr/pipeline.hpp"
#include "mrrlvr/rewards.hpp"

namespace py = pybind11;
using namespace mrrlvr;

namespace {

py::dict reward_to_dict(const rewards::RewardValue& rv) {
    py::dict breakdown;
    for (const auto& [key, value] : rv.breakdown) breakdown[py::str(key)] = value;
    py::dict out;
    out["value"] = rv.value;
    out["breakdown"] = breakdown;
    out["note"] = rv.note;
    return out;
}

const char* method_name(mathtext::EquivMethod m) {
    switch (m) {
        case mathtext::EquivMethod::string_canonical: return "string_canonical";
        case mathtext::EquivMethod::numeric: return "numeric";
        default: return "none";
    }
}

py::dict score_mask(const rewards::MaskedInstance& instance, const std::string& response,
                    int h, std::uint64_t seed, double similarity_floor, bool allow_bare) {
    rewards::MaskEvalOptions opts;
    opts.h = h;
    opts.seed = seed;
    opts.similarity_floor = similarity_floor;
    auto parsed = rewards::parse_mask_response(response, instance.mask_count, allow_bare);
    rewards::ResponsePayload payload =
        std::holds_alternative<rewards::Malformed>(parsed)
            ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
            : rewards::ResponsePayload(std::get<rewards::MaskFillResponse>(parsed));
    return reward_to_dict(rewards::process_reward(rewards::ProcessTaskKind::mask_fill,
                                                  instance, payload, opts));
}

py::dict score_reorder(const rewards::ReorderInstance& instance, const std::string& response,
                       bool allow_bare) {
    auto parsed = rewards::parse_reorder_response(response, instance.n, allow_bare);
    rewards::ResponsePayload payload =
        std::holds_alternative<rewards::Malformed>(parsed)
            ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
            : rewards::ResponsePayload(std::get<rewards::ReorderResponse>(parsed));
    return reward_to_dict(
        rewards::process_reward(rewards::ProcessTaskKind::reorder, instance, payload, {}));
}

py::dict train_stage(int stage, const std::string& data, const std::string& ckpt_dir,
                     std::uint64_t seed, int epochs, int batch_queries, int group_size,
                     double learning_rate, double clip_eps, double kl_coef, double std_floor,
                     bool kl_sequence_sum, double ref_ema_decay, int m, int n_max,
                     int max_steps, int checkpoint_interval, long stop_after,
                     const std::string& init_checkpoint, bool from_scratch, bool resume) {
    pipeline::StageConfig cfg;
    cfg.stage = stage == 1 ? pipeline::Stage::one : pipeline::Stage::two;
    cfg.dataset_path = data;
    cfg.checkpoint_dir = ckpt_dir;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.batch_queries = batch_queries;
    cfg.grpo.group_size = group_size;
    cfg.grpo.learning_rate = learning_rate;
    cfg.grpo.clip_eps = clip_eps;
    cfg.grpo.kl_coef = kl_coef;
    cfg.grpo.std_floor = std_floor;
    cfg.grpo.kl_sequence_sum = kl_sequence_sum;
    cfg.grpo.ref_ema_decay = ref_ema_decay;
    cfg.policy.m = m;
    cfg.policy.n_max = n_max;
    cfg.policy.max_steps = max_steps;
    cfg.checkpoint_interval = checkpoint_interval;
    cfg.stop_after = stop_after;
    cfg.init_checkpoint = init_checkpoint;
    cfg.from_scratch = from_scratch;

    pipeline::RunOutcome out;
    if (resume) {
        out = pipeline::resume(cfg);
    } else if (cfg.stage == pipeline::Stage::one) {
        out = pipeline::run_stage1(cfg);
    } else if (from_scratch) {
        out = pipeline::run_stage2_baseline(cfg);
    } else {
        if (init_checkpoint.empty()) {
            throw BadArgsError("stage 2 needs init_checkpoint or from_scratch=True");
        }
        out = pipeline::run_stage2(cfg, pipeline::load_checkpoint(init_checkpoint));
    }

    py::dict result;
    result["steps_run"] = out.steps_run;
    result["step"] = out.checkpoint.step;
    result["finished"] = out.finished;
    result["already_finished"] = out.already_finished;
    result["metrics_path"] = out.metrics_path.string();
    result["param_count"] = out.checkpoint.params.size();
    return result;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "masked-and-reordered RLVR core: math text, rewards, pass@k, training";
    mod.attr("__version__") = "0.1.0";

    // Errors surface as ValueError so callers can catch them idiomatically.
    py::register_exception<Error>(mod, "MrrlvrError", PyExc_ValueError);

    py::class_<rewards::MaskedInstance>(mod, "MaskedInstance")
        .def(py::init([](std::string instance_id, std::string problem_id,
                         std::string masked_text, std::vector<std::string> ground_truths,
                         int mask_count) {
                 rewards::MaskedInstance inst;
                 inst.instance_id = std::move(instance_id);
                 inst.problem_id = std::move(problem_id);
                 inst.masked_text = std::move(masked_text);
                 inst.ground_truths = std::move(ground_truths);
                 inst.mask_count = mask_count;
                 return inst;
             }),
             py::arg("instance_id"), py::arg("problem_id"), py::arg("masked_text"),
             py::arg("ground_truths"), py::arg("mask_count"))
        .def_readonly("instance_id", &rewards::MaskedInstance::instance_id)
        .def_readonly("problem_id", &rewards::MaskedInstance::problem_id)
        .def_readonly("masked_text", &rewards::MaskedInstance::masked_text)
        .def_readonly("ground_truths", &rewards::MaskedInstance::ground_truths)
        .def_readonly("mask_count", &rewards::MaskedInstance::mask_count)
        .def("__repr__", [](const rewards::MaskedInstance& i) {
            return "MaskedInstance(" + i.instance_id + ", masks=" +
                   std::to_string(i.mask_count) + ")";
        });

    py::class_<rewards::ReorderInstance>(mod, "ReorderInstance")
        .def(py::init([](std::string instance_id, std::string problem_id,
                         std::vector<std::string> shuffled_steps, std::vector<int> true_order) {
                 rewards::ReorderInstance inst;
                 inst.instance_id = std::move(instance_id);
                 inst.problem_id = std::move(problem_id);
                 inst.shuffled_steps = std::move(shuffled_steps);
                 inst.true_order = std::move(true_order);
                 inst.n = static_cast<int>(inst.true_order.size());
                 return inst;
             }),
             py::arg("instance_id"), py::arg("problem_id"), py::arg("shuffled_steps"),
             py::arg("true_order"))
        .def_readonly("instance_id", &rewards::ReorderInstance::instance_id)
        .def_readonly("problem_id", &rewards::ReorderInstance::problem_id)
        .def_readonly("shuffled_steps", &rewards::ReorderInstance::shuffled_steps)
        .def_readonly("true_order", &rewards::ReorderInstance::true_order)
        .def_readonly("n", &rewards::ReorderInstance::n)
        .def("__repr__", [](const rewards::ReorderInstance& i) {
            return "ReorderInstance(" + i.instance_id + ", n=" + std::to_string(i.n) + ")";
        });

    py::class_<curation::OutcomeInstance>(mod, "OutcomeInstance")
        .def_readonly("instance_id", &curation::OutcomeInstance::instance_id)
        .def_readonly("problem_id", &curation::OutcomeInstance::problem_id)
        .def_readonly("statement", &curation::OutcomeInstance::statement)
        .def_readonly("answer", &curation::OutcomeInstance::answer);

    // Math-text layer.
    mod.def("extract_boxed", &mathtext::extract_boxed, py::arg("text"),
            "Content of the last \\boxed{...} group, or None.");
    mod.def(
        "normalize",
        [](const std::string& raw) {
            const auto n = mathtext::normalize(raw);
            py::dict out;
            out["canonical"] = n.canonical;
            out["numeric_value"] = n.numeric_value ? py::object(py::float_(*n.numeric_value))
                                                   : py::object(py::none());
            return out;
        },
        py::arg("text"), "Canonical form plus numeric value when the text is arithmetic.");
    mod.def(
        "math_equivalent",
        [](const std::string& a, const std::string& b, double atol, double rtol) {
            const auto v = mathtext::math_equivalent(a, b, atol, rtol);
            py::dict out;
            out["equivalent"] = v.equivalent;
            out["method"] = method_name(v.method);
            out["similarity"] = v.similarity;
            return out;
        },
        py::arg("a"), py::arg("b"), py::arg("atol") = 1e-9, py::arg("rtol") = 1e-6);
    mod.def("text_similarity", &mathtext::text_similarity, py::arg("a"), py::arg("b"));

    // Reward scoring.
    mod.def("score_mask", &score_mask, py::arg("instance"), py::arg("response"),
            py::arg("h") = 7, py::arg("seed") = 0, py::arg("similarity_floor") = 0.0,
            py::arg("allow_bare") = true);
    mod.def("score_reorder", &score_reorder, py::arg("instance"), py::arg("response"),
            py::arg("allow_bare") = true);
    mod.def(
        "score_final",
        [](const std::string& answer, const std::string& response) {
            return reward_to_dict(rewards::final_reward(answer, response));
        },
        py::arg("answer"), py::arg("response"));
    mod.def("format_mask_response", &rewards::format_mask_response, py::arg("fills"));
    mod.def("format_reorder_response", &rewards::format_reorder_response, py::arg("order"));

    // Curated files.
    mod.def(
        "load_instances",
        [](const std::string& path) {
            py::list out;
            for (auto& inst : curation::load_instances(path)) {
                std::visit([&](auto&& v) { out.append(py::cast(std::move(v))); },
                           std::move(inst));
            }
            return out;
        },
        py::arg("path"), "Mask and reorder instances from a curated JSONL file.");
    mod.def("load_outcomes", &curation::load_outcomes, py::arg("path"));

    // Evaluation.
    mod.def("pass_at_k", &eval::pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"),
            "Unbiased P(at least one correct among k of n samples).");
    mod.def(
        "evaluate_set",
        [](const std::vector<std::tuple<std::string, int, int>>& rows,
           const std::vector<int>& ks) {
            std::vector<eval::ProblemResult> results;
            results.reserve(rows.size());
            for (const auto& [id, n, c] : rows) results.push_back({id, n, c});
            return eval::evaluate_set(results, ks);
        },
        py::arg("results"), py::arg("ks"),
        "Mean pass@k per k over (problem_id, n, c) rows.");

    // Training.
    mod.def("train_stage", &train_stage, py::arg("stage"), py::arg("data"),
            py::arg("ckpt_dir"), py::kw_only(), py::arg("seed") = 0, py::arg("epochs") = 3,
            py::arg("batch_queries") = 8, py::arg("group_size") = 16,
            py::arg("learning_rate") = 1e-2, py::arg("clip_eps") = 0.2,
            py::arg("kl_coef") = 1e-3, py::arg("std_floor") = 1e-6,
            py::arg("kl_sequence_sum") = false, py::arg("ref_ema_decay") = 0.0,
            py::arg("m") = 6, py::arg("n_max") = 8, py::arg("max_steps") = 8,
            py::arg("checkpoint_interval") = 100, py::arg("stop_after") = 0,
            py::arg("init_checkpoint") = std::string(), py::arg("from_scratch") = false,
            py::arg("resume") = false,
            "Run one training stage; returns a summary dict with the final step.");
}
