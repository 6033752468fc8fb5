#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Unbiased Pass@k estimation plus the benchmark-report arithmetic: relative
// gains over a baseline column and their per-k aggregate means.
namespace mrrlvr::eval {

struct ProblemResult {
    std::string problem_id;
    int n = 0;  // samples generated
    int c = 0;  // correct among them
};

// Sampling defaults of the reference evaluation harness. Recorded for
// documentation and embedded in run manifests; the toy pipeline samples at
// temperature 1 from its own tabular policy.
struct EvalConfig {
    double temperature = 0.6;
    double top_p = 0.95;
    int max_generation_length = 4096;
    int samples_per_problem = 64;
};

// P(at least one of k draws without replacement is correct), computed in
// product form: 1 - prod_{i<k} (n-c-i)/(n-i). Exact to ~1e-15 at n = 64
// and immune to factorial overflow. Returns exactly 1 when n - c < k.
double pass_at_k(int n, int c, int k);

// Dataset mean of pass_at_k per requested k. Throws KExceedsNError naming
// the offending problem when some k exceeds a problem's sample count.
std::map<int, double> evaluate_set(const std::vector<ProblemResult>& results,
                                   const std::vector<int>& ks);

// (new_value / old_value - 1) * 100; ZeroBaselineError unless old_value > 0.
double relative_gain(double new_value, double old_value);

// One benchmark x k cell of the comparison table. The published gain, when
// present, is the arrow printed alongside the source numbers; it was
// computed from unrounded means, so it can differ from the recomputed gain
// by up to ~0.2 percentage points.
struct ReportCell {
    std::string family;
    std::string benchmark;
    int k = 0;
    double base = 0.0;
    double grpo = 0.0;
    double mrrlvr = 0.0;
    std::optional<double> published_gain;

    double recomputed_gain() const;  // relative_gain(mrrlvr, grpo)
    double gain() const;             // published when present, else recomputed
};

struct BenchmarkReport {
    std::vector<ReportCell> cells;

    // Requires the full family x benchmark x k grid; MissingCellsError names
    // the first absent combination.
    void validate() const;

    static BenchmarkReport from_csv(const std::filesystem::path& path);
    std::string to_csv() const;  // input columns plus a recomputed_gain column
};

// Mean of the per-cell gains for each k across every family and benchmark.
// Published arrows take precedence over recomputed ones inside each cell so
// the aggregate reproduces the source's own headline averages.
std::map<int, double> aggregate_gains(const BenchmarkReport& report);

// Fixed-layout text table: one block per family, one row per benchmark,
// base/grpo/mrrlvr columns per k with the recomputed arrow beside the last.
std::string render_report(const BenchmarkReport& report);

// JSONL rows {"problem_id": str, "n": int, "c": int}; duplicate ids and
// schema violations are rejected with line numbers.
std::vector<ProblemResult> load_results(const std::filesystem::path& path);

}  // namespace mrrlvr::eval
