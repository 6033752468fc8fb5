#include "mrrlvr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/io.hpp"

namespace mrrlvr::eval {

namespace {

constexpr const char* kCsvHeader = "family,benchmark,k,base,grpo,mrrlvr,published_gain";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& text, int line, const char* field) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw SchemaError(line, field, "field '" + std::string(field) + "' on line " +
                                           std::to_string(line) + " is not a number: '" +
                                           text + "'");
    }
}

std::string format2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

double pass_at_k(int n, int c, int k) {
    if (n < 1) throw BadArgsError("pass@k needs n >= 1, got n=" + std::to_string(n));
    if (k < 1 || k > n) {
        throw BadArgsError("pass@k needs 1 <= k <= n, got k=" + std::to_string(k) +
                           ", n=" + std::to_string(n));
    }
    if (c < 0 || c > n) {
        throw BadArgsError("pass@k needs 0 <= c <= n, got c=" + std::to_string(c) +
                           ", n=" + std::to_string(n));
    }
    if (n - c < k) return 1.0;  // every k-subset contains a correct sample
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - miss;
}

std::map<int, double> evaluate_set(const std::vector<ProblemResult>& results,
                                   const std::vector<int>& ks) {
    if (results.empty()) throw EmptyDatasetError("evaluate_set got no problem results");
    std::map<int, double> out;
    for (int k : ks) {
        double sum = 0.0;
        for (const auto& r : results) {
            if (k > r.n) {
                throw KExceedsNError(r.problem_id,
                                     "k=" + std::to_string(k) + " exceeds n=" +
                                         std::to_string(r.n) + " for problem '" +
                                         r.problem_id + "'");
            }
            sum += pass_at_k(r.n, r.c, k);
        }
        out[k] = sum / static_cast<double>(results.size());
    }
    return out;
}

double relative_gain(double new_value, double old_value) {
    if (!(old_value > 0.0)) {
        throw ZeroBaselineError("relative gain needs a positive baseline, got " +
                                std::to_string(old_value));
    }
    return (new_value / old_value - 1.0) * 100.0;
}

double ReportCell::recomputed_gain() const { return relative_gain(mrrlvr, grpo); }

double ReportCell::gain() const {
    return published_gain.has_value() ? *published_gain : recomputed_gain();
}

void BenchmarkReport::validate() const {
    if (cells.empty()) throw MissingCellsError("report has no cells");
    std::vector<std::string> families, benchmarks;
    std::set<int> ks;
    std::set<std::string> seen;
    for (const auto& cell : cells) {
        if (std::find(families.begin(), families.end(), cell.family) == families.end()) {
            families.push_back(cell.family);
        }
        if (std::find(benchmarks.begin(), benchmarks.end(), cell.benchmark) ==
            benchmarks.end()) {
            benchmarks.push_back(cell.benchmark);
        }
        ks.insert(cell.k);
        const std::string key =
            cell.family + "\x1f" + cell.benchmark + "\x1f" + std::to_string(cell.k);
        if (!seen.insert(key).second) {
            throw DuplicateIdError(cell.family + "/" + cell.benchmark + "/k=" +
                                   std::to_string(cell.k));
        }
    }
    for (const auto& fam : families) {
        for (const auto& bm : benchmarks) {
            for (int k : ks) {
                const std::string key = fam + "\x1f" + bm + "\x1f" + std::to_string(k);
                if (seen.find(key) == seen.end()) {
                    throw MissingCellsError("missing cell " + fam + "/" + bm + "/k=" +
                                            std::to_string(k));
                }
            }
        }
    }
}

BenchmarkReport BenchmarkReport::from_csv(const std::filesystem::path& path) {
    const std::string content = io::read_file(path);
    std::istringstream in(content);
    std::string line;
    BenchmarkReport report;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kCsvHeader) {
                throw SchemaError(1, "header", "expected CSV header '" +
                                                   std::string(kCsvHeader) + "', got '" +
                                                   line + "'");
            }
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 7) {
            throw SchemaError(line_no, "row",
                              "expected 7 CSV fields on line " + std::to_string(line_no) +
                                  ", got " + std::to_string(fields.size()));
        }
        ReportCell cell;
        cell.family = fields[0];
        cell.benchmark = fields[1];
        if (cell.family.empty()) throw SchemaError(line_no, "family", "empty family name");
        if (cell.benchmark.empty()) {
            throw SchemaError(line_no, "benchmark", "empty benchmark name");
        }
        const double kval = parse_number(fields[2], line_no, "k");
        cell.k = static_cast<int>(kval);
        if (cell.k < 1 || static_cast<double>(cell.k) != kval) {
            throw SchemaError(line_no, "k", "k must be a positive integer, got '" +
                                                fields[2] + "'");
        }
        cell.base = parse_number(fields[3], line_no, "base");
        cell.grpo = parse_number(fields[4], line_no, "grpo");
        cell.mrrlvr = parse_number(fields[5], line_no, "mrrlvr");
        if (!fields[6].empty()) {
            cell.published_gain = parse_number(fields[6], line_no, "published_gain");
        }
        report.cells.push_back(std::move(cell));
    }
    report.validate();
    return report;
}

std::string BenchmarkReport::to_csv() const {
    std::string out = std::string(kCsvHeader) + ",recomputed_gain\n";
    for (const auto& cell : cells) {
        out += cell.family + "," + cell.benchmark + "," + std::to_string(cell.k) + "," +
               format2(cell.base) + "," + format2(cell.grpo) + "," + format2(cell.mrrlvr) +
               ",";
        if (cell.published_gain.has_value()) out += format2(*cell.published_gain);
        char buf[64];
        std::snprintf(buf, sizeof(buf), ",%.4f\n", cell.recomputed_gain());
        out += buf;
    }
    return out;
}

std::map<int, double> aggregate_gains(const BenchmarkReport& report) {
    report.validate();
    std::map<int, double> sums;
    std::map<int, int> counts;
    for (const auto& cell : report.cells) {
        sums[cell.k] += cell.gain();
        counts[cell.k] += 1;
    }
    std::map<int, double> out;
    for (const auto& [k, sum] : sums) out[k] = sum / counts[k];
    return out;
}

std::string render_report(const BenchmarkReport& report) {
    report.validate();
    std::vector<std::string> families, benchmarks;
    std::set<int> kset;
    for (const auto& cell : report.cells) {
        if (std::find(families.begin(), families.end(), cell.family) == families.end()) {
            families.push_back(cell.family);
        }
        if (std::find(benchmarks.begin(), benchmarks.end(), cell.benchmark) ==
            benchmarks.end()) {
            benchmarks.push_back(cell.benchmark);
        }
        kset.insert(cell.k);
    }
    const std::vector<int> ks(kset.begin(), kset.end());
    auto find_cell = [&](const std::string& fam, const std::string& bm,
                         int k) -> const ReportCell& {
        for (const auto& cell : report.cells) {
            if (cell.family == fam && cell.benchmark == bm && cell.k == k) return cell;
        }
        throw MissingCellsError("missing cell " + fam + "/" + bm);  // unreachable: validated
    };

    std::string out;
    char buf[160];
    for (const auto& fam : families) {
        out += "== " + fam + " ==\n";
        out += "benchmark   ";
        for (int k : ks) {
            std::snprintf(buf, sizeof(buf), "  %8s %8s %8s %10s", ("base@" + std::to_string(k)).c_str(),
                          ("grpo@" + std::to_string(k)).c_str(),
                          ("mr@" + std::to_string(k)).c_str(),
                          ("gain@" + std::to_string(k)).c_str());
            out += buf;
        }
        out += "\n";
        for (const auto& bm : benchmarks) {
            std::snprintf(buf, sizeof(buf), "%-12s", bm.c_str());
            out += buf;
            for (int k : ks) {
                const auto& cell = find_cell(fam, bm, k);
                std::snprintf(buf, sizeof(buf), "  %8.2f %8.2f %8.2f %+9.2f%%", cell.base,
                              cell.grpo, cell.mrrlvr, cell.recomputed_gain());
                out += buf;
            }
            out += "\n";
        }
        out += "\n";
    }
    const auto aggregates = aggregate_gains(report);
    out += "aggregate relative gain over grpo:";
    for (const auto& [k, v] : aggregates) {
        std::snprintf(buf, sizeof(buf), "  pass@%d %+0.2f%%", k, v);
        out += buf;
    }
    out += "\n";
    return out;
}

std::vector<ProblemResult> load_results(const std::filesystem::path& path) {
    std::vector<ProblemResult> out;
    std::set<std::string> seen;
    io::for_each_jsonl_row(path, [&](int line, const io::json& row) {
        if (!row.is_object()) throw SchemaError(line, "row", "result row must be an object");
        if (!row.contains("problem_id") || !row["problem_id"].is_string()) {
            throw SchemaError(line, "problem_id",
                              "missing or non-string 'problem_id' on line " +
                                  std::to_string(line));
        }
        ProblemResult r;
        r.problem_id = row["problem_id"].get<std::string>();
        if (!seen.insert(r.problem_id).second) throw DuplicateIdError(r.problem_id);
        if (!row.contains("n") || !row["n"].is_number_integer()) {
            throw SchemaError(line, "n",
                              "missing or non-integer 'n' on line " + std::to_string(line));
        }
        if (!row.contains("c") || !row["c"].is_number_integer()) {
            throw SchemaError(line, "c",
                              "missing or non-integer 'c' on line " + std::to_string(line));
        }
        r.n = row["n"].get<int>();
        r.c = row["c"].get<int>();
        if (r.n < 1) {
            throw SchemaError(line, "n", "'n' must be >= 1 on line " + std::to_string(line));
        }
        if (r.c < 0 || r.c > r.n) {
            throw SchemaError(line, "c",
                              "'c' must lie in [0, n] on line " + std::to_string(line));
        }
        out.push_back(std::move(r));
    });
    if (out.empty()) throw EmptyDatasetError("no problem results in " + path.string());
    return out;
}

}  // namespace mrrlvr::eval
