#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/eval.hpp"
#include "mrrlvr/io.hpp"

using namespace mrrlvr;

#ifndef MRRLVR_DATA_DIR
#define MRRLVR_DATA_DIR "data"
#endif

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("pass@k matches exhaustive subset enumeration") {
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                long total = 0, hit = 0;
                const unsigned correct_mask = (1u << c) - 1u;
                for (unsigned mask = 0; mask < (1u << n); ++mask) {
                    if (std::popcount(mask) != k) continue;
                    ++total;
                    if ((mask & correct_mask) != 0u) ++hit;
                }
                const double want = static_cast<double>(hit) / static_cast<double>(total);
                CHECK(std::abs(eval::pass_at_k(n, c, k) - want) <= 1e-12);
            }
        }
    }
}

TEST_CASE("pass@k directed values, bounds, and monotonicity") {
    CHECK(eval::pass_at_k(64, 0, 8) == 0.0);
    CHECK(eval::pass_at_k(4, 1, 2) == doctest::Approx(0.5).epsilon(1e-12));
    for (int n = 1; n <= 64; n += 7) {
        for (int c = 0; c <= n; ++c) {
            CHECK(eval::pass_at_k(n, c, 1) ==
                  doctest::Approx(static_cast<double>(c) / n).epsilon(1e-12));
        }
    }
    CHECK(eval::pass_at_k(64, 64, 8) == 1.0);
    CHECK(eval::pass_at_k(5, 3, 3) == 1.0);  // n - c < k forces a correct draw

    for (int c = 0; c <= 10; ++c) {
        double prev = 0.0;
        for (int k = 1; k <= 10; ++k) {
            const double v = eval::pass_at_k(10, c, k);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v >= prev - 1e-15);  // nondecreasing in k
            prev = v;
        }
    }
    for (int k = 1; k <= 10; ++k) {
        double prev = 0.0;
        for (int c = 0; c <= 10; ++c) {
            const double v = eval::pass_at_k(10, c, k);
            CHECK(v >= prev - 1e-15);  // nondecreasing in c
            prev = v;
        }
    }

    CHECK_THROWS_AS(eval::pass_at_k(0, 0, 1), BadArgsError);
    CHECK_THROWS_AS(eval::pass_at_k(4, 0, 0), BadArgsError);
    CHECK_THROWS_AS(eval::pass_at_k(4, 0, 5), BadArgsError);
    CHECK_THROWS_AS(eval::pass_at_k(4, -1, 2), BadArgsError);
    CHECK_THROWS_AS(eval::pass_at_k(4, 5, 2), BadArgsError);
}

TEST_CASE("evaluate_set averages per-problem pass@k") {
    std::vector<eval::ProblemResult> results = {{"p1", 2, 2}, {"p2", 2, 0}};
    auto means = eval::evaluate_set(results, {1});
    CHECK(means.at(1) == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<eval::ProblemResult> single = {{"only", 64, 17}};
    auto one = eval::evaluate_set(single, {1, 5, 8});
    CHECK(one.at(1) == doctest::Approx(eval::pass_at_k(64, 17, 1)).epsilon(1e-12));
    CHECK(one.at(5) == doctest::Approx(eval::pass_at_k(64, 17, 5)).epsilon(1e-12));
    CHECK(one.at(8) == doctest::Approx(eval::pass_at_k(64, 17, 8)).epsilon(1e-12));

    std::vector<eval::ProblemResult> small = {{"big", 64, 1}, {"tiny", 4, 1}};
    try {
        eval::evaluate_set(small, {1, 5, 8});
        FAIL("expected KExceedsNError");
    } catch (const KExceedsNError& e) {
        CHECK(e.problem_id == "tiny");
    }
    CHECK_THROWS_AS(eval::evaluate_set({}, {1}), EmptyDatasetError);
}

TEST_CASE("relative gain arithmetic") {
    CHECK(eval::relative_gain(40.82, 36.13) ==
          doctest::Approx(12.980902297259878).epsilon(1e-12));
    CHECK(eval::relative_gain(13.20, 14.29) ==
          doctest::Approx(-7.627711686494054).epsilon(1e-12));
    CHECK(eval::relative_gain(55.5, 55.5) == 0.0);
    CHECK_THROWS_AS(eval::relative_gain(1.0, 0.0), ZeroBaselineError);
    CHECK_THROWS_AS(eval::relative_gain(1.0, -2.0), ZeroBaselineError);
}

TEST_CASE("published benchmark table reproduces the headline aggregates") {
    const auto path = std::filesystem::path(MRRLVR_DATA_DIR) / "published_results.csv";
    auto report = eval::BenchmarkReport::from_csv(path);
    CHECK(report.cells.size() == 24);
    report.validate();

    // Every recomputed arrow sits within 0.2 points of the published one.
    for (const auto& cell : report.cells) {
        REQUIRE(cell.published_gain.has_value());
        CHECK(std::abs(cell.recomputed_gain() - *cell.published_gain) <= 0.2);
    }

    auto agg = eval::aggregate_gains(report);
    CHECK(agg.at(1) == doctest::Approx(9.8575).epsilon(1e-9));
    CHECK(agg.at(5) == doctest::Approx(5.27375).epsilon(1e-9));
    CHECK(agg.at(8) == doctest::Approx(4.0025).epsilon(1e-9));
    CHECK(std::abs(agg.at(1) - 9.86) <= 0.02);
    CHECK(std::abs(agg.at(5) - 5.27) <= 0.02);
    CHECK(std::abs(agg.at(8) - 4.00) <= 0.02);

    // Spot-check one directed cell.
    bool found = false;
    for (const auto& cell : report.cells) {
        if (cell.benchmark == "AMC23" && cell.k == 1 && cell.grpo == 36.13) {
            CHECK(cell.mrrlvr == 40.82);
            CHECK(*cell.published_gain == 12.98);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("report validation catches missing and duplicate cells") {
    const auto path = std::filesystem::path(MRRLVR_DATA_DIR) / "published_results.csv";
    auto report = eval::BenchmarkReport::from_csv(path);

    auto missing = report;
    missing.cells.pop_back();
    CHECK_THROWS_AS(missing.validate(), MissingCellsError);
    CHECK_THROWS_AS(eval::aggregate_gains(missing), MissingCellsError);

    auto duplicated = report;
    duplicated.cells.push_back(duplicated.cells.front());
    CHECK_THROWS_AS(duplicated.validate(), DuplicateIdError);

    eval::BenchmarkReport empty;
    CHECK_THROWS_AS(empty.validate(), MissingCellsError);
}

TEST_CASE("report CSV round trip and rendering") {
    const auto path = std::filesystem::path(MRRLVR_DATA_DIR) / "published_results.csv";
    auto report = eval::BenchmarkReport::from_csv(path);

    const auto copy_path = temp_file("mrrlvr_report_roundtrip.csv");
    {
        // Strip the trailing recomputed column to regain the input format.
        std::string csv = report.to_csv();
        std::string pruned;
        std::istringstream in(csv);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            const auto cut = line.rfind(',');
            pruned += line.substr(0, cut);
            pruned += '\n';
            if (first) {
                first = false;
                CHECK(line.substr(cut + 1) == "recomputed_gain");
            }
        }
        std::ofstream out(copy_path);
        out << pruned;
    }
    auto again = eval::BenchmarkReport::from_csv(copy_path);
    REQUIRE(again.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        CHECK(again.cells[i].family == report.cells[i].family);
        CHECK(again.cells[i].benchmark == report.cells[i].benchmark);
        CHECK(again.cells[i].k == report.cells[i].k);
        CHECK(again.cells[i].base == report.cells[i].base);
        CHECK(again.cells[i].grpo == report.cells[i].grpo);
        CHECK(again.cells[i].mrrlvr == report.cells[i].mrrlvr);
        CHECK(*again.cells[i].published_gain == *report.cells[i].published_gain);
    }
    std::filesystem::remove(copy_path);

    const std::string rendered = eval::render_report(report);
    CHECK(rendered.find("== Qwen2.5-3B ==") != std::string::npos);
    CHECK(rendered.find("AMC23") != std::string::npos);
    CHECK(rendered.find("+12.98%") != std::string::npos);   // recomputed AMC23 arrow
    CHECK(rendered.find("pass@1 +9.86%") != std::string::npos);
    CHECK(rendered.find("pass@5 +5.27%") != std::string::npos);
    CHECK(rendered.find("pass@8 +4.00%") != std::string::npos);

    // Malformed CSV inputs carry line numbers.
    const auto bad_path = temp_file("mrrlvr_report_bad.csv");
    {
        std::ofstream out(bad_path);
        out << "family,benchmark,k,base,grpo,mrrlvr,published_gain\n";
        out << "F,B,1,1.0,2.0,not-a-number,\n";
    }
    try {
        eval::BenchmarkReport::from_csv(bad_path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line == 2);
        CHECK(e.field == "mrrlvr");
    }
    std::filesystem::remove(bad_path);
}

TEST_CASE("problem results load from JSONL with validation") {
    const auto path = temp_file("mrrlvr_results.jsonl");
    {
        std::ofstream out(path);
        out << R"({"problem_id": "a", "n": 64, "c": 10})" << "\n";
        out << R"({"problem_id": "b", "n": 64, "c": 0})" << "\n";
    }
    auto results = eval::load_results(path);
    REQUIRE(results.size() == 2);
    CHECK(results[0].problem_id == "a");
    CHECK(results[0].n == 64);
    CHECK(results[0].c == 10);
    std::filesystem::remove(path);

    auto expect_schema_error = [&](const std::string& body, const std::string& field,
                                   int line) {
        std::ofstream out(path);
        out << body;
        out.close();
        try {
            eval::load_results(path);
            FAIL("expected SchemaError for field ", field);
        } catch (const SchemaError& e) {
            CHECK(e.field == field);
            CHECK(e.line == line);
        }
        std::filesystem::remove(path);
    };
    expect_schema_error(R"({"problem_id": "a", "c": 1})" "\n", "n", 1);
    expect_schema_error(R"({"problem_id": "a", "n": 4})" "\n", "c", 1);
    expect_schema_error(
        R"({"problem_id": "a", "n": 4, "c": 0})" "\n" R"({"problem_id": "x", "n": 4, "c": 5})" "\n",
        "c", 2);
    expect_schema_error(R"({"n": 4, "c": 0})" "\n", "problem_id", 1);
    expect_schema_error(R"({"problem_id": "a", "n": 0, "c": 0})" "\n", "n", 1);

    {
        std::ofstream out(path);
        out << R"({"problem_id": "dup", "n": 4, "c": 0})" << "\n";
        out << R"({"problem_id": "dup", "n": 4, "c": 1})" << "\n";
    }
    CHECK_THROWS_AS(eval::load_results(path), DuplicateIdError);
    std::filesystem::remove(path);

    {
        std::ofstream out(path);
    }
    CHECK_THROWS_AS(eval::load_results(path), EmptyDatasetError);
    std::filesystem::remove(path);
}
