#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "qm/cli.hpp"
#include "qm/model_io.hpp"

using namespace qm;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    CliRun result;
    result.exit_code = run_cli(args, out, err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

fs::path fresh_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const fs::path dir = fs::temp_directory_path() /
                         ("qm-cli-" + tag + "-" + std::to_string(rng()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> demo_args() {
    std::vector<std::string> args;
    for (const auto& path : demo_files()) {
        args.push_back(path.string());
    }
    return args;
}

std::string strip_timestamp_lines(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find("\"timestamp\"") == std::string::npos) {
            out << line << "\n";
        }
    }
    return out.str();
}

} // namespace

TEST_CASE("validate accepts the demo model") {
    auto args = demo_args();
    args.insert(args.begin(), "validate");
    const CliRun result = run(args);
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("0 errors, 0 warnings") != std::string::npos);
    CHECK(result.err.empty());
}

TEST_CASE("validate reports broken models with exit code 1") {
    const CliRun result =
        run({"validate", (data_dir() / "broken" / "impact_direction.qm.json").string()});
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("impact-direction") != std::string::npos);
}

TEST_CASE("warnings alone keep exit code 0") {
    const CliRun result =
        run({"validate", (data_dir() / "broken" / "unreferenced.qm.json").string()});
    CHECK(result.exit_code == 0);
    CHECK(result.err.find("unreferenced") != std::string::npos);
    CHECK(result.out.find("0 errors, 1 warnings") != std::string::npos);
}

TEST_CASE("I/O and usage problems exit with code 2") {
    CHECK(run({"validate", "/nonexistent/nowhere.qm.json"}).exit_code == 2);
    CHECK(run({"frobnicate"}).exit_code == 2);
    CHECK(run({"assess"}).exit_code == 2);  // missing required options
    CHECK(run({}).exit_code == 2);
}

TEST_CASE("assess writes reports and a summary line") {
    const fs::path out_dir = fresh_dir("assess");
    auto args = demo_args();
    args.insert(args.begin(), "assess");
    args.push_back("--bundle");
    args.push_back((demo_dir() / "bundle.json").string());
    args.push_back("--manual");
    args.push_back((demo_dir() / "manual.csv").string());
    args.push_back("--out");
    args.push_back(out_dir.string());

    const CliRun result = run(args);
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(out_dir / "report.json"));
    CHECK(fs::exists(out_dir / "report.html"));
    CHECK(result.out.find("root.quality: grade 2 (2.21)") != std::string::npos);

    // Second run: byte-identical apart from the timestamp.
    const fs::path out_dir2 = fresh_dir("assess2");
    args.back() = out_dir2.string();
    CHECK(run(args).exit_code == 0);
    CHECK(strip_timestamp_lines(read_text_file(out_dir / "report.json")) ==
          strip_timestamp_lines(read_text_file(out_dir2 / "report.json")));
    fs::remove_all(out_dir);
    fs::remove_all(out_dir2);
}

TEST_CASE("multiple bundles land in per-system subdirectories") {
    const fs::path work = fresh_dir("multi");
    nlohmann::json second = nlohmann::json::parse(read_text_file(demo_dir() / "bundle.json"));
    second["system"]["version"] = "2.0.0";
    write_text_file(work / "bundle2.json", second.dump(2) + "\n");

    auto args = demo_args();
    args.insert(args.begin(), "assess");
    args.push_back("--bundle");
    args.push_back((demo_dir() / "bundle.json").string());
    args.push_back("--bundle");
    args.push_back((work / "bundle2.json").string());
    args.push_back("--out");
    args.push_back((work / "reports").string());

    const CliRun result = run(args);
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(work / "reports" / "demo-system-1.0.0" / "report.json"));
    CHECK(fs::exists(work / "reports" / "demo-system-2.0.0" / "report.json"));
    CHECK(fs::exists(work / "reports" / "demo-system-2.0.0" / "report.html"));

    // --manual is single-bundle only.
    args.push_back("--manual");
    args.push_back((demo_dir() / "manual.csv").string());
    CHECK(run(args).exit_code == 2);
    fs::remove_all(work);
}

TEST_CASE("manual results override bundle values with a warning") {
    const fs::path out_dir = fresh_dir("manual");
    const fs::path manual = out_dir / "override.csv";
    write_text_file(manual, "instrumentId,value\njava.loc-counter,100\n");

    auto args = demo_args();
    args.insert(args.begin(), "assess");
    args.push_back("--bundle");
    args.push_back((demo_dir() / "bundle.json").string());
    args.push_back("--manual");
    args.push_back(manual.string());
    args.push_back("--out");
    args.push_back((out_dir / "r").string());

    const CliRun result = run(args);
    CHECK(result.exit_code == 0);
    CHECK(result.err.find("manual-override") != std::string::npos);
    CHECK(result.err.find("java.loc-counter") != std::string::npos);
    fs::remove_all(out_dir);
}

TEST_CASE("weigh injects rank-order-centroid weights into a new revision") {
    const fs::path model_file = data_dir() / "weigh_model.qm.json";
    const std::string before = read_text_file(model_file);
    const fs::path out_dir = fresh_dir("weigh");

    const CliRun result = run({"weigh", model_file.string(), "--ranking",
                               (data_dir() / "ranking.csv").string(), "--out", out_dir.string()});
    CHECK(result.exit_code == 0);
    CHECK(read_text_file(model_file) == before);  // input untouched

    const ModuleDef revised = load_module_file(out_dir / "w.qm.json");
    for (const auto& evaluation : revised.evaluations) {
        if (evaluation.factor != "w.pf") {
            continue;
        }
        REQUIRE(evaluation.children.size() == 2);
        for (const auto& child : evaluation.children) {
            REQUIRE(child.weight.has_value());
            if (child.ref == "w.d1") {
                CHECK(*child.weight == doctest::Approx(0.75).epsilon(1e-12));
            } else {
                CHECK(*child.weight == doctest::Approx(0.25).epsilon(1e-12));
            }
        }
    }
    fs::remove_all(out_dir);
}

TEST_CASE("weigh leaves explicitly weighted evaluations alone") {
    const fs::path out_dir = fresh_dir("weigh-explicit");
    const fs::path ranking = out_dir / "ranking.csv";
    write_text_file(ranking, "parentId,childId,rank\nw.qa,w.pf,1\n");

    const CliRun result = run({"weigh", (data_dir() / "weigh_model.qm.json").string(),
                               "--ranking", ranking.string(), "--out", (out_dir / "m").string()});
    CHECK(result.exit_code == 0);
    CHECK(result.err.find("explicit-weights") != std::string::npos);
    fs::remove_all(out_dir);
}

TEST_CASE("calibrate rewrites thresholds and emits the review report") {
    const fs::path out_dir = fresh_dir("calibrate");
    const std::string input_before = read_text_file(demo_dir() / "root.qm.json");
    auto args = demo_args();
    args.insert(args.begin(), "calibrate");
    args.push_back("--baseline");
    args.push_back((data_dir() / "baseline.csv").string());
    args.push_back("--out");
    args.push_back(out_dir.string());

    const CliRun result = run(args);
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(out_dir / "calibration.csv"));
    CHECK(fs::exists(out_dir / "root.qm.json"));
    CHECK(fs::exists(out_dir / "java.qm.json"));

    // Thresholds on the calibrated measure children change; outlier 4.1e-5 is
    // trimmed, so max is the largest in-fence sample.
    const ModuleDef revised = load_module_file(out_dir / "root.qm.json");
    for (const auto& evaluation : revised.evaluations) {
        if (evaluation.factor != "root.general-expression-applicability") {
            continue;
        }
        for (const auto& child : evaluation.children) {
            if (child.ref == "root.doomed-nan-test-density") {
                CHECK(child.utility->min == doctest::Approx(1.0e-6));
                CHECK(child.utility->max == doctest::Approx(8.0e-6));
                CHECK(child.utility->direction == Direction::Decreasing);
            }
        }
    }
    const std::string report = read_text_file(out_dir / "calibration.csv");
    CHECK(report.find("root.doomed-nan-test-density") != std::string::npos);
    CHECK(report.find("root.clone-coverage") != std::string::npos);
    CHECK(read_text_file(demo_dir() / "root.qm.json") == input_before);  // input untouched
    fs::remove_all(out_dir);
}

TEST_CASE("compare tabulates improvements between report revisions") {
    const fs::path work = fresh_dir("compare");

    // Assess the shipped bundle, then a worsened revision of it.
    auto assess_to = [&](const fs::path& bundle, const fs::path& target) {
        auto args = demo_args();
        args.insert(args.begin(), "assess");
        args.push_back("--bundle");
        args.push_back(bundle.string());
        args.push_back("--manual");
        args.push_back((demo_dir() / "manual.csv").string());
        args.push_back("--out");
        args.push_back(target.string());
        REQUIRE(run(args).exit_code == 0);
    };
    assess_to(demo_dir() / "bundle.json", work / "v1");

    nlohmann::json bundle = nlohmann::json::parse(read_text_file(demo_dir() / "bundle.json"));
    bundle["system"]["version"] = "2.0.0";
    bundle["values"]["java.clone-scanner"] = 1200000;  // much more duplication
    write_text_file(work / "bundle2.json", bundle.dump(2) + "\n");
    assess_to(work / "bundle2.json", work / "v2");

    const CliRun result =
        run({"compare", "--reports", (work / "v1").string(), (work / "v2").string()});
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("system,version,factor,grade") != std::string::npos);
    CHECK(result.out.find("factor,from,to,improvement_percent") != std::string::npos);
    CHECK(result.out.find("demo-system@1.0.0,demo-system@2.0.0,") != std::string::npos);

    // More duplication means a worse grade, so the "improvement" is negative.
    std::istringstream lines(result.out);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        if (line.rfind("root.quality,demo-system@1.0.0", 0) == 0) {
            const double value = std::stod(line.substr(line.rfind(',') + 1));
            CHECK(value < 0.0);
            found = true;
        }
    }
    CHECK(found);
    fs::remove_all(work);
}

TEST_CASE("rank-correlate reports r, p and the method") {
    const fs::path work = fresh_dir("correlate");
    const fs::path csv = work / "ranks.csv";
    write_text_file(csv,
                    "item,rankA,rankB\n"
                    "checkstyle,1,1\n"
                    "rssowl,2,3\n"
                    "log4j,2,2\n"
                    "tv-browser,4,4\n"
                    "jabref,5,5\n");
    const CliRun result = run({"rank-correlate", csv.string()});
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("n,r,p_one_sided,method") != std::string::npos);
    CHECK(result.out.find("exact-permutation") != std::string::npos);
    std::istringstream lines(result.out);
    std::string header;
    std::string data;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, data));
    REQUIRE(data.rfind("5,", 0) == 0);
    const double r = std::stod(data.substr(2, data.find(',', 2) - 2));
    CHECK(std::abs(r - 0.975) <= 0.001);

    write_text_file(csv, "item,rankA,rankB\nx,1,1\ny,1,2\n");
    CHECK(run({"rank-correlate", csv.string()}).exit_code == 1);  // zero variance
    fs::remove_all(work);
}
