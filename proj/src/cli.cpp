#include "qm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qm/assessment.hpp"
#include "qm/calibration.hpp"
#include "qm/csv.hpp"
#include "qm/model.hpp"
#include "qm/model_io.hpp"
#include "qm/report.hpp"
#include "qm/stats.hpp"
#include "qm/weighting.hpp"

namespace qm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitModelError = 1;
constexpr int kExitParseError = 2;
constexpr int kExitInternalError = 3;

std::vector<fs::path> to_paths(const std::vector<std::string>& names) {
    return {names.begin(), names.end()};
}

void print_diagnostic(std::ostream& err, const Diagnostic& diagnostic) {
    err << (diagnostic.severity == Diagnostic::Severity::Error ? "error" : "warning") << " ["
        << diagnostic.code << "] " << diagnostic.element << ": " << diagnostic.message << "\n";
}

void print_error(std::ostream& err, const Error& e) {
    err << "error [" << e.code() << "] " << (e.element().empty() ? "-" : e.element()) << ": "
        << e.message() << "\n";
}

// Loads, resolves and validates; prints every diagnostic. Returns the model
// only when it is free of errors.
QualityModel load_validated_model(const std::vector<std::string>& model_files, std::ostream& err) {
    QualityModel model = resolve(load_model_files(to_paths(model_files)));
    const std::vector<Diagnostic> diagnostics = validate(model);
    bool has_errors = false;
    for (const auto& diagnostic : diagnostics) {
        print_diagnostic(err, diagnostic);
        has_errors |= diagnostic.severity == Diagnostic::Severity::Error;
    }
    if (has_errors) {
        throw Error("invalid-model", "", "model has validation errors");
    }
    return model;
}

int cmd_validate(const std::vector<std::string>& model_files, std::ostream& out,
                 std::ostream& err) {
    std::vector<ModuleDef> modules = load_model_files(to_paths(model_files));
    QualityModel model;
    try {
        model = resolve(std::move(modules));
    } catch (const Error& e) {
        print_error(err, e);
        out << "invalid: resolution failed\n";
        return kExitModelError;
    }

    int errors = 0;
    int warnings = 0;
    for (const auto& diagnostic : validate(model)) {
        print_diagnostic(err, diagnostic);
        (diagnostic.severity == Diagnostic::Severity::Error ? errors : warnings)++;
    }
    out << model.modules().size() << " modules, " << model.factors().size() << " factors, "
        << model.measures().size() << " measures, " << model.instruments().size()
        << " instruments: " << errors << " errors, " << warnings << " warnings\n";
    return errors > 0 ? kExitModelError : kExitOk;
}

int cmd_calibrate(const std::vector<std::string>& model_files, const std::string& baseline_file,
                  const std::string& out_dir, std::ostream& out, std::ostream& err) {
    QualityModel model = load_validated_model(model_files, err);
    const BaselineTable baseline = read_baseline_csv(read_text_file(baseline_file));

    std::vector<std::pair<std::string, CalibrationResult>> calibrated;
    for (const auto& [measure_id, values] : baseline.columns) {
        calibrated.emplace_back(measure_id, calibrate({measure_id, values}));
    }

    std::vector<ModuleDef> revised(model.modules());
    int applied = 0;
    for (auto& module : revised) {
        for (auto& evaluation : module.evaluations) {
            for (auto& child : evaluation.children) {
                if (child.kind != EvaluationChild::Kind::Measure || !child.utility) {
                    continue;
                }
                auto row = std::find_if(calibrated.begin(), calibrated.end(),
                                        [&](const auto& entry) { return entry.first == child.ref; });
                if (row == calibrated.end()) {
                    continue;
                }
                if (row->second.jump && child.utility->direction == Direction::Increasing) {
                    throw Error("jump-direction", evaluation.factor,
                                "calibration of '" + child.ref +
                                    "' hit the jump branch, which is illegal for an increasing utility");
                }
                child.utility->min = row->second.min;
                child.utility->max = row->second.max;
                ++applied;
            }
        }
    }

    fs::create_directories(out_dir);
    for (const auto& module : revised) {
        save_module_file(fs::path(out_dir) / (module.id + ".qm.json"), module);
    }
    write_text_file(fs::path(out_dir) / "calibration.csv", calibration_report_csv(calibrated));
    out << "calibrated " << calibrated.size() << " measures, updated " << applied
        << " utility functions, wrote " << revised.size() << " modules to " << out_dir << "\n";
    return kExitOk;
}

int cmd_weigh(const std::vector<std::string>& model_files, const std::string& ranking_file,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
    load_validated_model(model_files, err);  // structural gate on the input
    std::vector<ModuleDef> modules = load_model_files(to_paths(model_files));
    const std::map<std::string, Ranking> rankings = read_ranking_csv(read_text_file(ranking_file));

    int injected = 0;
    for (const auto& [parent_id, ranking] : rankings) {
        Evaluation* evaluation = nullptr;
        for (auto& module : modules) {
            for (auto& candidate : module.evaluations) {
                if (candidate.factor == parent_id) {
                    evaluation = &candidate;
                }
            }
        }
        if (!evaluation) {
            throw Error("unknown-id", parent_id, "ranking names a factor without an evaluation");
        }
        const bool any_explicit =
            std::any_of(evaluation->children.begin(), evaluation->children.end(),
                        [](const EvaluationChild& child) { return child.weight.has_value(); });
        if (any_explicit) {
            err << "warning [explicit-weights] " << parent_id
                << ": evaluation already carries explicit weights, ranking ignored\n";
            continue;
        }

        const std::map<std::string, double> weights = weights_from_ranking(ranking);
        std::set<std::string> child_refs;
        for (const auto& child : evaluation->children) {
            child_refs.insert(child.ref);
        }
        for (const auto& [ranked_id, _] : weights) {
            if (!child_refs.count(ranked_id)) {
                throw Error("ranking-coverage", parent_id,
                            "ranking names '" + ranked_id + "', which is not an evaluation child");
            }
        }
        for (auto& child : evaluation->children) {
            auto weight = weights.find(child.ref);
            if (weight == weights.end()) {
                throw Error("ranking-coverage", parent_id,
                            "child '" + child.ref + "' is missing from the ranking");
            }
            child.weight = weight->second;
            ++injected;
        }
    }

    // The revised model must still resolve and validate cleanly.
    QualityModel revised = resolve(modules);
    for (const auto& diagnostic : validate(revised)) {
        if (diagnostic.severity == Diagnostic::Severity::Error) {
            throw std::logic_error("weight injection produced an invalid model: " +
                                   diagnostic.code + " on " + diagnostic.element);
        }
    }

    fs::create_directories(out_dir);
    for (const auto& module : modules) {
        save_module_file(fs::path(out_dir) / (module.id + ".qm.json"), module);
    }
    out << "injected " << injected << " weights into " << rankings.size()
        << " evaluations, wrote " << modules.size() << " modules to " << out_dir << "\n";
    return kExitOk;
}

int cmd_assess(const std::vector<std::string>& model_files,
               const std::vector<std::string>& bundle_files, const std::string& manual_file,
               const std::string& out_dir, std::ostream& out, std::ostream& err) {
    QualityModel model = load_validated_model(model_files, err);

    std::vector<MeasurementBundle> bundles;
    for (const auto& bundle_file : bundle_files) {
        bundles.push_back(parse_bundle(read_text_file(bundle_file)));
    }
    if (!manual_file.empty()) {
        for (const auto& warning : merge_manual_csv(bundles.front(), read_text_file(manual_file))) {
            err << "warning [manual-override] " << warning << "\n";
        }
    }

    std::set<std::string> output_names;
    for (const auto& bundle : bundles) {
        if (!output_names.insert(bundle.system_name + "-" + bundle.system_version).second) {
            throw Error("duplicate-system", bundle.system_name + " " + bundle.system_version,
                        "two bundles would write to the same report directory");
        }
    }

    // Assessments of independent bundles are pure; evaluate them in parallel
    // and write sequentially in argument order.
    std::vector<std::future<AssessmentResult>> futures;
    futures.reserve(bundles.size());
    for (const auto& bundle : bundles) {
        futures.push_back(std::async(bundles.size() > 1 ? std::launch::async
                                                        : std::launch::deferred,
                                     [&model, &bundle] { return assess(model, bundle); }));
    }

    const std::string timestamp = current_utc_timestamp();
    for (std::size_t i = 0; i < futures.size(); ++i) {
        const AssessmentResult result = futures[i].get();
        const fs::path target = bundles.size() == 1
                                    ? fs::path(out_dir)
                                    : fs::path(out_dir) / (result.system_name + "-" +
                                                           result.system_version);
        fs::create_directories(target);
        write_text_file(target / "report.json", report_to_json(result, timestamp));
        write_text_file(target / "report.html", report_to_html(result, timestamp));
        for (const auto& root : result.roots) {
            const FactorAssessment& node = result.factors.at(root);
            out << result.system_name << " " << result.system_version << " " << root << ": grade "
                << node.grade.discrete << " (" << std::fixed << std::setprecision(2)
                << node.grade.continuous << "), utility [" << std::setprecision(4)
                << node.utility.lo << ", " << node.utility.hi << "]\n";
            out.unsetf(std::ios::fixed);
        }
    }
    return kExitOk;
}

struct ReportSummary {
    std::string system;
    std::string version;
    std::map<std::string, double> root_grades;
};

ReportSummary read_report_summary(const fs::path& report_dir) {
    const fs::path path = report_dir / "report.json";
    json document;
    try {
        document = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("syntax", path.string() + ": " + e.what());
    }
    ReportSummary summary;
    try {
        summary.system = document.at("metadata").at("system").get<std::string>();
        summary.version = document.at("metadata").at("version").get<std::string>();
        for (const auto& root : document.at("roots")) {
            const json& grade = document.at("factors").at(root.get<std::string>()).at("grade");
            summary.root_grades[root.get<std::string>()] =
                grade.contains("continuous_raw") ? grade["continuous_raw"].get<double>()
                                                 : grade.at("continuous").get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError("schema", path.string() + ": " + e.what());
    }
    return summary;
}

int cmd_compare(const std::vector<std::string>& report_dirs, std::ostream& out) {
    std::vector<ReportSummary> summaries;
    for (const auto& dir : report_dirs) {
        summaries.push_back(read_report_summary(dir));
    }

    out << "system,version,factor,grade\n";
    std::set<std::string> all_roots;
    for (const auto& summary : summaries) {
        for (const auto& [root, grade] : summary.root_grades) {
            out << summary.system << ',' << summary.version << ',' << root << ',' << std::fixed
                << std::setprecision(4) << grade << "\n";
            all_roots.insert(root);
        }
    }

    out << "\nfactor,from,to,improvement_percent\n";
    for (const auto& root : all_roots) {
        for (std::size_t i = 0; i < summaries.size(); ++i) {
            if (!summaries[i].root_grades.count(root)) {
                continue;
            }
            for (std::size_t j = i + 1; j < summaries.size(); ++j) {
                if (!summaries[j].root_grades.count(root)) {
                    continue;
                }
                const double improvement = improvement_percent(summaries[i].root_grades.at(root),
                                                               summaries[j].root_grades.at(root));
                out << root << ',' << summaries[i].system << '@' << summaries[i].version << ','
                    << summaries[j].system << '@' << summaries[j].version << ',' << std::fixed
                    << std::setprecision(4) << improvement << "\n";
            }
        }
    }
    out.unsetf(std::ios::fixed);
    return kExitOk;
}

int cmd_rank_correlate(const std::string& csv_file, std::ostream& out) {
    const CsvTable table = parse_csv(read_text_file(csv_file));
    const bool scores = table.header == std::vector<std::string>{"item", "scoreA", "scoreB"};
    const bool ranks = table.header == std::vector<std::string>{"item", "rankA", "rankB"};
    if (!scores && !ranks) {
        throw ParseError("csv-shape",
                         "header must be 'item,scoreA,scoreB' or 'item,rankA,rankB'");
    }
    std::vector<std::string> labels;
    std::vector<double> a;
    std::vector<double> b;
    int line = 1;
    for (const auto& row : table.rows) {
        ++line;
        labels.push_back(row[0]);
        a.push_back(parse_csv_number(row[1], line));
        b.push_back(parse_csv_number(row[2], line));
    }

    // Grades and ranks both order best-first ascending; pre-supplied ranks
    // with competition ties are normalised to average ranks the same way.
    const RankVector rank_a = average_ranks(labels, a, RankDirection::Ascending);
    const RankVector rank_b = average_ranks(labels, b, RankDirection::Ascending);
    const CorrelationResult result = spearman(rank_a, rank_b);
    out << "n,r,p_one_sided,method\n";
    out << result.n << ',' << std::fixed << std::setprecision(6) << result.r << ','
        << result.p_one_sided << ',' << to_string(result.method) << "\n";
    out.unsetf(std::ios::fixed);
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quality model assessment toolkit"};
    app.require_subcommand(1);

    std::vector<std::string> model_files;
    std::vector<std::string> bundle_files;
    std::vector<std::string> report_dirs;
    std::string baseline_file;
    std::string ranking_file;
    std::string manual_file;
    std::string out_dir;
    std::string csv_file;

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Resolve model files and report structural diagnostics");
    validate_cmd->add_option("models", model_files, "Model module files (*.qm.json)")
        ->required();

    CLI::App* calibrate_cmd = app.add_subcommand(
        "calibrate", "Derive utility thresholds from baseline measurements");
    calibrate_cmd->add_option("models", model_files, "Model module files")->required();
    calibrate_cmd->add_option("--baseline", baseline_file, "Baseline CSV (system,<measureId>,...)")
        ->required();
    calibrate_cmd->add_option("--out", out_dir, "Directory for the revised model and report")
        ->required();

    CLI::App* weigh_cmd =
        app.add_subcommand("weigh", "Inject rank-order-centroid weights from a ranking");
    weigh_cmd->add_option("models", model_files, "Model module files")->required();
    weigh_cmd->add_option("--ranking", ranking_file, "Ranking CSV (parentId,childId,rank)")
        ->required();
    weigh_cmd->add_option("--out", out_dir, "Directory for the revised model")->required();

    CLI::App* assess_cmd =
        app.add_subcommand("assess", "Assess measurement bundles against the model");
    assess_cmd->add_option("models", model_files, "Model module files")->required();
    assess_cmd->add_option("--bundle", bundle_files, "Measurement bundle JSON (repeatable)")
        ->required();
    assess_cmd->add_option("--manual", manual_file, "Manual results CSV (instrumentId,value)");
    assess_cmd->add_option("--out", out_dir, "Directory for report.json and report.html")
        ->required();

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Tabulate grades and improvements across reports");
    compare_cmd->add_option("--reports", report_dirs, "Directories containing report.json")
        ->required();

    CLI::App* correlate_cmd =
        app.add_subcommand("rank-correlate", "Spearman rank correlation of two score columns");
    correlate_cmd->add_option("csv", csv_file, "CSV with item,scoreA,scoreB or item,rankA,rankB")
        ->required();

    std::vector<const char*> argv;
    argv.push_back("qmtool");
    for (const auto& arg : args) {
        argv.push_back(arg.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error [usage] " << e.what() << "\n";
        return kExitParseError;
    }

    try {
        if (validate_cmd->parsed()) {
            return cmd_validate(model_files, out, err);
        }
        if (calibrate_cmd->parsed()) {
            return cmd_calibrate(model_files, baseline_file, out_dir, out, err);
        }
        if (weigh_cmd->parsed()) {
            return cmd_weigh(model_files, ranking_file, out_dir, out, err);
        }
        if (assess_cmd->parsed()) {
            if (!manual_file.empty() && bundle_files.size() != 1) {
                err << "error [usage] --manual requires exactly one --bundle\n";
                return kExitParseError;
            }
            return cmd_assess(model_files, bundle_files, manual_file, out_dir, out, err);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(report_dirs, out);
        }
        if (correlate_cmd->parsed()) {
            return cmd_rank_correlate(csv_file, out);
        }
        err << "error [usage] no subcommand selected\n";
        return kExitParseError;
    } catch (const ParseError& e) {
        print_error(err, e);
        return kExitParseError;
    } catch (const IoError& e) {
        print_error(err, e);
        return kExitParseError;
    } catch (const Error& e) {
        if (e.code() != "invalid-model") {  // diagnostics already printed
            print_error(err, e);
        }
        return kExitModelError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternalError;
    }
}

} // namespace qm
