#include "qm/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qm {

namespace {

using nlohmann::json;

double round4(double value) { return std::round(value * 1e4) / 1e4; }

std::string format2(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return std::move(out).str();
}

std::string escape_html(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c; break;
        }
    }
    return out;
}

json interval_to_json(const UtilityInterval& interval) {
    return json{{"lo", round4(interval.lo)},
                {"lo_raw", interval.lo},
                {"hi", round4(interval.hi)},
                {"hi_raw", interval.hi},
                {"width", round4(interval.width())}};
}

} // namespace

std::string current_utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t time = std::chrono::system_clock::to_time_t(now);
    std::tm utc{};
    gmtime_r(&time, &utc);
    std::ostringstream out;
    out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return std::move(out).str();
}

std::string report_to_json(const AssessmentResult& result, const std::string& timestamp_utc) {
    json factors = json::object();
    for (const auto& [factor_id, node] : result.factors) {
        json children = json::array();
        for (const auto& child : node.children) {
            children.push_back(json{
                {"id", child.ref},
                {"kind", child.kind == EvaluationChild::Kind::Measure ? "measure" : "factor"},
                {"weight", round4(child.weight)},
                {"weight_raw", child.weight},
                {"negated", child.negated}});
        }
        json measures = json::array();
        for (const auto& contribution : node.measures) {
            json entry{{"id", contribution.measure_id},
                       {"status", contribution.value ? "present" : "missing"},
                       {"utility", interval_to_json(contribution.utility)},
                       {"weight", round4(contribution.weight)}};
            if (contribution.value) {
                entry["value"] = *contribution.value;
            }
            measures.push_back(std::move(entry));
        }
        factors[factor_id] = json{
            {"name", node.name},
            {"kind", to_string(node.kind)},
            {"utility", interval_to_json(node.utility)},
            {"grade", json{{"continuous", round4(node.grade.continuous)},
                           {"continuous_raw", node.grade.continuous},
                           {"discrete", node.grade.discrete}}},
            {"grade_range", json{{"best", round4(node.grade_best)},
                                 {"worst", round4(node.grade_worst)}}},
            {"low_confidence", node.low_confidence},
            {"children", std::move(children)},
            {"measures", std::move(measures)}};
    }

    json document{{"metadata", json{{"system", result.system_name},
                                    {"version", result.system_version},
                                    {"model_modules", result.module_ids},
                                    {"timestamp", timestamp_utc}}},
                  {"roots", result.roots},
                  {"factors", std::move(factors)}};
    return document.dump(2) + "\n";
}

namespace {

constexpr const char* kStyle = R"css(
body { font-family: -apple-system, "Segoe UI", Helvetica, Arial, sans-serif; margin: 24px; color: #1c2733; }
h1 { font-size: 1.4em; } h2 { font-size: 1.1em; margin-top: 1.6em; }
.meta { color: #667; font-size: 0.9em; }
details.factor-node { margin: 4px 0 4px 18px; border-left: 2px solid #dde4ea; padding-left: 10px; }
details.factor-node > summary { cursor: pointer; list-style-position: outside; }
.badge { display: inline-block; min-width: 4.5em; text-align: center; border-radius: 4px;
         padding: 1px 6px; margin-right: 6px; color: #fff; font-weight: 600; }
.g1 { background: #1a7f37; } .g2 { background: #4da53c; } .g3 { background: #b0a000; }
.g4 { background: #d97706; } .g5 { background: #d9480f; } .g6 { background: #b02a2a; }
.bar { display: inline-block; width: 120px; height: 10px; background: #eceff2;
       border: 1px solid #ccd4da; vertical-align: middle; margin: 0 6px; }
.bar > span { display: block; height: 100%; background: #5b8bd0; }
.low-confidence-flag { color: #b02a2a; font-weight: 600; }
.weight { color: #667; font-size: 0.85em; }
.factor-ref { margin: 4px 0 4px 18px; padding-left: 10px; color: #667; font-style: italic; }
table { border-collapse: collapse; margin: 6px 0 10px 18px; font-size: 0.9em; }
th, td { border: 1px solid #d5dbe1; padding: 3px 8px; text-align: left; }
th { background: #f2f5f7; }
.missing { color: #99651a; }
)css";

class HtmlWriter {
public:
    HtmlWriter(const AssessmentResult& result, std::ostringstream& out)
        : result_(result), out_(out) {}

    void factor_tree(const std::string& factor_id, double weight, bool negated, bool top_level) {
        const FactorAssessment& node = result_.factors.at(factor_id);
        if (!rendered_.insert(factor_id).second) {
            // A factor shared by several parents renders once; later parents
            // show a reference stub.
            out_ << "<div class=\"factor-ref\">" << weight_label(weight, negated, top_level)
                 << escape_html(node.name) << " (" << escape_html(factor_id)
                 << ") &#8212; see first occurrence</div>\n";
            return;
        }
        out_ << "<details class=\"factor-node\" open><summary>";
        out_ << grade_badge(node.grade);
        out_ << weight_label(weight, negated, top_level);
        out_ << "<strong>" << escape_html(node.name) << "</strong> <span class=\"meta\">("
             << escape_html(factor_id) << ")</span>";
        out_ << interval_bar(node.utility);
        if (node.low_confidence) {
            out_ << " <span class=\"low-confidence-flag\">low confidence (width "
                 << format2(node.utility.width()) << ")</span>";
        }
        out_ << "</summary>\n";
        if (!node.measures.empty()) {
            measure_table(node);
        }
        for (const auto& child : node.children) {
            if (child.kind == EvaluationChild::Kind::Factor) {
                factor_tree(child.ref, child.weight, child.negated, false);
            }
        }
        out_ << "</details>\n";
    }

    bool rendered(const std::string& factor_id) const { return rendered_.count(factor_id) > 0; }

private:
    std::string grade_badge(const Grade& grade) const {
        std::ostringstream badge;
        badge << "<span class=\"badge g" << grade.discrete << "\">" << grade.discrete << " ("
              << format2(grade.continuous) << ")</span>";
        return badge.str();
    }

    std::string interval_bar(const UtilityInterval& interval) const {
        const double width = std::max(interval.width() * 100.0, 1.0);  // keep points visible
        std::ostringstream bar;
        bar << "<span class=\"bar\" title=\"utility [" << format2(interval.lo) << ", "
            << format2(interval.hi) << "]\"><span style=\"margin-left:"
            << format2(std::min(interval.lo * 100.0, 99.0)) << "%;width:" << format2(width)
            << "%\"></span></span>";
        return bar.str();
    }

    std::string weight_label(double weight, bool negated, bool top_level) const {
        if (top_level) {
            return "";
        }
        std::ostringstream label;
        label << "<span class=\"weight\">w=" << format2(weight) << (negated ? ", inverted" : "")
              << "</span> ";
        return label.str();
    }

    void measure_table(const FactorAssessment& node) {
        out_ << "<table><tr><th>measure</th><th>weight</th><th>value</th><th>utility</th></tr>\n";
        for (const auto& contribution : node.measures) {
            out_ << "<tr><td>" << escape_html(contribution.measure_id) << "</td><td>"
                 << format2(contribution.weight) << "</td>";
            if (contribution.value) {
                out_ << "<td>" << *contribution.value << "</td><td>"
                     << format2(contribution.utility.lo) << "</td>";
            } else {
                out_ << "<td class=\"missing\">missing</td><td class=\"missing\">[0.00, 1.00]</td>";
            }
            out_ << "</tr>\n";
        }
        out_ << "</table>\n";
    }

    const AssessmentResult& result_;
    std::ostringstream& out_;
    std::set<std::string> rendered_;
};

} // namespace

std::string report_to_html(const AssessmentResult& result, const std::string& timestamp_utc) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>"
        << "Quality assessment: " << escape_html(result.system_name) << " "
        << escape_html(result.system_version) << "</title>\n<style>" << kStyle
        << "</style>\n</head>\n<body>\n";
    out << "<h1>Quality assessment &#8212; " << escape_html(result.system_name) << " "
        << escape_html(result.system_version) << "</h1>\n";
    out << "<p class=\"meta\">generated " << escape_html(timestamp_utc) << " &#183; model modules: ";
    for (std::size_t i = 0; i < result.module_ids.size(); ++i) {
        out << (i ? ", " : "") << escape_html(result.module_ids[i]);
    }
    out << " &#183; grades run 1 (best) to 6 (worst)</p>\n";

    HtmlWriter writer(result, out);
    out << "<h2>Quality aspect tree</h2>\n";
    for (const auto& root : result.roots) {
        writer.factor_tree(root, 1.0, false, true);
    }

    std::vector<std::string> standalone;
    for (const auto& [factor_id, _] : result.factors) {
        if (!writer.rendered(factor_id)) {
            standalone.push_back(factor_id);
        }
    }
    if (!standalone.empty()) {
        out << "<h2>Other evaluated factors</h2>\n";
        for (const auto& factor_id : standalone) {
            if (!writer.rendered(factor_id)) {
                writer.factor_tree(factor_id, 1.0, false, true);
            }
        }
    }

    out << "<h2>Measure contributions</h2>\n";
    out << "<table><tr><th>factor</th><th>measure</th><th>weight</th><th>value</th>"
        << "<th>utility</th></tr>\n";
    for (const auto& [factor_id, node] : result.factors) {
        for (const auto& contribution : node.measures) {
            out << "<tr><td>" << escape_html(factor_id) << "</td><td>"
                << escape_html(contribution.measure_id) << "</td><td>"
                << format2(contribution.weight) << "</td>";
            if (contribution.value) {
                out << "<td>" << *contribution.value << "</td><td>"
                    << format2(contribution.utility.lo) << "</td>";
            } else {
                out << "<td class=\"missing\">missing</td><td class=\"missing\">[0.00, 1.00]</td>";
            }
            out << "</tr>\n";
        }
    }
    out << "</table>\n</body>\n</html>\n";
    return std::move(out).str();
}

} // namespace qm
