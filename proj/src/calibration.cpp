#include "qm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qm/csv.hpp"

namespace qm {

namespace {

constexpr int kMinSamples = 10;
constexpr int kMinNonzero = 5;
constexpr double kJumpMax = 1e-8;

std::string format_full(double value) {
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

} // namespace

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw Error("empty-sample", "", "quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error("bad-quantile", "", "p must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double position = static_cast<double>(values.size() - 1) * p;
    const std::size_t lower = static_cast<std::size_t>(std::floor(position));
    const double fraction = position - static_cast<double>(lower);
    if (lower + 1 >= values.size()) {
        return values.back();
    }
    return values[lower] + fraction * (values[lower + 1] - values[lower]);
}

CalibrationResult calibrate(const CalibrationSample& sample) {
    if (static_cast<int>(sample.values.size()) < kMinSamples) {
        throw Error("too-few-samples", sample.measure_id,
                    "need at least " + std::to_string(kMinSamples) + " baseline systems, got " +
                        std::to_string(sample.values.size()));
    }
    std::vector<double> nonzero;
    for (double value : sample.values) {
        if (!std::isfinite(value) || value < 0.0) {
            throw Error("bad-sample", sample.measure_id,
                        "sample values must be finite and nonnegative");
        }
        if (value > 0.0) {
            nonzero.push_back(value);
        }
    }

    CalibrationResult result;
    result.stats.n_nonzero = static_cast<int>(nonzero.size());
    result.stats.min_value = *std::min_element(sample.values.begin(), sample.values.end());
    result.stats.max_value = *std::max_element(sample.values.begin(), sample.values.end());
    if (!nonzero.empty()) {
        result.stats.q1 = quantile(nonzero, 0.25);
        result.stats.q3 = quantile(nonzero, 0.75);
        result.stats.iqr = result.stats.q3 - result.stats.q1;
    }

    if (result.stats.n_nonzero < kMinNonzero) {
        result.jump = true;
        result.min = 0.0;
        result.max = kJumpMax;
        return result;
    }

    const double upper_fence = result.stats.q3 + 1.5 * result.stats.iqr;
    const double lower_fence = result.stats.q1 - 1.5 * result.stats.iqr;
    double max = -1.0;
    double min = -1.0;
    for (double value : nonzero) {
        if (value <= upper_fence && value > max) {
            max = value;
        }
        if (value >= lower_fence && (min < 0.0 || value < min)) {
            min = value;
        }
    }
    // Q1 and Q3 lie inside the nonzero range, so both fences keep at least
    // one sample value.
    if (min == max) {
        throw Error("degenerate-thresholds", sample.measure_id,
                    "trimmed extremes coincide at " + format_full(min));
    }
    result.min = min;
    result.max = max;
    return result;
}

BaselineTable read_baseline_csv(std::string_view text) {
    const CsvTable table = parse_csv(text);
    if (table.header.empty() || table.header[0] != "system" || table.header.size() < 2) {
        throw ParseError("csv-shape", "baseline header must be 'system,<measureId>,...'");
    }
    BaselineTable baseline;
    for (std::size_t column = 1; column < table.header.size(); ++column) {
        if (baseline.columns.count(table.header[column])) {
            throw ParseError("csv-shape", "duplicate baseline column '" + table.header[column] + "'");
        }
        baseline.columns[table.header[column]] = {};
    }
    int line = 1;
    for (const auto& row : table.rows) {
        ++line;
        baseline.systems.push_back(row[0]);
        for (std::size_t column = 1; column < table.header.size(); ++column) {
            baseline.columns[table.header[column]].push_back(parse_csv_number(row[column], line));
        }
    }
    return baseline;
}

std::string calibration_report_csv(
    const std::vector<std::pair<std::string, CalibrationResult>>& rows) {
    std::ostringstream out;
    out << "# quartiles and IQR are computed over the nonzero sample values\n";
    out << "measureId,min,max,q1,q3,iqr,nNonzero,minValue,maxValue,jump\n";
    for (const auto& [measure_id, result] : rows) {
        out << measure_id << ',' << format_full(result.min) << ',' << format_full(result.max) << ','
            << format_full(result.stats.q1) << ',' << format_full(result.stats.q3) << ','
            << format_full(result.stats.iqr) << ',' << result.stats.n_nonzero << ','
            << format_full(result.stats.min_value) << ',' << format_full(result.stats.max_value)
            << ',' << (result.jump ? "yes" : "no") << '\n';
    }
    return std::move(out).str();
}

} // namespace qm
