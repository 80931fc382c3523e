#pragma once

#include <map>
#include <string>
#include <vector>

#include "qm/error.hpp"

namespace qm {

// Normalized measure values for one measure across the baseline corpus,
// one entry per baseline system. At least 10 systems are required.
struct CalibrationSample {
    std::string measure_id;
    std::vector<double> values;
};

// Supporting numbers handed to the expert review alongside the thresholds.
// Quartiles and IQR range over the nonzero values.
struct DescriptiveStats {
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    int n_nonzero = 0;
    double min_value = 0.0;
    double max_value = 0.0;
};

struct CalibrationResult {
    double min = 0.0;
    double max = 0.0;
    DescriptiveStats stats;
    bool jump = false;  // fewer than 5 nonzero samples: thresholds (0, 1e-8)
};

// Percentile by linear interpolation at fractional position (n-1)*p of the
// sorted values. Throws Error("empty-sample") on empty input.
double quantile(std::vector<double> values, double p);

// Threshold derivation: with fewer than 5 nonzero samples the thresholds
// jump to (0, 1e-8); otherwise they are the extreme nonzero sample values
// inside the quartile outlier fences Q1 - 1.5*IQR and Q3 + 1.5*IQR.
CalibrationResult calibrate(const CalibrationSample& sample);

// Baseline CSV: header `system,<measureId>,...`, one row per system.
struct BaselineTable {
    std::vector<std::string> systems;
    std::map<std::string, std::vector<double>> columns;  // measure id -> per-system values
};

BaselineTable read_baseline_csv(std::string_view text);

// Review report, one row per calibrated measure, flagged with the IQR
// convention so reviewers know what the fences were computed from.
std::string calibration_report_csv(
    const std::vector<std::pair<std::string, CalibrationResult>>& rows);

} // namespace qm
