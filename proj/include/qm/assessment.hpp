#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qm/model.hpp"

namespace qm {

// Raw measurement data for one system: instrument id -> value, as produced
// by analysis tools plus optional manual results. Values are finite and
// nonnegative.
struct MeasurementBundle {
    std::string system_name;
    std::string system_version;
    std::map<std::string, double> values;
    std::map<std::string, InstrumentKind> provenance;
};

// Bundle JSON: {"system": {"name", "version"}, "values": {id: number}}.
MeasurementBundle parse_bundle(std::string_view text);
std::string serialize_bundle(const MeasurementBundle& bundle);

// Merges a `instrumentId,value` CSV of manual results into the bundle. The
// CSV wins on conflict; each override is reported as a warning string.
std::vector<std::string> merge_manual_csv(MeasurementBundle& bundle, std::string_view csv_text);

struct MeasureValue {
    std::string measure_id;
    std::optional<double> value;  // nullopt = missing

    bool missing() const { return !value.has_value(); }
};

// Utility bounds in [0,1]. Complete measurement data collapses lo == hi;
// a missing leaf widens to [0,1].
struct UtilityInterval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
};

// School grade: 1 best, 6 worst. discrete = floor(continuous), clamped.
struct Grade {
    double continuous = 6.0;
    int discrete = 6;
};

// Piecewise-linear preference in [0,1]. Decreasing: 1 at or below min, 0 at
// or above max. Increasing mirrors that. Requires min < max and finite x.
double utility(double x, const UtilityFunction& function);

// Base measures sum the values of all their instruments and are missing if
// any instrument value is absent (or the measure has no instruments).
// Derived-ratio measures divide numerator by normalizer and are missing if
// either side is missing or the normalizer is zero.
MeasureValue evaluate_measure(const QualityModel& model, const MeasurementBundle& bundle,
                              const std::string& measure_id);

// Weighted-sum aggregation with interval propagation; children reached over
// a negative impact contribute the reversed interval [1-hi, 1-lo].
UtilityInterval assess_factor(const QualityModel& model, const MeasurementBundle& bundle,
                              const std::string& factor_id);

// Grade from the interval midpoint: continuous = 6 - 5 * midpoint.
Grade interpret(const UtilityInterval& interval);

struct MeasureContribution {
    std::string measure_id;
    std::optional<double> value;
    UtilityInterval utility;  // point for present values, [0,1] for missing
    double weight = 0.0;
};

struct AssessedChild {
    std::string ref;
    EvaluationChild::Kind kind = EvaluationChild::Kind::Factor;
    double weight = 0.0;
    bool negated = false;
};

struct FactorAssessment {
    std::string factor_id;
    std::string name;
    FactorKind kind = FactorKind::ProductFactor;
    UtilityInterval utility;
    Grade grade;                  // from the interval midpoint
    double grade_best = 1.0;      // continuous grade at utility hi
    double grade_worst = 6.0;     // continuous grade at utility lo
    bool low_confidence = false;  // interval width above 0.1
    std::vector<AssessedChild> children;  // ordered weight desc, id asc
    std::vector<MeasureContribution> measures;
};

// Every factor of the model that has an evaluation appears exactly once in
// `factors`; `roots` lists the unrefined quality aspects that were assessed.
struct AssessmentResult {
    std::string system_name;
    std::string system_version;
    std::vector<std::string> module_ids;
    std::vector<std::string> roots;
    std::map<std::string, FactorAssessment> factors;
};

// Full deterministic assessment of one bundle against a validated model.
// Missing data never fails; it widens intervals.
AssessmentResult assess(const QualityModel& model, const MeasurementBundle& bundle);

} // namespace qm
