#include "qm/assessment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "qm/csv.hpp"

namespace qm {

namespace {

using nlohmann::json;

constexpr double kLowConfidenceWidth = 0.1;

UtilityInterval point_interval(double u) { return {u, u}; }

UtilityInterval clamp_interval(UtilityInterval interval) {
    interval.lo = std::min(1.0, std::max(0.0, interval.lo));
    interval.hi = std::min(1.0, std::max(0.0, interval.hi));
    return interval;
}

class FactorEvaluator {
public:
    FactorEvaluator(const QualityModel& model, const MeasurementBundle& bundle)
        : model_(model), bundle_(bundle) {}

    UtilityInterval evaluate(const std::string& factor_id) {
        auto memo = memo_.find(factor_id);
        if (memo != memo_.end()) {
            return memo->second;
        }
        if (in_progress_.count(factor_id)) {
            throw Error("refinement-cycle", factor_id, "evaluation recursion hit a cycle");
        }
        const ResolvedEvaluation* evaluation = model_.evaluation(factor_id);
        if (!evaluation) {
            throw Error("no-evaluation", factor_id, "factor has no evaluation");
        }
        in_progress_.insert(factor_id);

        UtilityInterval sum{0.0, 0.0};
        if (evaluation->children.empty()) {
            sum = {0.0, 1.0};  // nothing known about an empty evaluation
        }
        for (const auto& child : evaluation->children) {
            UtilityInterval value = child.kind == EvaluationChild::Kind::Measure
                                        ? measure_interval(child)
                                        : evaluate(child.ref);
            if (child.negated) {
                value = {1.0 - value.hi, 1.0 - value.lo};
            }
            sum.lo += child.weight * value.lo;
            sum.hi += child.weight * value.hi;
        }
        sum = clamp_interval(sum);

        in_progress_.erase(factor_id);
        memo_.emplace(factor_id, sum);
        return sum;
    }

    UtilityInterval measure_interval(const ResolvedChild& child) const {
        const MeasureValue value = evaluate_measure(model_, bundle_, child.ref);
        if (value.missing()) {
            return {0.0, 1.0};
        }
        return point_interval(utility(*value.value, *child.utility));
    }

private:
    const QualityModel& model_;
    const MeasurementBundle& bundle_;
    std::map<std::string, UtilityInterval> memo_;
    std::set<std::string> in_progress_;
};

} // namespace

MeasurementBundle parse_bundle(std::string_view text) {
    json document;
    try {
        document = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("syntax", e.what());
    }
    if (!document.is_object() || !document.contains("system") || !document.contains("values")) {
        throw ParseError("schema", "bundle needs 'system' and 'values' objects");
    }
    for (const auto& [key, _] : document.items()) {
        if (key != "system" && key != "values") {
            throw ParseError("schema", "unknown bundle field '" + key + "'");
        }
    }
    const json& system = document["system"];
    if (!system.is_object() || !system.contains("name") || !system.contains("version") ||
        !system["name"].is_string() || !system["version"].is_string()) {
        throw ParseError("schema", "'system' needs string 'name' and 'version'");
    }

    MeasurementBundle bundle;
    bundle.system_name = system["name"].get<std::string>();
    bundle.system_version = system["version"].get<std::string>();
    const json& values = document["values"];
    if (!values.is_object()) {
        throw ParseError("schema", "'values' must map instrument ids to numbers");
    }
    for (const auto& [instrument_id, value] : values.items()) {
        if (!value.is_number()) {
            throw ParseError("schema", "value of '" + instrument_id + "' must be a number");
        }
        const double v = value.get<double>();
        if (!std::isfinite(v) || v < 0.0) {
            throw ParseError("schema", "value of '" + instrument_id + "' must be finite and >= 0");
        }
        bundle.values[instrument_id] = v;
        bundle.provenance[instrument_id] = InstrumentKind::Tool;
    }
    return bundle;
}

std::string serialize_bundle(const MeasurementBundle& bundle) {
    json values = json::object();
    for (const auto& [id, value] : bundle.values) {
        values[id] = value;
    }
    json document{{"system", {{"name", bundle.system_name}, {"version", bundle.system_version}}},
                  {"values", std::move(values)}};
    return document.dump(2) + "\n";
}

std::vector<std::string> merge_manual_csv(MeasurementBundle& bundle, std::string_view csv_text) {
    const CsvTable table = parse_csv(csv_text);
    if (table.header != std::vector<std::string>{"instrumentId", "value"}) {
        throw ParseError("csv-shape", "manual results header must be 'instrumentId,value'");
    }
    std::vector<std::string> warnings;
    int line = 1;
    for (const auto& row : table.rows) {
        ++line;
        const double value = parse_csv_number(row[1], line);
        if (!std::isfinite(value) || value < 0.0) {
            throw ParseError("csv-number", "manual value for '" + row[0] + "' must be finite and >= 0",
                             line);
        }
        auto existing = bundle.values.find(row[0]);
        if (existing != bundle.values.end()) {
            warnings.push_back("manual value for '" + row[0] + "' overrides bundle value");
        }
        bundle.values[row[0]] = value;
        bundle.provenance[row[0]] = InstrumentKind::Manual;
    }
    return warnings;
}

double utility(double x, const UtilityFunction& function) {
    if (!std::isfinite(x)) {
        throw Error("non-finite", "", "measure value must be finite");
    }
    if (!(function.min < function.max)) {
        throw Error("degenerate-utility", "", "utility thresholds must satisfy min < max");
    }
    double u;
    if (function.direction == Direction::Decreasing) {
        if (x <= function.min) {
            u = 1.0;
        } else if (x >= function.max) {
            u = 0.0;
        } else {
            u = (function.max - x) / (function.max - function.min);
        }
    } else {
        if (x <= function.min) {
            u = 0.0;
        } else if (x >= function.max) {
            u = 1.0;
        } else {
            u = (x - function.min) / (function.max - function.min);
        }
    }
    return std::min(1.0, std::max(0.0, u));
}

MeasureValue evaluate_measure(const QualityModel& model, const MeasurementBundle& bundle,
                              const std::string& measure_id) {
    const Measure& measure = model.measure(measure_id);
    MeasureValue result{measure_id, std::nullopt};

    if (measure.type == MeasureType::DerivedRatio) {
        const MeasureValue numerator = evaluate_measure(model, bundle, measure.numerator);
        const MeasureValue normalizer = evaluate_measure(model, bundle, measure.normalized_by);
        if (numerator.missing() || normalizer.missing() || *normalizer.value == 0.0) {
            return result;
        }
        result.value = *numerator.value / *normalizer.value;
        return result;
    }

    const auto instruments = model.instruments_of(measure_id);
    if (instruments.empty()) {
        return result;
    }
    double sum = 0.0;
    for (const Instrument* instrument : instruments) {
        auto it = bundle.values.find(instrument->id);
        if (it == bundle.values.end()) {
            return result;  // one absent instrument makes the measure missing
        }
        sum += it->second;
    }
    result.value = sum;
    return result;
}

UtilityInterval assess_factor(const QualityModel& model, const MeasurementBundle& bundle,
                              const std::string& factor_id) {
    model.factor(factor_id);  // unknown-id check up front
    return FactorEvaluator(model, bundle).evaluate(factor_id);
}

Grade interpret(const UtilityInterval& interval) {
    Grade grade;
    grade.continuous = 6.0 - 5.0 * interval.midpoint();
    grade.discrete = static_cast<int>(std::floor(grade.continuous));
    grade.discrete = std::min(6, std::max(1, grade.discrete));
    return grade;
}

AssessmentResult assess(const QualityModel& model, const MeasurementBundle& bundle) {
    AssessmentResult result;
    result.system_name = bundle.system_name;
    result.system_version = bundle.system_version;
    for (const auto& module : model.modules()) {
        result.module_ids.push_back(module.id);
    }
    std::sort(result.module_ids.begin(), result.module_ids.end());

    FactorEvaluator evaluator(model, bundle);
    for (const auto& [factor_id, evaluation] : model.evaluations()) {
        const Factor& factor = model.factors().at(factor_id);
        FactorAssessment node;
        node.factor_id = factor_id;
        node.name = factor.name;
        node.kind = factor.kind;
        node.utility = evaluator.evaluate(factor_id);
        node.grade = interpret(node.utility);
        node.grade_best = 6.0 - 5.0 * node.utility.hi;
        node.grade_worst = 6.0 - 5.0 * node.utility.lo;
        node.low_confidence = node.utility.width() > kLowConfidenceWidth;

        for (const auto& child : evaluation.children) {
            node.children.push_back({child.ref, child.kind, child.weight, child.negated});
            if (child.kind == EvaluationChild::Kind::Measure) {
                const MeasureValue value = evaluate_measure(model, bundle, child.ref);
                MeasureContribution contribution;
                contribution.measure_id = child.ref;
                contribution.value = value.value;
                contribution.utility = value.missing()
                                           ? UtilityInterval{0.0, 1.0}
                                           : point_interval(utility(*value.value, *child.utility));
                contribution.weight = child.weight;
                node.measures.push_back(std::move(contribution));
            }
        }
        std::sort(node.children.begin(), node.children.end(),
                  [](const AssessedChild& a, const AssessedChild& b) {
                      if (a.weight != b.weight) {
                          return a.weight > b.weight;
                      }
                      return a.ref < b.ref;
                  });
        std::sort(node.measures.begin(), node.measures.end(),
                  [](const MeasureContribution& a, const MeasureContribution& b) {
                      if (a.weight != b.weight) {
                          return a.weight > b.weight;
                      }
                      return a.measure_id < b.measure_id;
                  });
        result.factors.emplace(factor_id, std::move(node));
    }

    for (const auto& [factor_id, factor] : model.factors()) {
        if (factor.kind == FactorKind::QualityAspect && factor.refines.empty() &&
            result.factors.count(factor_id)) {
            result.roots.push_back(factor_id);
        }
    }
    std::sort(result.roots.begin(), result.roots.end());
    return result;
}

} // namespace qm
