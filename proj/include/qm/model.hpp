#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "qm/error.hpp"

namespace qm {

enum class FactorKind { QualityAspect, ProductFactor };
enum class Polarity { Positive, Negative };
enum class MeasureType { BaseCount, BaseSize, DerivedRatio };
enum class InstrumentKind { Manual, Tool };
enum class Direction { Increasing, Decreasing };

// Product part a factor talks about. Entities carry no numbers; they form
// is-a / part-of hierarchies that are validated for acyclicity only.
struct EntityNode {
    std::string id;
    std::string name;
    std::string description;
    std::vector<std::string> is_a;
    std::vector<std::string> part_of;
    std::string module;

    bool operator==(const EntityNode&) const = default;
};

// A property of an entity. Quality aspects are abstract product-level goals,
// product factors are measurable attributes of product parts. Refinement
// edges point from the refining factor to the more abstract one.
struct Factor {
    std::string id;
    std::string name;
    FactorKind kind = FactorKind::ProductFactor;
    std::string entity;
    std::vector<std::string> refines;
    std::string description;
    std::string module;

    bool operator==(const Factor&) const = default;
};

// Directed influence of a product factor on a quality aspect.
struct Impact {
    std::string source;
    std::string target;
    Polarity polarity = Polarity::Positive;
    std::string justification;
    std::string module;

    bool operator==(const Impact&) const = default;
};

// Quantification rule. Base measures sum their instruments' raw values;
// derived-ratio measures divide a base numerator by a base-size normalizer.
struct Measure {
    std::string id;
    std::string name;
    MeasureType type = MeasureType::BaseCount;
    std::string numerator;      // derived-ratio only
    std::string normalized_by;  // derived-ratio only
    std::vector<std::string> factors;
    std::string module;

    bool operator==(const Measure&) const = default;
};

// Concrete data source feeding a measure: a tool rule or a manual step.
struct Instrument {
    std::string id;
    std::string measure;
    InstrumentKind kind = InstrumentKind::Tool;
    std::string tool_name;  // tool only
    std::string rule_id;    // tool only
    std::string module;

    bool operator==(const Instrument&) const = default;
};

// Linear preference mapping with two thresholds. min == max is illegal.
struct UtilityFunction {
    Direction direction = Direction::Decreasing;
    double min = 0.0;
    double max = 1.0;

    bool operator==(const UtilityFunction&) const = default;
};

struct EvaluationChild {
    enum class Kind { Measure, Factor };

    Kind kind = Kind::Factor;
    std::string ref;
    std::optional<double> weight;            // absent = derive (ranking or equal split)
    std::optional<UtilityFunction> utility;  // present iff kind == Measure

    bool operator==(const EvaluationChild&) const = default;
};

// How a factor's utility is computed from measures and/or sub-factors.
// Utility functions live on the (factor, measure) pair, never on the measure.
struct Evaluation {
    std::string factor;
    std::vector<EvaluationChild> children;
    std::string module;

    bool operator==(const Evaluation&) const = default;
};

// One model packaging unit. Cross-module references must be covered by a
// direct or transitive requires edge.
struct ModuleDef {
    std::string id;
    std::vector<std::string> requires_;
    std::vector<EntityNode> entities;
    std::vector<Factor> factors;
    std::vector<Impact> impacts;
    std::vector<Measure> measures;
    std::vector<Instrument> instruments;
    std::vector<Evaluation> evaluations;

    // Sorts every element list and set-valued reference list so that two
    // modules with the same content compare equal and serialize identically.
    void normalize();

    bool operator==(const ModuleDef&) const = default;
};

struct Diagnostic {
    enum class Severity { Error, Warning };

    Severity severity = Severity::Error;
    std::string code;
    std::string element;
    std::string message;
};

// Evaluation child after weight resolution and polarity lookup.
struct ResolvedChild {
    EvaluationChild::Kind kind = EvaluationChild::Kind::Factor;
    std::string ref;
    double weight = 0.0;
    bool explicit_weight = false;
    bool negated = false;  // product factor reached through a negative impact
    std::optional<UtilityFunction> utility;
};

struct ResolvedEvaluation {
    std::string factor;
    std::string module;
    std::vector<ResolvedChild> children;
    bool mixed_weights = false;  // some children explicit, some not
};

// Fully resolved, index-backed model. Immutable after resolve(); safe to
// share across concurrent assessments.
class QualityModel {
public:
    const std::vector<ModuleDef>& modules() const { return modules_; }
    const std::map<std::string, EntityNode>& entities() const { return entities_; }
    const std::map<std::string, Factor>& factors() const { return factors_; }
    const std::map<std::string, Measure>& measures() const { return measures_; }
    const std::map<std::string, Instrument>& instruments() const { return instruments_; }
    const std::map<std::string, ResolvedEvaluation>& evaluations() const { return evaluations_; }
    const std::vector<Impact>& impacts() const { return impacts_; }

    const Factor& factor(const std::string& id) const;
    const Measure& measure(const std::string& id) const;
    const ResolvedEvaluation* evaluation(const std::string& factor_id) const;

    // Instruments feeding a measure, ordered by instrument id.
    std::vector<const Instrument*> instruments_of(const std::string& measure_id) const;
    // Factors whose `refines` list names `id`, ordered by id.
    std::vector<const Factor*> refiners_of(const std::string& id) const;
    // Impacts targeting a quality aspect, ordered by source id.
    std::vector<const Impact*> impacts_on(const std::string& aspect_id) const;
    const Impact* impact_between(const std::string& source, const std::string& target) const;

private:
    friend class ModelBuilder;

    std::vector<ModuleDef> modules_;
    std::map<std::string, EntityNode> entities_;
    std::map<std::string, Factor> factors_;
    std::map<std::string, Measure> measures_;
    std::map<std::string, Instrument> instruments_;
    std::map<std::string, ResolvedEvaluation> evaluations_;
    std::vector<Impact> impacts_;
    std::multimap<std::string, std::string> instruments_by_measure_;
    std::multimap<std::string, std::string> refiners_;
};

// Builds a resolved model from module definitions. Throws Error with codes
// no-root-module, multiple-root-modules, missing-module, requires-cycle,
// duplicate-id, duplicate-evaluation, foreign-evaluation, bad-identifier,
// dangling-reference, missing-requires. Deterministic in the module order.
QualityModel resolve(std::vector<ModuleDef> modules);

// Structural rule check. Error codes: impact-direction, refinement-cycle,
// kind-mismatch, entity-cycle, degenerate-utility, jump-direction,
// weight-range, weight-sum, weight-missing, measure-on-aspect,
// invalid-eval-child, normalization-type. Warning codes: unreferenced,
// empty-evaluation. Ordered by element id, then code.
std::vector<Diagnostic> validate(const QualityModel& model);

struct TraceEntry {
    std::string factor;
    std::string measure;
    std::string instrument;

    auto operator<=>(const TraceEntry&) const = default;
};

// Everything that operationalises a quality aspect: the product factors
// reached over refinement and impact edges, their measures (derived measures
// expanded to their base constituents) and the instruments feeding them.
// Sorted by (factor, measure, instrument).
std::vector<TraceEntry> trace(const QualityModel& model, const std::string& aspect_id);

std::string to_string(FactorKind kind);
std::string to_string(Polarity polarity);
std::string to_string(MeasureType type);
std::string to_string(InstrumentKind kind);
std::string to_string(Direction direction);

} // namespace qm
