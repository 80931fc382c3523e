#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qm/model.hpp"
#include "qm/model_io.hpp"

// Shorthand constructors for building models inline in tests.
namespace testutil {

inline std::filesystem::path demo_dir() { return QM_DEMO_DIR; }
inline std::filesystem::path data_dir() { return QM_TEST_DATA_DIR; }

inline std::vector<std::filesystem::path> demo_files() {
    return {demo_dir() / "root.qm.json", demo_dir() / "object-oriented.qm.json",
            demo_dir() / "java.qm.json"};
}

inline qm::QualityModel load_demo_model() {
    return qm::resolve(qm::load_model_files(demo_files()));
}

inline qm::EntityNode entity(std::string id, std::vector<std::string> part_of = {},
                             std::vector<std::string> is_a = {}) {
    qm::EntityNode e;
    e.id = std::move(id);
    e.name = e.id;
    e.part_of = std::move(part_of);
    e.is_a = std::move(is_a);
    return e;
}

inline qm::Factor aspect(std::string id, std::string entity_id,
                         std::vector<std::string> refines = {}) {
    qm::Factor f;
    f.id = std::move(id);
    f.name = f.id;
    f.kind = qm::FactorKind::QualityAspect;
    f.entity = std::move(entity_id);
    f.refines = std::move(refines);
    return f;
}

inline qm::Factor product_factor(std::string id, std::string entity_id,
                                 std::vector<std::string> refines = {}) {
    qm::Factor f = aspect(std::move(id), std::move(entity_id), std::move(refines));
    f.kind = qm::FactorKind::ProductFactor;
    return f;
}

inline qm::Impact impact(std::string source, std::string target,
                         qm::Polarity polarity = qm::Polarity::Positive) {
    qm::Impact i;
    i.source = std::move(source);
    i.target = std::move(target);
    i.polarity = polarity;
    i.justification = "test impact";
    return i;
}

inline qm::Measure base_count(std::string id, std::vector<std::string> factors = {}) {
    qm::Measure m;
    m.id = std::move(id);
    m.name = m.id;
    m.type = qm::MeasureType::BaseCount;
    m.factors = std::move(factors);
    return m;
}

inline qm::Measure base_size(std::string id) {
    qm::Measure m = base_count(std::move(id));
    m.type = qm::MeasureType::BaseSize;
    return m;
}

inline qm::Measure derived(std::string id, std::string numerator, std::string normalized_by,
                           std::vector<std::string> factors = {}) {
    qm::Measure m = base_count(std::move(id), std::move(factors));
    m.type = qm::MeasureType::DerivedRatio;
    m.numerator = std::move(numerator);
    m.normalized_by = std::move(normalized_by);
    return m;
}

inline qm::Instrument tool(std::string id, std::string measure, std::string tool_name = "Tool",
                           std::string rule_id = "rule") {
    qm::Instrument i;
    i.id = std::move(id);
    i.measure = std::move(measure);
    i.kind = qm::InstrumentKind::Tool;
    i.tool_name = std::move(tool_name);
    i.rule_id = std::move(rule_id);
    return i;
}

inline qm::Instrument manual(std::string id, std::string measure) {
    qm::Instrument i;
    i.id = std::move(id);
    i.measure = std::move(measure);
    i.kind = qm::InstrumentKind::Manual;
    return i;
}

inline qm::EvaluationChild measure_child(std::string ref, double weight,
                                         qm::Direction direction, double min, double max) {
    qm::EvaluationChild c;
    c.kind = qm::EvaluationChild::Kind::Measure;
    c.ref = std::move(ref);
    c.weight = weight;
    c.utility = qm::UtilityFunction{direction, min, max};
    return c;
}

inline qm::EvaluationChild factor_child(std::string ref, double weight) {
    qm::EvaluationChild c;
    c.kind = qm::EvaluationChild::Kind::Factor;
    c.ref = std::move(ref);
    c.weight = weight;
    return c;
}

inline qm::Evaluation evaluation(std::string factor, std::vector<qm::EvaluationChild> children) {
    qm::Evaluation e;
    e.factor = std::move(factor);
    e.children = std::move(children);
    return e;
}

inline qm::ModuleDef module(std::string id, std::vector<std::string> deps = {}) {
    qm::ModuleDef m;
    m.id = std::move(id);
    m.requires_ = std::move(deps);
    return m;
}

// Returns the diagnostic codes at the given severity, in emission order.
inline std::vector<std::string> codes(const std::vector<qm::Diagnostic>& diagnostics,
                                      qm::Diagnostic::Severity severity) {
    std::vector<std::string> out;
    for (const auto& d : diagnostics) {
        if (d.severity == severity) {
            out.push_back(d.code);
        }
    }
    return out;
}

inline bool has_code(const std::vector<qm::Diagnostic>& diagnostics, const std::string& code) {
    for (const auto& d : diagnostics) {
        if (d.code == code) {
            return true;
        }
    }
    return false;
}

} // namespace testutil
