#include "qm/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <sstream>

namespace qm {

namespace {

constexpr double kWeightSumTolerance = 1e-6;
constexpr double kJumpMax = 1e-8;

std::string module_of_id(const std::string& id) {
    auto dot = id.find('.');
    return dot == std::string::npos ? std::string() : id.substr(0, dot);
}

template <typename T>
void sort_by_id(std::vector<T>& elements) {
    std::sort(elements.begin(), elements.end(),
              [](const T& a, const T& b) { return a.id < b.id; });
}

void sort_unique(std::vector<std::string>& refs) {
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
}

} // namespace

std::string to_string(FactorKind kind) {
    return kind == FactorKind::QualityAspect ? "QualityAspect" : "ProductFactor";
}

std::string to_string(Polarity polarity) {
    return polarity == Polarity::Positive ? "positive" : "negative";
}

std::string to_string(MeasureType type) {
    switch (type) {
    case MeasureType::BaseCount: return "base-count";
    case MeasureType::BaseSize: return "base-size";
    default: return "derived-ratio";
    }
}

std::string to_string(InstrumentKind kind) {
    return kind == InstrumentKind::Manual ? "manual" : "tool";
}

std::string to_string(Direction direction) {
    return direction == Direction::Increasing ? "increasing" : "decreasing";
}

void ModuleDef::normalize() {
    sort_unique(requires_);
    sort_by_id(entities);
    sort_by_id(factors);
    sort_by_id(measures);
    sort_by_id(instruments);
    for (auto& entity : entities) {
        sort_unique(entity.is_a);
        sort_unique(entity.part_of);
    }
    for (auto& factor : factors) {
        sort_unique(factor.refines);
    }
    for (auto& measure : measures) {
        sort_unique(measure.factors);
    }
    std::sort(impacts.begin(), impacts.end(), [](const Impact& a, const Impact& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    std::sort(evaluations.begin(), evaluations.end(),
              [](const Evaluation& a, const Evaluation& b) { return a.factor < b.factor; });
}

const Factor& QualityModel::factor(const std::string& id) const {
    auto it = factors_.find(id);
    if (it == factors_.end()) {
        throw Error("unknown-id", id, "no such factor");
    }
    return it->second;
}

const Measure& QualityModel::measure(const std::string& id) const {
    auto it = measures_.find(id);
    if (it == measures_.end()) {
        throw Error("unknown-id", id, "no such measure");
    }
    return it->second;
}

const ResolvedEvaluation* QualityModel::evaluation(const std::string& factor_id) const {
    auto it = evaluations_.find(factor_id);
    return it == evaluations_.end() ? nullptr : &it->second;
}

std::vector<const Instrument*> QualityModel::instruments_of(const std::string& measure_id) const {
    std::vector<const Instrument*> result;
    auto [begin, end] = instruments_by_measure_.equal_range(measure_id);
    for (auto it = begin; it != end; ++it) {
        result.push_back(&instruments_.at(it->second));
    }
    return result;
}

std::vector<const Factor*> QualityModel::refiners_of(const std::string& id) const {
    std::vector<const Factor*> result;
    auto [begin, end] = refiners_.equal_range(id);
    for (auto it = begin; it != end; ++it) {
        result.push_back(&factors_.at(it->second));
    }
    return result;
}

std::vector<const Impact*> QualityModel::impacts_on(const std::string& aspect_id) const {
    std::vector<const Impact*> result;
    for (const auto& impact : impacts_) {
        if (impact.target == aspect_id) {
            result.push_back(&impact);
        }
    }
    return result;
}

const Impact* QualityModel::impact_between(const std::string& source,
                                           const std::string& target) const {
    for (const auto& impact : impacts_) {
        if (impact.source == source && impact.target == target) {
            return &impact;
        }
    }
    return nullptr;
}

// Reference checking needs the element's owning module and the target id.
namespace {
struct Reference {
    std::string from_module;
    std::string from_element;
    std::string target;
    enum class Target { Entity, Factor, Measure, AnyElement } expected;
};
} // namespace

class ModelBuilder {
public:
    explicit ModelBuilder(std::vector<ModuleDef> modules) { model_.modules_ = std::move(modules); }

    QualityModel run() {
        for (auto& module : model_.modules_) {
            module.normalize();
        }
        order_modules();
        index_elements();
        check_references();
        resolve_evaluations();
        return std::move(model_);
    }

private:
    void order_modules() {
        std::map<std::string, const ModuleDef*> by_id;
        for (const auto& module : model_.modules_) {
            if (module.id.empty() || module.id.find('.') != std::string::npos) {
                throw Error("bad-identifier", module.id, "module ids must be nonempty and dot-free");
            }
            if (!by_id.emplace(module.id, &module).second) {
                throw Error("duplicate-id", module.id, "module declared more than once");
            }
        }

        int roots = 0;
        for (const auto& [id, module] : by_id) {
            if (module->requires_.empty()) {
                ++roots;
            }
            for (const auto& dep : module->requires_) {
                if (!by_id.count(dep)) {
                    throw Error("missing-module", id, "requires unknown module '" + dep + "'");
                }
            }
        }
        if (roots == 0) {
            throw Error("no-root-module", "", "no module with empty requires");
        }
        if (roots > 1) {
            throw Error("multiple-root-modules", "", "more than one module with empty requires");
        }

        // Kahn's algorithm, smallest id first, so resolution order is a
        // deterministic function of the module set alone.
        std::map<std::string, int> pending;
        for (const auto& [id, module] : by_id) {
            pending[id] = static_cast<int>(module->requires_.size());
        }
        std::vector<std::string> order;
        while (order.size() < by_id.size()) {
            auto next = std::find_if(pending.begin(), pending.end(),
                                     [](const auto& entry) { return entry.second == 0; });
            if (next == pending.end()) {
                throw Error("requires-cycle", "", "module requires edges form a cycle");
            }
            order.push_back(next->first);
            next->second = -1;
            for (auto& [id, count] : pending) {
                const auto& reqs = by_id.at(id)->requires_;
                if (count > 0 && std::find(reqs.begin(), reqs.end(), next->first) != reqs.end()) {
                    --count;
                }
            }
        }

        // Transitive requires closure, used for the missing-requires check.
        for (const auto& id : order) {
            std::set<std::string> reach;
            for (const auto& dep : by_id.at(id)->requires_) {
                reach.insert(dep);
                reach.insert(reachable_[dep].begin(), reachable_[dep].end());
            }
            reachable_[id] = std::move(reach);
        }

        std::vector<ModuleDef> ordered;
        ordered.reserve(order.size());
        for (const auto& id : order) {
            auto it = std::find_if(model_.modules_.begin(), model_.modules_.end(),
                                   [&](const ModuleDef& m) { return m.id == id; });
            ordered.push_back(std::move(*it));
            model_.modules_.erase(it);
        }
        model_.modules_ = std::move(ordered);
    }

    template <typename T>
    void index_element(std::map<std::string, T>& index, T element, const std::string& module_id) {
        if (module_of_id(element.id) != module_id) {
            throw Error("bad-identifier", element.id,
                        "element ids must be qualified as '" + module_id + ".<local>'");
        }
        element.module = module_id;
        const std::string id = element.id;
        if (all_ids_.count(id)) {
            throw Error("duplicate-id", id, "identifier declared more than once");
        }
        all_ids_.insert(id);
        index.emplace(id, std::move(element));
    }

    void index_elements() {
        for (const auto& module : model_.modules_) {
            for (const auto& entity : module.entities) {
                index_element(model_.entities_, entity, module.id);
            }
            for (const auto& factor : module.factors) {
                index_element(model_.factors_, factor, module.id);
            }
            for (const auto& measure : module.measures) {
                index_element(model_.measures_, measure, module.id);
            }
            for (const auto& instrument : module.instruments) {
                index_element(model_.instruments_, instrument, module.id);
            }
            for (auto impact : module.impacts) {
                impact.module = module.id;
                model_.impacts_.push_back(std::move(impact));
            }
        }
        for (const auto& [id, instrument] : model_.instruments_) {
            model_.instruments_by_measure_.emplace(instrument.measure, id);
        }
        for (const auto& [id, factor] : model_.factors_) {
            for (const auto& target : factor.refines) {
                model_.refiners_.emplace(target, id);
            }
        }
    }

    void require_edge(const Reference& ref) {
        bool exists = false;
        switch (ref.expected) {
        case Reference::Target::Entity: exists = model_.entities_.count(ref.target); break;
        case Reference::Target::Factor: exists = model_.factors_.count(ref.target); break;
        case Reference::Target::Measure: exists = model_.measures_.count(ref.target); break;
        case Reference::Target::AnyElement: exists = all_ids_.count(ref.target); break;
        }
        if (!exists) {
            throw Error("dangling-reference", ref.from_element,
                        "reference to unknown element '" + ref.target + "'");
        }
        const std::string target_module = module_of_id(ref.target);
        if (target_module != ref.from_module && !reachable_[ref.from_module].count(target_module)) {
            throw Error("missing-requires", ref.from_element,
                        "references '" + ref.target + "' in module '" + target_module +
                            "' without a requires edge from '" + ref.from_module + "'");
        }
    }

    void check_references() {
        for (const auto& [id, entity] : model_.entities_) {
            for (const auto& target : entity.is_a) {
                require_edge({entity.module, id, target, Reference::Target::Entity});
            }
            for (const auto& target : entity.part_of) {
                require_edge({entity.module, id, target, Reference::Target::Entity});
            }
        }
        for (const auto& [id, factor] : model_.factors_) {
            require_edge({factor.module, id, factor.entity, Reference::Target::Entity});
            for (const auto& target : factor.refines) {
                require_edge({factor.module, id, target, Reference::Target::Factor});
            }
        }
        for (const auto& impact : model_.impacts_) {
            const std::string label = impact.source + " -> " + impact.target;
            require_edge({impact.module, label, impact.source, Reference::Target::Factor});
            require_edge({impact.module, label, impact.target, Reference::Target::Factor});
        }
        for (const auto& [id, measure] : model_.measures_) {
            if (!measure.numerator.empty()) {
                require_edge({measure.module, id, measure.numerator, Reference::Target::Measure});
            }
            if (!measure.normalized_by.empty()) {
                require_edge({measure.module, id, measure.normalized_by, Reference::Target::Measure});
            }
            for (const auto& target : measure.factors) {
                require_edge({measure.module, id, target, Reference::Target::Factor});
            }
        }
        for (const auto& [id, instrument] : model_.instruments_) {
            require_edge({instrument.module, id, instrument.measure, Reference::Target::Measure});
        }
    }

    void resolve_evaluations() {
        for (const auto& module : model_.modules_) {
            for (const auto& evaluation : module.evaluations) {
                require_edge({module.id, "evaluation of " + evaluation.factor, evaluation.factor,
                              Reference::Target::Factor});
                const Factor& owner = model_.factors_.at(evaluation.factor);
                if (owner.module != module.id) {
                    throw Error("foreign-evaluation", evaluation.factor,
                                "evaluation declared in module '" + module.id +
                                    "' but the factor lives in '" + owner.module + "'");
                }
                if (model_.evaluations_.count(evaluation.factor)) {
                    throw Error("duplicate-evaluation", evaluation.factor,
                                "factor has more than one evaluation");
                }

                ResolvedEvaluation resolved;
                resolved.factor = evaluation.factor;
                resolved.module = module.id;
                bool any_explicit = false;
                bool any_implicit = false;
                for (const auto& child : evaluation.children) {
                    const auto expected = child.kind == EvaluationChild::Kind::Measure
                                              ? Reference::Target::Measure
                                              : Reference::Target::Factor;
                    require_edge({module.id, "evaluation of " + evaluation.factor, child.ref, expected});

                    ResolvedChild rc;
                    rc.kind = child.kind;
                    rc.ref = child.ref;
                    rc.utility = child.utility;
                    rc.explicit_weight = child.weight.has_value();
                    rc.weight = child.weight.value_or(0.0);
                    (child.weight ? any_explicit : any_implicit) = true;

                    if (child.kind == EvaluationChild::Kind::Factor &&
                        owner.kind == FactorKind::QualityAspect) {
                        auto target = model_.factors_.find(child.ref);
                        if (target != model_.factors_.end() &&
                            target->second.kind == FactorKind::ProductFactor) {
                            const Impact* impact = model_.impact_between(child.ref, evaluation.factor);
                            rc.negated = impact && impact->polarity == Polarity::Negative;
                        }
                    }
                    resolved.children.push_back(std::move(rc));
                }
                resolved.mixed_weights = any_explicit && any_implicit;
                if (!any_explicit && !resolved.children.empty()) {
                    const double equal = 1.0 / static_cast<double>(resolved.children.size());
                    for (auto& child : resolved.children) {
                        child.weight = equal;
                    }
                }
                model_.evaluations_.emplace(evaluation.factor, std::move(resolved));
            }
        }
    }

    QualityModel model_;
    std::set<std::string> all_ids_;
    std::map<std::string, std::set<std::string>> reachable_;
};

QualityModel resolve(std::vector<ModuleDef> modules) {
    if (modules.empty()) {
        throw Error("no-root-module", "", "at least one module is required");
    }
    return ModelBuilder(std::move(modules)).run();
}

namespace {

// Generic cycle reporter over an id -> successors map. Emits one diagnostic
// per strongly connected offender found by iterative DFS.
void check_acyclic(const std::map<std::string, std::vector<std::string>>& edges,
                   const std::string& code, const std::string& what,
                   std::vector<Diagnostic>& out) {
    std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
    std::function<bool(const std::string&)> visit = [&](const std::string& node) {
        int& s = state[node];
        if (s == 1) {
            return true;
        }
        if (s == 2) {
            return false;
        }
        s = 1;
        auto it = edges.find(node);
        if (it != edges.end()) {
            for (const auto& next : it->second) {
                if (visit(next)) {
                    out.push_back({Diagnostic::Severity::Error, code, node,
                                   what + " edges form a cycle through '" + node + "'"});
                    s = 2;
                    return false;  // report each cycle once
                }
            }
        }
        s = 2;
        return false;
    };
    for (const auto& [node, _] : edges) {
        visit(node);
    }
}

struct ReferencedSets {
    std::set<std::string> entities;
    std::set<std::string> factors;
    std::set<std::string> measures;
};

// "Referenced" deliberately ignores the structural factor->entity and
// instrument->measure edges: a measure fed by an instrument but associated
// with nothing still helps nobody and should be flagged.
ReferencedSets collect_references(const QualityModel& model) {
    ReferencedSets used;
    for (const auto& [id, entity] : model.entities()) {
        for (const auto& target : entity.is_a) {
            used.entities.insert(target);
            used.entities.insert(id);
        }
        for (const auto& target : entity.part_of) {
            used.entities.insert(target);
            used.entities.insert(id);
        }
    }
    for (const auto& [id, factor] : model.factors()) {
        used.entities.insert(factor.entity);
        for (const auto& target : factor.refines) {
            used.factors.insert(target);
            used.factors.insert(id);
        }
    }
    for (const auto& impact : model.impacts()) {
        used.factors.insert(impact.source);
        used.factors.insert(impact.target);
    }
    for (const auto& [id, measure] : model.measures()) {
        if (!measure.numerator.empty()) {
            used.measures.insert(measure.numerator);
        }
        if (!measure.normalized_by.empty()) {
            used.measures.insert(measure.normalized_by);
        }
        for (const auto& target : measure.factors) {
            used.factors.insert(target);
            used.measures.insert(id);
        }
    }
    for (const auto& [factor_id, evaluation] : model.evaluations()) {
        used.factors.insert(factor_id);
        for (const auto& child : evaluation.children) {
            (child.kind == EvaluationChild::Kind::Measure ? used.measures : used.factors)
                .insert(child.ref);
        }
    }
    return used;
}

} // namespace

std::vector<Diagnostic> validate(const QualityModel& model) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string code, std::string element, std::string message) {
        out.push_back({Diagnostic::Severity::Error, std::move(code), std::move(element),
                       std::move(message)});
    };
    auto warning = [&](std::string code, std::string element, std::string message) {
        out.push_back({Diagnostic::Severity::Warning, std::move(code), std::move(element),
                       std::move(message)});
    };

    for (const auto& impact : model.impacts()) {
        const Factor& source = model.factors().at(impact.source);
        const Factor& target = model.factors().at(impact.target);
        if (source.kind != FactorKind::ProductFactor || target.kind != FactorKind::QualityAspect) {
            error("impact-direction", impact.source + " -> " + impact.target,
                  "impacts must go from a product factor to a quality aspect");
        }
    }

    std::map<std::string, std::vector<std::string>> refinement[2];
    for (const auto& [id, factor] : model.factors()) {
        for (const auto& target : factor.refines) {
            const Factor& parent = model.factors().at(target);
            if (parent.kind != factor.kind) {
                error("kind-mismatch", id,
                      "refines '" + target + "' of kind " + to_string(parent.kind) +
                          " but is a " + to_string(factor.kind));
            } else {
                refinement[factor.kind == FactorKind::QualityAspect ? 0 : 1][id].push_back(target);
            }
        }
    }
    check_acyclic(refinement[0], "refinement-cycle", "quality aspect refinement", out);
    check_acyclic(refinement[1], "refinement-cycle", "product factor refinement", out);

    std::map<std::string, std::vector<std::string>> is_a, part_of;
    for (const auto& [id, entity] : model.entities()) {
        is_a[id] = entity.is_a;
        part_of[id] = entity.part_of;
    }
    check_acyclic(is_a, "entity-cycle", "entity is-a", out);
    check_acyclic(part_of, "entity-cycle", "entity part-of", out);

    for (const auto& [id, measure] : model.measures()) {
        if (measure.type != MeasureType::DerivedRatio) {
            continue;
        }
        const Measure& numerator = model.measures().at(measure.numerator);
        const Measure& normalizer = model.measures().at(measure.normalized_by);
        if (numerator.type == MeasureType::DerivedRatio) {
            error("normalization-type", id, "numerator '" + measure.numerator +
                                                "' must be a base measure");
        }
        if (normalizer.type != MeasureType::BaseSize) {
            error("normalization-type", id, "normalizedBy '" + measure.normalized_by +
                                                "' must be a base-size measure");
        }
    }

    for (const auto& [factor_id, evaluation] : model.evaluations()) {
        const Factor& owner = model.factors().at(factor_id);
        if (evaluation.children.empty()) {
            warning("empty-evaluation", factor_id, "evaluation has no children");
            continue;
        }
        if (evaluation.mixed_weights) {
            error("weight-missing", factor_id,
                  "some children carry explicit weights and some do not");
        }
        double sum = 0.0;
        bool range_ok = true;
        for (const auto& child : evaluation.children) {
            sum += child.weight;
            if (child.weight <= 0.0 || child.weight > 1.0) {
                range_ok = false;
                error("weight-range", factor_id,
                      "weight of '" + child.ref + "' must lie in (0, 1]");
            }
        }
        if (!evaluation.mixed_weights && range_ok && std::abs(sum - 1.0) > kWeightSumTolerance) {
            std::ostringstream message;
            message << "child weights sum to " << sum << ", expected 1";
            error("weight-sum", factor_id, message.str());
        }

        for (const auto& child : evaluation.children) {
            if (child.kind == EvaluationChild::Kind::Measure) {
                if (owner.kind == FactorKind::QualityAspect) {
                    error("measure-on-aspect", factor_id,
                          "quality aspect evaluations may not reference measures");
                }
                if (child.utility) {
                    if (!(child.utility->min < child.utility->max)) {
                        error("degenerate-utility", factor_id,
                              "utility thresholds for '" + child.ref + "' must satisfy min < max");
                    } else if (child.utility->direction == Direction::Increasing &&
                               child.utility->min == 0.0 && child.utility->max == kJumpMax) {
                        error("jump-direction", factor_id,
                              "jump thresholds (0, 1e-8) are only legal with a decreasing utility");
                    }
                }
                continue;
            }
            const Factor& target = model.factors().at(child.ref);
            if (owner.kind == FactorKind::QualityAspect) {
                const bool refining_aspect = target.kind == FactorKind::QualityAspect &&
                                             std::find(target.refines.begin(), target.refines.end(),
                                                       factor_id) != target.refines.end();
                const bool impacting_pf = target.kind == FactorKind::ProductFactor &&
                                          model.impact_between(child.ref, factor_id) != nullptr;
                if (!refining_aspect && !impacting_pf) {
                    error("invalid-eval-child", factor_id,
                          "'" + child.ref +
                              "' is neither a refining sub-aspect nor an impacting product factor");
                }
            } else {
                const bool refining_pf = target.kind == FactorKind::ProductFactor &&
                                         std::find(target.refines.begin(), target.refines.end(),
                                                   factor_id) != target.refines.end();
                if (!refining_pf) {
                    error("invalid-eval-child", factor_id,
                          "'" + child.ref + "' is not a product factor refining '" + factor_id + "'");
                }
            }
        }
    }

    const ReferencedSets used = collect_references(model);
    for (const auto& [id, entity] : model.entities()) {
        if (!used.entities.count(id)) {
            warning("unreferenced", id, "entity is not referenced by any factor or entity");
        }
    }
    for (const auto& [id, factor] : model.factors()) {
        if (!used.factors.count(id) && !model.evaluation(id)) {
            warning("unreferenced", id, "factor has no refinement, impact, measure or evaluation");
        }
    }
    for (const auto& [id, measure] : model.measures()) {
        if (!used.measures.count(id)) {
            warning("unreferenced", id, "measure is never associated, evaluated or normalized against");
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return std::tie(a.element, a.code) < std::tie(b.element, b.code);
    });
    return out;
}

std::vector<TraceEntry> trace(const QualityModel& model, const std::string& aspect_id) {
    const Factor& aspect = model.factor(aspect_id);
    if (aspect.kind != FactorKind::QualityAspect) {
        throw Error("not-an-aspect", aspect_id, "trace starts at a quality aspect");
    }

    // Downward closure over aspect refinement, then impacts, then product
    // factor refinement.
    std::set<std::string> aspects;
    std::deque<std::string> queue{aspect_id};
    while (!queue.empty()) {
        const std::string current = queue.front();
        queue.pop_front();
        if (!aspects.insert(current).second) {
            continue;
        }
        for (const Factor* refiner : model.refiners_of(current)) {
            if (refiner->kind == FactorKind::QualityAspect) {
                queue.push_back(refiner->id);
            }
        }
    }

    std::set<std::string> product_factors;
    for (const auto& id : aspects) {
        for (const Impact* impact : model.impacts_on(id)) {
            queue.push_back(impact->source);
        }
    }
    while (!queue.empty()) {
        const std::string current = queue.front();
        queue.pop_front();
        if (!product_factors.insert(current).second) {
            continue;
        }
        for (const Factor* refiner : model.refiners_of(current)) {
            if (refiner->kind == FactorKind::ProductFactor) {
                queue.push_back(refiner->id);
            }
        }
    }

    std::set<TraceEntry> entries;
    for (const auto& factor_id : product_factors) {
        std::set<std::string> measures;
        for (const auto& [measure_id, measure] : model.measures()) {
            if (std::find(measure.factors.begin(), measure.factors.end(), factor_id) !=
                measure.factors.end()) {
                measures.insert(measure_id);
            }
        }
        // Derived measures pull in their base constituents.
        std::deque<std::string> expand(measures.begin(), measures.end());
        while (!expand.empty()) {
            const Measure& measure = model.measure(expand.front());
            expand.pop_front();
            for (const auto& base : {measure.numerator, measure.normalized_by}) {
                if (!base.empty() && measures.insert(base).second) {
                    expand.push_back(base);
                }
            }
        }
        for (const auto& measure_id : measures) {
            for (const Instrument* instrument : model.instruments_of(measure_id)) {
                entries.insert({factor_id, measure_id, instrument->id});
            }
        }
    }
    return {entries.begin(), entries.end()};
}

} // namespace qm
