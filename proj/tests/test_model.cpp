#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "helpers.hpp"
#include "qm/model.hpp"
#include "qm/model_io.hpp"

using namespace qm;
using namespace testutil;

namespace {

std::string code_of(const std::function<void()>& action) {
    try {
        action();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Brute-force reimplementation of the trace walk over the raw module
// definitions, independent of the QualityModel indexes.
std::set<TraceEntry> trace_oracle(const std::vector<ModuleDef>& modules,
                                  const std::string& aspect_id) {
    auto all_factors = [&](auto&& visit) {
        for (const auto& m : modules) {
            for (const auto& f : m.factors) {
                visit(f);
            }
        }
    };

    std::set<std::string> aspects{aspect_id};
    bool changed = true;
    while (changed) {
        changed = false;
        all_factors([&](const Factor& f) {
            if (f.kind != FactorKind::QualityAspect || aspects.count(f.id)) {
                return;
            }
            for (const auto& parent : f.refines) {
                if (aspects.count(parent)) {
                    aspects.insert(f.id);
                    changed = true;
                }
            }
        });
    }

    std::set<std::string> pfs;
    for (const auto& m : modules) {
        for (const auto& i : m.impacts) {
            if (aspects.count(i.target)) {
                pfs.insert(i.source);
            }
        }
    }
    changed = true;
    while (changed) {
        changed = false;
        all_factors([&](const Factor& f) {
            if (f.kind != FactorKind::ProductFactor || pfs.count(f.id)) {
                return;
            }
            for (const auto& parent : f.refines) {
                if (pfs.count(parent)) {
                    pfs.insert(f.id);
                    changed = true;
                }
            }
        });
    }

    std::set<TraceEntry> expected;
    for (const auto& pf : pfs) {
        std::set<std::string> measures;
        for (const auto& m : modules) {
            for (const auto& measure : m.measures) {
                if (std::find(measure.factors.begin(), measure.factors.end(), pf) !=
                    measure.factors.end()) {
                    measures.insert(measure.id);
                }
            }
        }
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& m : modules) {
                for (const auto& measure : m.measures) {
                    if (!measures.count(measure.id)) {
                        continue;
                    }
                    for (const auto& base : {measure.numerator, measure.normalized_by}) {
                        if (!base.empty() && measures.insert(base).second) {
                            grew = true;
                        }
                    }
                }
            }
        }
        for (const auto& m : modules) {
            for (const auto& instrument : m.instruments) {
                if (measures.count(instrument.measure)) {
                    expected.insert({pf, instrument.measure, instrument.id});
                }
            }
        }
    }
    return expected;
}

} // namespace

TEST_CASE("resolve keeps a single root module as-is") {
    ModuleDef m = module("solo");
    m.entities.push_back(entity("solo.product"));
    const QualityModel model = resolve({m});
    REQUIRE(model.modules().size() == 1);
    CHECK(model.modules()[0].id == "solo");
    CHECK(model.entities().count("solo.product") == 1);
}

TEST_CASE("resolve follows requires chains across modules") {
    ModuleDef root = module("root");
    root.entities.push_back(entity("root.product"));
    root.factors.push_back(product_factor("root.base", "root.product"));

    ModuleDef oo = module("object-oriented", {"root"});
    oo.factors.push_back(product_factor("object-oriented.mid", "root.product", {"root.base"}));

    ModuleDef java = module("java", {"object-oriented"});
    java.factors.push_back(
        product_factor("java.leaf", "root.product", {"object-oriented.mid"}));

    const QualityModel model = resolve({java, root, oo});
    REQUIRE(model.modules().size() == 3);
    // Topological order: root before object-oriented before java.
    CHECK(model.modules()[0].id == "root");
    CHECK(model.modules()[1].id == "object-oriented");
    CHECK(model.modules()[2].id == "java");
    CHECK(model.factors().at("java.leaf").refines ==
          std::vector<std::string>{"object-oriented.mid"});
}

TEST_CASE("resolve rejects cross-module references without a requires edge") {
    ModuleDef root = module("root");
    root.entities.push_back(entity("root.product"));
    root.factors.push_back(product_factor("root.base", "root.product"));
    ModuleDef oo = module("object-oriented", {"root"});
    oo.factors.push_back(product_factor("object-oriented.mid", "root.product", {"root.base"}));
    ModuleDef csharp = module("csharp", {"root"});
    csharp.factors.push_back(
        product_factor("csharp.leaf", "root.product", {"object-oriented.mid"}));

    CHECK(code_of([&] { resolve({root, oo, csharp}); }) == "missing-requires");
}

TEST_CASE("resolve error codes") {
    ModuleDef root = module("root");
    root.entities.push_back(entity("root.product"));

    SUBCASE("empty input") { CHECK(code_of([] { resolve({}); }) == "no-root-module"); }
    SUBCASE("no root") {
        ModuleDef a = module("a", {"b"});
        ModuleDef b = module("b", {"a"});
        CHECK(code_of([&] { resolve({a, b}); }) == "no-root-module");
    }
    SUBCASE("two roots") {
        ModuleDef other = module("other");
        CHECK(code_of([&] { resolve({root, other}); }) == "multiple-root-modules");
    }
    SUBCASE("requires cycle") {
        ModuleDef a = module("a", {"root", "b"});
        ModuleDef b = module("b", {"root", "a"});
        CHECK(code_of([&] { resolve({root, a, b}); }) == "requires-cycle");
    }
    SUBCASE("unknown module") {
        ModuleDef a = module("a", {"ghost"});
        CHECK(code_of([&] { resolve({root, a}); }) == "missing-module");
    }
    SUBCASE("duplicate identifier") {
        ModuleDef m = root;
        m.entities.push_back(entity("root.product"));
        CHECK(code_of([&] { resolve({m}); }) == "duplicate-id");
    }
    SUBCASE("dangling reference") {
        ModuleDef m = root;
        m.factors.push_back(product_factor("root.f", "root.ghost"));
        CHECK(code_of([&] { resolve({m}); }) == "dangling-reference");
    }
    SUBCASE("unqualified identifier") {
        ModuleDef m = root;
        m.factors.push_back(product_factor("elsewhere.f", "root.product"));
        CHECK(code_of([&] { resolve({m}); }) == "bad-identifier");
    }
    SUBCASE("foreign evaluation") {
        ModuleDef m = root;
        m.factors.push_back(product_factor("root.f", "root.product"));
        ModuleDef other = module("other", {"root"});
        other.evaluations.push_back(evaluation("root.f", {}));
        CHECK(code_of([&] { resolve({m, other}); }) == "foreign-evaluation");
    }
    SUBCASE("duplicate evaluation") {
        ModuleDef m = root;
        m.factors.push_back(product_factor("root.f", "root.product"));
        m.evaluations.push_back(evaluation("root.f", {}));
        m.evaluations.push_back(evaluation("root.f", {}));
        CHECK(code_of([&] { resolve({m}); }) == "duplicate-evaluation");
    }
}

TEST_CASE("resolve is deterministic in the module file order") {
    auto modules = load_model_files(demo_files());
    std::vector<ModuleDef> shuffled{modules[2], modules[0], modules[1]};

    const QualityModel a = resolve(modules);
    const QualityModel b = resolve(shuffled);

    REQUIRE(a.modules().size() == b.modules().size());
    for (std::size_t i = 0; i < a.modules().size(); ++i) {
        CHECK(serialize_module(a.modules()[i]) == serialize_module(b.modules()[i]));
    }
    CHECK(trace(a, "root.quality") == trace(b, "root.quality"));
}

TEST_CASE("validate flags the structural rule violations") {
    ModuleDef m = module("m");
    m.entities.push_back(entity("m.product"));
    m.entities.push_back(entity("m.code", {"m.product"}));
    m.factors.push_back(aspect("m.qa", "m.product"));
    m.factors.push_back(product_factor("m.pf", "m.code"));

    SUBCASE("impact direction") {
        m.impacts.push_back(impact("m.qa", "m.pf"));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "impact-direction"));
    }
    SUBCASE("weight sum 1.1 is rejected") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_size("m.size"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.measures.push_back(derived("m.density", "m.count", "m.size", {"m.pf"}));
        m.evaluations.push_back(evaluation(
            "m.pf", {measure_child("m.density", 0.5, Direction::Decreasing, 0.0, 1.0)}));
        m.evaluations.back().children.push_back(
            measure_child("m.density", 0.6, Direction::Decreasing, 0.0, 1.0));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "weight-sum"));
    }
    SUBCASE("unreferenced measure warns") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_count("m.orphan"));
        const auto diagnostics = validate(resolve({m}));
        REQUIRE(has_code(diagnostics, "unreferenced"));
        bool found = false;
        for (const auto& d : diagnostics) {
            if (d.code == "unreferenced" && d.element == "m.orphan") {
                CHECK(d.severity == Diagnostic::Severity::Warning);
                found = true;
            }
        }
        CHECK(found);
    }
    SUBCASE("refinement cycle") {
        m.factors.push_back(product_factor("m.pf2", "m.code", {"m.pf"}));
        m.factors[1].refines.push_back("m.pf2");  // m.pf refines m.pf2 refines m.pf
        m.impacts.push_back(impact("m.pf", "m.qa"));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "refinement-cycle"));
    }
    SUBCASE("kind-mismatched refinement") {
        m.factors.push_back(product_factor("m.pf2", "m.code", {"m.qa"}));
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.impacts.push_back(impact("m.pf2", "m.qa"));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "kind-mismatch"));
    }
    SUBCASE("degenerate utility thresholds") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.instruments.push_back(tool("m.tool", "m.count"));
        m.evaluations.push_back(evaluation(
            "m.pf", {measure_child("m.count", 1.0, Direction::Decreasing, 0.5, 0.5)}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "degenerate-utility"));
    }
    SUBCASE("jump thresholds require a decreasing direction") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.instruments.push_back(tool("m.tool", "m.count"));
        m.evaluations.push_back(evaluation(
            "m.pf", {measure_child("m.count", 1.0, Direction::Increasing, 0.0, 1e-8)}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "jump-direction"));
    }
    SUBCASE("measures are illegal on quality aspect evaluations") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.evaluations.push_back(evaluation(
            "m.qa", {measure_child("m.count", 1.0, Direction::Decreasing, 0.0, 1.0)}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "measure-on-aspect"));
    }
    SUBCASE("aspect children must be connected") {
        // No impact between m.pf and m.qa.
        m.evaluations.push_back(evaluation("m.qa", {factor_child("m.pf", 1.0)}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "invalid-eval-child"));
    }
    SUBCASE("entity cycles") {
        m.entities.push_back(entity("m.a", {"m.b"}));
        m.entities.push_back(entity("m.b", {"m.a"}));
        m.impacts.push_back(impact("m.pf", "m.qa"));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "entity-cycle"));
    }
    SUBCASE("weights outside (0, 1] are rejected") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.evaluations.push_back(evaluation(
            "m.pf", {measure_child("m.count", 1.2, Direction::Decreasing, 0.0, 1.0)}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "weight-range"));
        CHECK_FALSE(has_code(diagnostics, "weight-sum"));  // range failure suppresses sum noise
    }
    SUBCASE("mixed explicit and missing weights") {
        m.impacts.push_back(impact("m.pf", "m.qa"));
        m.measures.push_back(base_size("m.size"));
        m.measures.push_back(base_count("m.count", {"m.pf"}));
        m.measures.push_back(derived("m.density", "m.count", "m.size", {"m.pf"}));
        auto first = measure_child("m.density", 0.5, Direction::Decreasing, 0.0, 1.0);
        auto second = measure_child("m.density", 0.5, Direction::Decreasing, 0.0, 2.0);
        second.weight.reset();
        m.evaluations.push_back(evaluation("m.pf", {first, second}));
        const auto diagnostics = validate(resolve({m}));
        CHECK(has_code(diagnostics, "weight-missing"));
    }
}

TEST_CASE("absent weights resolve to an equal split") {
    ModuleDef m = module("m");
    m.entities.push_back(entity("m.product"));
    m.factors.push_back(aspect("m.qa", "m.product"));
    m.factors.push_back(product_factor("m.pf1", "m.product"));
    m.factors.push_back(product_factor("m.pf2", "m.product"));
    m.impacts.push_back(impact("m.pf1", "m.qa"));
    m.impacts.push_back(impact("m.pf2", "m.qa"));
    auto c1 = factor_child("m.pf1", 0.0);
    auto c2 = factor_child("m.pf2", 0.0);
    c1.weight.reset();
    c2.weight.reset();
    m.evaluations.push_back(evaluation("m.qa", {c1, c2}));

    const QualityModel model = resolve({m});
    const ResolvedEvaluation* eval = model.evaluation("m.qa");
    REQUIRE(eval != nullptr);
    CHECK(eval->children[0].weight == doctest::Approx(0.5));
    CHECK(eval->children[1].weight == doctest::Approx(0.5));
    CHECK_FALSE(eval->mixed_weights);
    CHECK_FALSE(has_code(validate(model), "weight-missing"));
}

TEST_CASE("demo model validates with no diagnostics") {
    const QualityModel model = load_demo_model();
    const auto diagnostics = validate(model);
    CHECK(codes(diagnostics, Diagnostic::Severity::Error).empty());
    CHECK(codes(diagnostics, Diagnostic::Severity::Warning).empty());
}

TEST_CASE("error-free models satisfy the structural invariants post hoc") {
    const QualityModel model = load_demo_model();
    REQUIRE(codes(validate(model), Diagnostic::Severity::Error).empty());

    for (const auto& impact : model.impacts()) {
        CHECK(model.factors().at(impact.source).kind == FactorKind::ProductFactor);
        CHECK(model.factors().at(impact.target).kind == FactorKind::QualityAspect);
    }
    for (const auto& [id, factor] : model.factors()) {
        for (const auto& parent : factor.refines) {
            CHECK(model.factors().at(parent).kind == factor.kind);
        }
    }
    for (const auto& [id, evaluation] : model.evaluations()) {
        double sum = 0.0;
        for (const auto& child : evaluation.children) {
            sum += child.weight;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("trace of an unconnected aspect is empty") {
    ModuleDef m = module("m");
    m.entities.push_back(entity("m.product"));
    m.factors.push_back(aspect("m.lonely", "m.product"));
    const QualityModel model = resolve({m});
    CHECK(trace(model, "m.lonely").empty());
}

TEST_CASE("trace reaches instruments through derived measures") {
    const QualityModel model = load_demo_model();
    const auto entries = trace(model, "root.functional-correctness");
    const TraceEntry expected{"root.general-expression-applicability", "root.doomed-nan-tests",
                              "java.findbugs-doomed-nan"};
    CHECK(std::find(entries.begin(), entries.end(), expected) != entries.end());
    CHECK(std::is_sorted(entries.begin(), entries.end()));
}

TEST_CASE("trace matches the exhaustive reachability oracle on the demo model") {
    const auto modules = load_model_files(demo_files());
    const QualityModel model = resolve(modules);
    for (const auto& aspect_id :
         {"root.quality", "root.maintainability", "root.analysability",
          "root.functional-correctness", "root.modifiability"}) {
        const auto actual = trace(model, aspect_id);
        const auto expected = trace_oracle(modules, aspect_id);
        CHECK(actual.size() == expected.size());
        CHECK(std::set<TraceEntry>(actual.begin(), actual.end()) == expected);
    }
}

TEST_CASE("adding an impact never shrinks a trace") {
    auto modules = load_model_files(demo_files());
    const QualityModel before = resolve(modules);
    const auto base = trace(before, "root.functional-correctness");

    for (auto& m : modules) {
        if (m.id == "root") {
            m.impacts.push_back(impact("root.duplication", "root.functional-correctness",
                                       Polarity::Negative));
        }
    }
    const QualityModel after = resolve(modules);
    const auto grown = trace(after, "root.functional-correctness");

    CHECK(grown.size() >= base.size());
    const std::set<TraceEntry> grown_set(grown.begin(), grown.end());
    for (const auto& entry : base) {
        CHECK(grown_set.count(entry) == 1);
    }
}

TEST_CASE("trace rejects bad starting points") {
    const QualityModel model = load_demo_model();
    CHECK(code_of([&] { trace(model, "root.nope"); }) == "unknown-id");
    CHECK(code_of([&] { trace(model, "root.duplication"); }) == "not-an-aspect");
}
