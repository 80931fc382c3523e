#include "qm/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qm {

namespace {

using nlohmann::json;

// nlohmann reports syntax errors by byte offset; the format contract wants
// line and column.
std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
    int line = 1;
    int column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

[[noreturn]] void schema_error(const std::string& where, const std::string& message) {
    throw ParseError("schema", where.empty() ? message : where + ": " + message);
}

class Fields {
public:
    Fields(const json& object, std::string where) : object_(object), where_(std::move(where)) {
        if (!object.is_object()) {
            schema_error(where_, "expected an object");
        }
    }

    ~Fields() = default;

    void finish() const {
        for (const auto& [key, _] : object_.items()) {
            if (!seen_.count(key)) {
                schema_error(where_, "unknown field '" + key + "'");
            }
        }
    }

    const json* optional(const std::string& key) {
        seen_.insert(key);
        auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    const json& required(const std::string& key) {
        const json* value = optional(key);
        if (!value) {
            schema_error(where_, "missing field '" + key + "'");
        }
        return *value;
    }

    std::string string(const std::string& key) {
        const json& value = required(key);
        if (!value.is_string()) {
            schema_error(where_, "field '" + key + "' must be a string");
        }
        return value.get<std::string>();
    }

    std::string string_or(const std::string& key, std::string fallback) {
        const json* value = optional(key);
        if (!value) {
            return fallback;
        }
        if (!value->is_string()) {
            schema_error(where_, "field '" + key + "' must be a string");
        }
        return value->get<std::string>();
    }

    double number(const std::string& key) {
        const json& value = required(key);
        if (!value.is_number()) {
            schema_error(where_, "field '" + key + "' must be a number");
        }
        return value.get<double>();
    }

    std::vector<std::string> string_list(const std::string& key, bool required_field) {
        const json* value = required_field ? &required(key) : optional(key);
        if (!value) {
            return {};
        }
        if (!value->is_array()) {
            schema_error(where_, "field '" + key + "' must be an array");
        }
        std::vector<std::string> out;
        for (const auto& item : *value) {
            if (!item.is_string()) {
                schema_error(where_, "field '" + key + "' must contain strings");
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    const std::string& where() const { return where_; }
    const json& raw() const { return object_; }

private:
    const json& object_;
    std::string where_;
    std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_literal(Fields& fields, const std::string& key,
                   std::initializer_list<std::pair<std::string_view, Enum>> literals) {
    const std::string value = fields.string(key);
    for (const auto& [text, result] : literals) {
        if (value == text) {
            return result;
        }
    }
    std::string expected;
    for (const auto& [text, _] : literals) {
        expected += expected.empty() ? "" : " | ";
        expected += text;
    }
    schema_error(fields.where(), "field '" + key + "' has unknown literal '" + value +
                                     "' (expected " + expected + ")");
}

UtilityFunction parse_utility(const json& node, const std::string& where) {
    Fields fields(node, where);
    UtilityFunction out;
    out.direction = parse_literal<Direction>(fields, "direction",
                                  {{"increasing", Direction::Increasing},
                                   {"decreasing", Direction::Decreasing}});
    out.min = fields.number("min");
    out.max = fields.number("max");
    fields.finish();
    return out;
}

EntityNode parse_entity(const json& node) {
    Fields fields(node, "entity");
    EntityNode out;
    out.id = fields.string("id");
    out.name = fields.string("name");
    out.description = fields.string_or("description", "");
    out.is_a = fields.string_list("isA", true);
    out.part_of = fields.string_list("partOf", true);
    fields.finish();
    return out;
}

Factor parse_factor(const json& node) {
    Fields fields(node, "factor");
    Factor out;
    out.id = fields.string("id");
    out.name = fields.string("name");
    out.kind = parse_literal<FactorKind>(fields, "kind",
                             {{"QualityAspect", FactorKind::QualityAspect},
                              {"ProductFactor", FactorKind::ProductFactor}});
    out.entity = fields.string("entity");
    out.refines = fields.string_list("refines", true);
    out.description = fields.string("description");
    fields.finish();
    return out;
}

Impact parse_impact(const json& node) {
    Fields fields(node, "impact");
    Impact out;
    out.source = fields.string("source");
    out.target = fields.string("target");
    out.polarity = parse_literal<Polarity>(fields, "polarity",
                                 {{"positive", Polarity::Positive},
                                  {"negative", Polarity::Negative}});
    out.justification = fields.string("justification");
    fields.finish();
    return out;
}

Measure parse_measure(const json& node) {
    Fields fields(node, "measure");
    Measure out;
    out.id = fields.string("id");
    out.name = fields.string("name");
    out.type = parse_literal<MeasureType>(fields, "type",
                             {{"base-count", MeasureType::BaseCount},
                              {"base-size", MeasureType::BaseSize},
                              {"derived-ratio", MeasureType::DerivedRatio}});
    out.factors = fields.string_list("factors", true);
    const json* numerator = fields.optional("numerator");
    const json* normalized_by = fields.optional("normalizedBy");
    if (out.type == MeasureType::DerivedRatio) {
        if (!numerator || !normalized_by) {
            schema_error("measure " + out.id,
                         "derived-ratio measures need 'numerator' and 'normalizedBy'");
        }
        out.numerator = numerator->is_string() ? numerator->get<std::string>() : "";
        out.normalized_by = normalized_by->is_string() ? normalized_by->get<std::string>() : "";
        if (out.numerator.empty() || out.normalized_by.empty()) {
            schema_error("measure " + out.id, "'numerator' and 'normalizedBy' must be strings");
        }
    } else if (numerator || normalized_by) {
        schema_error("measure " + out.id,
                     "'numerator'/'normalizedBy' are only legal on derived-ratio measures");
    }
    fields.finish();
    return out;
}

Instrument parse_instrument(const json& node) {
    Fields fields(node, "instrument");
    Instrument out;
    out.id = fields.string("id");
    out.measure = fields.string("measure");
    out.kind = parse_literal<InstrumentKind>(fields, "kind",
                             {{"manual", InstrumentKind::Manual}, {"tool", InstrumentKind::Tool}});
    const json* tool_name = fields.optional("toolName");
    const json* rule_id = fields.optional("ruleId");
    if (out.kind == InstrumentKind::Tool) {
        if (!tool_name || !rule_id || !tool_name->is_string() || !rule_id->is_string()) {
            schema_error("instrument " + out.id,
                         "tool instruments need string 'toolName' and 'ruleId'");
        }
        out.tool_name = tool_name->get<std::string>();
        out.rule_id = rule_id->get<std::string>();
    } else if (tool_name || rule_id) {
        schema_error("instrument " + out.id,
                     "'toolName'/'ruleId' are only legal on tool instruments");
    }
    fields.finish();
    return out;
}

Evaluation parse_evaluation(const json& node) {
    Fields fields(node, "evaluation");
    Evaluation out;
    out.factor = fields.string("factor");
    const json& children = fields.required("children");
    if (!children.is_array()) {
        schema_error("evaluation " + out.factor, "'children' must be an array");
    }
    for (const auto& item : children) {
        Fields child_fields(item, "evaluation " + out.factor + " child");
        EvaluationChild child;
        child.ref = child_fields.string("ref");
        child.kind = parse_literal<EvaluationChild::Kind>(child_fields, "refKind",
                                   {{"measure", EvaluationChild::Kind::Measure},
                                    {"factor", EvaluationChild::Kind::Factor}});
        if (const json* weight = child_fields.optional("weight")) {
            if (!weight->is_number()) {
                schema_error(child_fields.where(), "'weight' must be a number");
            }
            child.weight = weight->get<double>();
        }
        const json* utility_node = child_fields.optional("utility");
        if (child.kind == EvaluationChild::Kind::Measure) {
            if (!utility_node) {
                schema_error(child_fields.where(), "measure children need a 'utility'");
            }
            child.utility = parse_utility(*utility_node,
                                          "utility of " + out.factor + "/" + child.ref);
        } else if (utility_node) {
            schema_error(child_fields.where(), "factor children may not carry a 'utility'");
        }
        child_fields.finish();
        out.children.push_back(std::move(child));
    }
    fields.finish();
    return out;
}

template <typename T, typename Parser>
std::vector<T> parse_section(Fields& fields, const std::string& key, Parser parser) {
    const json* section = fields.optional(key);
    if (!section) {
        return {};
    }
    if (!section->is_array()) {
        schema_error("module", "'" + key + "' must be an array");
    }
    std::vector<T> out;
    for (const auto& item : *section) {
        out.push_back(parser(item));
    }
    return out;
}

json utility_to_json(const UtilityFunction& utility) {
    return json{{"direction", to_string(utility.direction)},
                {"min", utility.min},
                {"max", utility.max}};
}

} // namespace

ModuleDef parse_module(std::string_view text) {
    json document;
    try {
        document = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, column] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError("syntax", e.what(), line, column);
    }

    Fields top(document, "document");
    const std::string version = top.string("formatVersion");
    if (version != kModelFormatVersion) {
        throw ParseError("version-mismatch",
                         "unsupported formatVersion '" + version + "' (expected \"1\")");
    }

    Fields module_fields(top.required("module"), "module");
    ModuleDef module;
    module.id = module_fields.string("id");
    module.requires_ = module_fields.string_list("requires", true);
    module.entities = parse_section<EntityNode>(module_fields, "entities", parse_entity);
    module.factors = parse_section<Factor>(module_fields, "factors", parse_factor);
    module.impacts = parse_section<Impact>(module_fields, "impacts", parse_impact);
    module.measures = parse_section<Measure>(module_fields, "measures", parse_measure);
    module.instruments = parse_section<Instrument>(module_fields, "instruments", parse_instrument);
    module.evaluations = parse_section<Evaluation>(module_fields, "evaluations", parse_evaluation);
    module_fields.finish();
    top.finish();

    module.normalize();
    return module;
}

std::string serialize_module(const ModuleDef& input) {
    ModuleDef module = input;
    module.normalize();

    // nlohmann's default object keeps keys sorted, which is exactly the
    // canonical key order the format promises.
    json body;
    body["id"] = module.id;
    body["requires"] = module.requires_;

    if (!module.entities.empty()) {
        json list = json::array();
        for (const auto& entity : module.entities) {
            json node{{"id", entity.id},
                      {"name", entity.name},
                      {"isA", entity.is_a},
                      {"partOf", entity.part_of}};
            if (!entity.description.empty()) {
                node["description"] = entity.description;
            }
            list.push_back(std::move(node));
        }
        body["entities"] = std::move(list);
    }
    if (!module.factors.empty()) {
        json list = json::array();
        for (const auto& factor : module.factors) {
            list.push_back(json{{"id", factor.id},
                                {"name", factor.name},
                                {"kind", to_string(factor.kind)},
                                {"entity", factor.entity},
                                {"refines", factor.refines},
                                {"description", factor.description}});
        }
        body["factors"] = std::move(list);
    }
    if (!module.impacts.empty()) {
        json list = json::array();
        for (const auto& impact : module.impacts) {
            list.push_back(json{{"source", impact.source},
                                {"target", impact.target},
                                {"polarity", to_string(impact.polarity)},
                                {"justification", impact.justification}});
        }
        body["impacts"] = std::move(list);
    }
    if (!module.measures.empty()) {
        json list = json::array();
        for (const auto& measure : module.measures) {
            json node{{"id", measure.id},
                      {"name", measure.name},
                      {"type", to_string(measure.type)},
                      {"factors", measure.factors}};
            if (measure.type == MeasureType::DerivedRatio) {
                node["numerator"] = measure.numerator;
                node["normalizedBy"] = measure.normalized_by;
            }
            list.push_back(std::move(node));
        }
        body["measures"] = std::move(list);
    }
    if (!module.instruments.empty()) {
        json list = json::array();
        for (const auto& instrument : module.instruments) {
            json node{{"id", instrument.id},
                      {"measure", instrument.measure},
                      {"kind", to_string(instrument.kind)}};
            if (instrument.kind == InstrumentKind::Tool) {
                node["toolName"] = instrument.tool_name;
                node["ruleId"] = instrument.rule_id;
            }
            list.push_back(std::move(node));
        }
        body["instruments"] = std::move(list);
    }
    if (!module.evaluations.empty()) {
        json list = json::array();
        for (const auto& evaluation : module.evaluations) {
            json children = json::array();
            for (const auto& child : evaluation.children) {
                json node{{"ref", child.ref},
                          {"refKind",
                           child.kind == EvaluationChild::Kind::Measure ? "measure" : "factor"}};
                if (child.weight) {
                    node["weight"] = *child.weight;
                }
                if (child.utility) {
                    node["utility"] = utility_to_json(*child.utility);
                }
                children.push_back(std::move(node));
            }
            list.push_back(json{{"factor", evaluation.factor}, {"children", std::move(children)}});
        }
        body["evaluations"] = std::move(list);
    }

    json document{{"formatVersion", std::string(kModelFormatVersion)}, {"module", std::move(body)}};
    return document.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open file for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw IoError(path.string(), "read failed");
    }
    return std::move(buffer).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(path.string(), "cannot open file for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

ModuleDef load_module_file(const std::filesystem::path& path) {
    try {
        return parse_module(read_text_file(path));
    } catch (const ParseError& e) {
        throw ParseError(e.code(), path.string() + ": " + e.message(), e.line(), e.column());
    }
}

void save_module_file(const std::filesystem::path& path, const ModuleDef& module) {
    write_text_file(path, serialize_module(module));
}

std::vector<ModuleDef> load_model_files(const std::vector<std::filesystem::path>& paths) {
    std::vector<ModuleDef> modules;
    modules.reserve(paths.size());
    for (const auto& path : paths) {
        modules.push_back(load_module_file(path));
    }
    return modules;
}

} // namespace qm
