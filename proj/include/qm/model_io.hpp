#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qm/model.hpp"

namespace qm {

inline constexpr std::string_view kModelFormatVersion = "1";

// Parses one `<name>.qm.json` document. Unknown fields are rejected; enum
// literals are checked; syntax errors carry line/column. Throws ParseError.
ModuleDef parse_module(std::string_view text);

// Canonical form: sorted keys, 2-space indent, LF endings, trailing newline.
// serialize_module(parse_module(x)) is a fixpoint of its own output.
std::string serialize_module(const ModuleDef& module);

ModuleDef load_module_file(const std::filesystem::path& path);
void save_module_file(const std::filesystem::path& path, const ModuleDef& module);
std::vector<ModuleDef> load_model_files(const std::vector<std::filesystem::path>& paths);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace qm
