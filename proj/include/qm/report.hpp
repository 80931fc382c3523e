#pragma once

#include <string>

#include "qm/assessment.hpp"

namespace qm {

// Canonical JSON (sorted keys, 2-space indent, LF): utilities and grades
// rendered to 4 decimals with full precision kept in *_raw fields. The
// timestamp is the only run-dependent byte.
std::string report_to_json(const AssessmentResult& result, const std::string& timestamp_utc);

// Single self-contained page: collapsible factor tree with grade badges and
// interval bars, a measure table per factor and a flat contribution table.
// No scripts, no external fetches. Nodes with interval width above 0.1 are
// flagged as low confidence.
std::string report_to_html(const AssessmentResult& result, const std::string& timestamp_utc);

// Current time as UTC ISO-8601 (e.g. 2024-05-01T12:00:00Z).
std::string current_utc_timestamp();

} // namespace qm
