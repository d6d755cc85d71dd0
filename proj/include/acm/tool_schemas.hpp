#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "acm/message.hpp"

namespace acm {

// The six tool names in export order.
const std::array<std::string_view, 6>& tool_names();

bool is_known_tool(std::string_view name);

// Full schema document ({"type":"function","function":{...}}) for one tool.
const Json& tool_schema(std::string_view name);

std::vector<Json> all_tool_schemas();

// Canonical serialization served to the gateway and pinned by golden files:
// two-space indent plus trailing newline.
std::string schema_document_text(std::string_view name);

// Validates call arguments against the tool's parameter schema (types, enums,
// bounds, required fields, additionalProperties:false) and returns the
// arguments with schema defaults filled in.
Json validate_tool_arguments(std::string_view name, const Json& arguments);

}  // namespace acm
