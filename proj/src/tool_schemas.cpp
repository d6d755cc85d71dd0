#include "acm/tool_schemas.hpp"

#include <map>

#include "acm/error.hpp"

namespace acm {
namespace {

constexpr std::string_view kFragmentContext = R"json({
  "type": "function",
  "function": {
    "name": "fragment_context",
    "description": "Fragment conversation content between specified markers into manageable pieces. Useful for breaking down long text sections for detailed analysis.",
    "parameters": {
      "type": "object",
      "properties": {
        "start_marker": {
          "type": "string",
          "description": "Start marker text to identify the beginning of content to fragment"
        },
        "end_marker": {
          "type": "string",
          "description": "End marker text to identify the end of content to fragment"
        },
        "num_fragments": {
          "type": "integer",
          "default": 5,
          "minimum": 1,
          "maximum": 20,
          "description": "Number of fragments to create (default: 5)"
        },
        "role": {
          "type": "string",
          "enum": ["user", "assistant", "all"],
          "default": "user",
          "description": "Which role's messages to search in (default: user)"
        }
      },
      "required": ["start_marker", "end_marker"],
      "additionalProperties": false
    }
  }
})json";

constexpr std::string_view kFoldFragment = R"json({
  "type": "function",
  "function": {
    "name": "fold_fragment",
    "description": "Fold (hide) a conversation fragment to reduce visible context length. The content is preserved and can be expanded later.",
    "parameters": {
      "type": "object",
      "properties": {
        "fragment_id": {
          "type": "string",
          "description": "ID of the fragment to fold (e.g., 'f1a2b3')"
        }
      },
      "required": ["fragment_id"],
      "additionalProperties": false
    }
  }
})json";

constexpr std::string_view kRestoreFragment = R"json({
  "type": "function",
  "function": {
    "name": "restore_fragment",
    "description": "Restore a fragment to its original content from ACM storage. Works for both summarized and folded fragments.",
    "parameters": {
      "type": "object",
      "properties": {
        "fragment_id": {
          "type": "string",
          "description": "ID of the fragment to restore (e.g., 'f1a2b3')"
        }
      },
      "required": ["fragment_id"],
      "additionalProperties": false
    }
  }
})json";

constexpr std::string_view kSummarizeFragment = R"json({
  "type": "function",
  "function": {
    "name": "summarize_fragment",
    "description": "Summarize a conversation fragment using LLM to compress content while preserving key information. Supports focus-oriented summarization.",
    "parameters": {
      "type": "object",
      "properties": {
        "fragment_id": {
          "type": "string",
          "description": "ID of the fragment to summarize (e.g., 'f1a2b3')"
        },
        "focus": {
          "type": "string",
          "description": "Focus area for the summary (e.g., 'technical details', 'key decisions', 'action items', 'main points', 'problems', 'solutions')"
        }
      },
      "required": ["fragment_id", "focus"],
      "additionalProperties": false
    }
  }
})json";

constexpr std::string_view kSearchContext = R"json({
  "type": "function",
  "function": {
    "name": "search_context",
    "description": "Search tool for finding exact text matches in conversation history.",
    "parameters": {
      "type": "object",
      "properties": {
        "query": {
          "type": "string",
          "description": "Exact text to search for in conversation history"
        },
        "role": {
          "type": "string",
          "enum": ["user", "assistant", "all"],
          "default": "user",
          "description": "Filter by message role (default: user)"
        },
        "max_results": {
          "type": "integer",
          "default": 10,
          "minimum": 1,
          "maximum": 50,
          "description": "Maximum number of results to return"
        },
        "context_size": {
          "type": "integer",
          "default": 200,
          "minimum": 50,
          "maximum": 1000,
          "description": "Context characters before/after match"
        }
      },
      "required": ["query"],
      "additionalProperties": false
    }
  }
})json";

constexpr std::string_view kGetSearchDetail = R"json({
  "type": "function",
  "function": {
    "name": "get_search_detail",
    "description": "Get detailed context for a search result by its ID. Retrieves extended context around the search match position.",
    "parameters": {
      "type": "object",
      "properties": {
        "search_id": {
          "type": "string",
          "description": "Search result ID from search_context (e.g., 's1a2b3')"
        },
        "extended_context": {
          "type": "integer",
          "default": 500,
          "minimum": 100,
          "maximum": 2000,
          "description": "Number of characters to show before and after the match (default: 500)"
        }
      },
      "required": ["search_id"],
      "additionalProperties": false
    }
  }
})json";

const std::map<std::string_view, Json>& schema_table() {
  static const std::map<std::string_view, Json> table = {
      {"fragment_context", Json::parse(kFragmentContext)},
      {"fold_fragment", Json::parse(kFoldFragment)},
      {"restore_fragment", Json::parse(kRestoreFragment)},
      {"summarize_fragment", Json::parse(kSummarizeFragment)},
      {"search_context", Json::parse(kSearchContext)},
      {"get_search_detail", Json::parse(kGetSearchDetail)},
  };
  return table;
}

void check_type(const std::string& key, const Json& spec, const Json& value) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "string") {
    if (!value.is_string()) {
      throw Error(ErrorCode::schema_violation,
                  "argument '" + key + "' must be a string");
    }
  } else if (type == "integer") {
    if (!value.is_number_integer()) {
      throw Error(ErrorCode::schema_violation,
                  "argument '" + key + "' must be an integer");
    }
    const auto v = value.get<long long>();
    if (spec.contains("minimum") && v < spec.at("minimum").get<long long>()) {
      throw Error(ErrorCode::schema_violation,
                  "argument '" + key + "' below minimum " +
                      spec.at("minimum").dump());
    }
    if (spec.contains("maximum") && v > spec.at("maximum").get<long long>()) {
      throw Error(ErrorCode::schema_violation,
                  "argument '" + key + "' above maximum " +
                      spec.at("maximum").dump());
    }
  }
  if (spec.contains("enum")) {
    bool found = false;
    for (const Json& allowed : spec.at("enum")) {
      if (allowed == value) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::schema_violation,
                  "argument '" + key + "' must be one of " +
                      spec.at("enum").dump());
    }
  }
}

}  // namespace

const std::array<std::string_view, 6>& tool_names() {
  static const std::array<std::string_view, 6> names = {
      "fragment_context",  "fold_fragment",  "restore_fragment",
      "summarize_fragment", "search_context", "get_search_detail",
  };
  return names;
}

bool is_known_tool(std::string_view name) {
  return schema_table().count(name) != 0;
}

const Json& tool_schema(std::string_view name) {
  const auto& table = schema_table();
  auto it = table.find(name);
  if (it == table.end()) {
    throw Error(ErrorCode::unknown_tool,
                "no schema for tool '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<Json> all_tool_schemas() {
  std::vector<Json> out;
  out.reserve(tool_names().size());
  for (std::string_view name : tool_names()) out.push_back(tool_schema(name));
  return out;
}

std::string schema_document_text(std::string_view name) {
  return tool_schema(name).dump(2) + "\n";
}

Json validate_tool_arguments(std::string_view name, const Json& arguments) {
  const Json& params = tool_schema(name).at("function").at("parameters");
  if (!arguments.is_object()) {
    throw Error(ErrorCode::schema_violation, "arguments must be a JSON object");
  }
  const Json& properties = params.at("properties");
  for (const auto& [key, value] : arguments.items()) {
    if (!properties.contains(key)) {
      throw Error(ErrorCode::schema_violation,
                  "unexpected argument '" + key + "'");
    }
    check_type(key, properties.at(key), value);
  }
  for (const Json& required : params.at("required")) {
    if (!arguments.contains(required.get<std::string>())) {
      throw Error(ErrorCode::schema_violation,
                  "missing required argument '" +
                      required.get<std::string>() + "'");
    }
  }
  Json normalized = arguments;
  for (const auto& [key, spec] : properties.items()) {
    if (!normalized.contains(key) && spec.contains("default")) {
      normalized[key] = spec.at("default");
    }
  }
  return normalized;
}

}  // namespace acm
