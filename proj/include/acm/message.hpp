#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace acm {

// Insertion-ordered JSON everywhere: wire formats and golden files depend on
// stable key order.
using Json = nlohmann::ordered_json;

enum class Role { system, user, assistant, tool };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct ToolCall {
  std::string id;
  std::string name;
  Json arguments = Json::object();
  // Wire text kept verbatim when the model emitted arguments that do not
  // parse as JSON; dispatch turns that into an error result.
  std::string raw_arguments;
  bool arguments_malformed = false;
};

struct ToolResult {
  enum class Status { ok, error };

  std::string tool_call_id;
  Status status = Status::ok;
  std::string payload;

  bool ok() const { return status == Status::ok; }
};

struct Message {
  std::size_t index = 0;
  Role role = Role::user;
  std::string content;
  std::vector<ToolCall> tool_calls;  // assistant only
  std::string tool_call_id;          // tool role only
};

}  // namespace acm
