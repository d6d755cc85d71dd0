#include "acm/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "acm/text.hpp"

namespace acm {
namespace {

void append_debug_log(const std::string& path, const Json& entry) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (out.good()) out << entry.dump() << "\n";
}

}  // namespace

std::string_view tool_choice_name(ToolChoice choice) {
  switch (choice) {
    case ToolChoice::auto_choice: return "auto";
    case ToolChoice::required: return "required";
    case ToolChoice::none: return "none";
  }
  return "auto";
}

std::string_view gateway_error_category_name(GatewayErrorCategory category) {
  switch (category) {
    case GatewayErrorCategory::transport: return "transport";
    case GatewayErrorCategory::auth: return "auth";
    case GatewayErrorCategory::rate_limit: return "rate_limit";
    case GatewayErrorCategory::malformed: return "malformed";
  }
  return "transport";
}

Json chat_request_to_json(const ChatRequest& request) {
  Json body;
  body["model"] = request.model;
  Json messages = Json::array();
  for (const Message& msg : request.messages) {
    Json m;
    m["role"] = role_name(msg.role);
    m["content"] = msg.content;
    if (!msg.tool_calls.empty()) {
      Json calls = Json::array();
      for (const ToolCall& call : msg.tool_calls) {
        Json c;
        c["id"] = call.id;
        c["type"] = "function";
        c["function"] = {{"name", call.name},
                         {"arguments", call.arguments_malformed
                                           ? call.raw_arguments
                                           : call.arguments.dump()}};
        calls.push_back(std::move(c));
      }
      m["tool_calls"] = std::move(calls);
    }
    if (msg.role == Role::tool) m["tool_call_id"] = msg.tool_call_id;
    messages.push_back(std::move(m));
  }
  body["messages"] = std::move(messages);
  if (!request.tools.empty()) {
    Json tools = Json::array();
    for (const Json& schema : request.tools) tools.push_back(schema);
    body["tools"] = std::move(tools);
    body["tool_choice"] = tool_choice_name(request.tool_choice);
  }
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  return body;
}

ChatResponse parse_chat_response(const Json& body) {
  if (!body.is_object() || !body.contains("choices") ||
      !body.at("choices").is_array() || body.at("choices").empty()) {
    throw GatewayError(GatewayErrorCategory::malformed,
                       "response has no choices");
  }
  const Json& choice = body.at("choices").at(0);
  if (!choice.contains("message") || !choice.at("message").is_object()) {
    throw GatewayError(GatewayErrorCategory::malformed,
                       "choice has no message object");
  }
  const Json& message = choice.at("message");

  ChatResponse response;
  if (message.contains("content") && message.at("content").is_string()) {
    response.content = message.at("content").get<std::string>();
  }
  if (message.contains("tool_calls")) {
    if (!message.at("tool_calls").is_array()) {
      throw GatewayError(GatewayErrorCategory::malformed,
                         "tool_calls is not an array");
    }
    for (const Json& entry : message.at("tool_calls")) {
      ToolCall call;
      if (!entry.is_object() || !entry.contains("function") ||
          !entry.at("function").is_object()) {
        throw GatewayError(GatewayErrorCategory::malformed,
                           "tool call entry has no function object");
      }
      const Json& function = entry.at("function");
      if (!function.contains("name") || !function.at("name").is_string()) {
        throw GatewayError(GatewayErrorCategory::malformed,
                           "tool call has no name");
      }
      call.id = entry.value("id", "");
      call.name = function.at("name").get<std::string>();
      const Json& arguments = function.value("arguments", Json(""));
      if (arguments.is_object()) {
        call.arguments = arguments;
      } else if (arguments.is_string()) {
        call.raw_arguments = arguments.get<std::string>();
        try {
          call.arguments = Json::parse(call.raw_arguments);
          if (!call.arguments.is_object()) {
            call.arguments_malformed = true;
          }
        } catch (const Json::parse_error&) {
          call.arguments_malformed = true;
        }
      } else {
        call.arguments_malformed = true;
      }
      response.tool_calls.push_back(std::move(call));
    }
  }
  if (response.content.empty() && response.tool_calls.empty()) {
    throw GatewayError(GatewayErrorCategory::malformed,
                       "message carries neither content nor tool calls");
  }
  response.finish_reason = choice.value("finish_reason", "");
  if (body.contains("usage") && body.at("usage").is_object()) {
    response.usage.prompt_tokens = body.at("usage").value("prompt_tokens", 0L);
    response.usage.completion_tokens =
        body.at("usage").value("completion_tokens", 0L);
  }
  return response;
}

ChatResponse send_chat(const EndpointConfig& config,
                       const ChatRequest& request) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw GatewayError(GatewayErrorCategory::auth,
                       "API key env var '" + config.api_key_env +
                           "' is not set");
  }

  const std::string body = chat_request_to_json(request).dump();
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers = {
      {"Authorization", std::string("Bearer ") + key},
  };

  httplib::Result result;
  for (int attempt = 0;; ++attempt) {
    result = client.Post(config.path, headers, body, "application/json");
    const bool transport_failure =
        !result || result->status >= 500;
    if (!transport_failure) break;
    if (attempt >= config.max_retries) {
      const std::string detail =
          result ? "server returned status " + std::to_string(result->status)
                 : "connection failed: " + httplib::to_string(result.error());
      throw GatewayError(GatewayErrorCategory::transport, detail);
    }
    std::this_thread::sleep_for(
        std::chrono::milliseconds(config.backoff_base_ms << attempt));
  }

  append_debug_log(config.debug_log_path,
                   Json{{"request", Json::parse(body)},
                        {"status", result->status},
                        {"response", result->body}});

  if (result->status == 401 || result->status == 403) {
    throw GatewayError(GatewayErrorCategory::auth,
                       "endpoint rejected credentials (status " +
                           std::to_string(result->status) + ")");
  }
  if (result->status == 429) {
    throw GatewayError(GatewayErrorCategory::rate_limit,
                       "endpoint rate-limited the request");
  }
  if (result->status < 200 || result->status >= 300) {
    throw GatewayError(GatewayErrorCategory::transport,
                       "unexpected status " + std::to_string(result->status));
  }

  Json parsed;
  try {
    parsed = Json::parse(result->body);
  } catch (const Json::parse_error& e) {
    throw GatewayError(GatewayErrorCategory::malformed,
                       std::string("response body is not JSON: ") + e.what());
  }
  return parse_chat_response(parsed);
}

ChatResponse ScriptedBackend::complete(const ChatRequest&) {
  if (cursor_ >= script_.size()) {
    throw GatewayError(GatewayErrorCategory::malformed,
                       "scripted backend exhausted after " +
                           std::to_string(script_.size()) + " response(s)");
  }
  return script_[cursor_++];
}

std::string scripted_summarizer(const std::string& original,
                                const std::string& focus) {
  return "SUMMARY[" + focus + "]: " + cp_substr(original, 0, 80);
}

Summarizer make_scripted_summarizer() {
  return [](const std::string& original, const std::string& focus) {
    return scripted_summarizer(original, focus);
  };
}

Summarizer make_llm_summarizer(EndpointConfig config, std::string model) {
  return [config = std::move(config), model = std::move(model)](
             const std::string& original, const std::string& focus) {
    ChatRequest request;
    request.model = model;
    Message system;
    system.index = 0;
    system.role = Role::system;
    system.content =
        "Summarize the user's text, focusing on: " + focus +
        ". Reply with the summary only.";
    Message user;
    user.index = 1;
    user.role = Role::user;
    user.content = original;
    request.messages = {std::move(system), std::move(user)};
    const ChatResponse response = send_chat(config, request);
    if (response.content.empty()) {
      throw std::runtime_error("summarizer endpoint returned no content");
    }
    return response.content;
  };
}

TokenCounter default_token_counter() {
  return [](std::string_view text) { return heuristic_token_count(text); };
}

ChatResponse chat_response_from_json(const Json& value) {
  ChatResponse response;
  response.content = value.value("content", "");
  if (value.contains("tool_calls")) {
    for (const Json& entry : value.at("tool_calls")) {
      ToolCall call;
      call.id = entry.value("id", "");
      call.name = entry.value("name", "");
      if (entry.contains("arguments")) {
        const Json& arguments = entry.at("arguments");
        if (arguments.is_object()) {
          call.arguments = arguments;
        } else if (arguments.is_string()) {
          call.raw_arguments = arguments.get<std::string>();
          try {
            call.arguments = Json::parse(call.raw_arguments);
            if (!call.arguments.is_object()) call.arguments_malformed = true;
          } catch (const Json::parse_error&) {
            call.arguments_malformed = true;
          }
        }
      }
      response.tool_calls.push_back(std::move(call));
    }
  }
  response.finish_reason = value.value("finish_reason", "");
  return response;
}

Json chat_response_to_json(const ChatResponse& response) {
  Json value;
  value["content"] = response.content;
  if (!response.tool_calls.empty()) {
    Json calls = Json::array();
    for (const ToolCall& call : response.tool_calls) {
      Json c;
      c["id"] = call.id;
      c["name"] = call.name;
      c["arguments"] =
          call.arguments_malformed ? Json(call.raw_arguments) : call.arguments;
      calls.push_back(std::move(c));
    }
    value["tool_calls"] = std::move(calls);
  }
  if (!response.finish_reason.empty()) {
    value["finish_reason"] = response.finish_reason;
  }
  return value;
}

std::vector<ChatResponse> load_response_script(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw std::runtime_error("cannot open response script: " + path);
  }
  std::vector<ChatResponse> script;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    script.push_back(chat_response_from_json(Json::parse(line)));
  }
  return script;
}

ChatResponse make_tool_call_response(const std::string& call_id,
                                     const std::string& name, Json arguments,
                                     const std::string& content) {
  ChatResponse response;
  response.content = content;
  ToolCall call;
  call.id = call_id;
  call.name = name;
  call.arguments = std::move(arguments);
  response.tool_calls.push_back(std::move(call));
  response.finish_reason = "tool_calls";
  return response;
}

ChatResponse make_answer_response(const std::string& content) {
  ChatResponse response;
  response.content = content;
  response.finish_reason = "stop";
  return response;
}

}  // namespace acm
