#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/message.hpp"
#include "acm/tools.hpp"

namespace acm {

enum class ToolChoice { auto_choice, required, none };

std::string_view tool_choice_name(ToolChoice choice);

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;  // content already rendered
  std::vector<Json> tools;        // schema documents; empty = no tools on wire
  ToolChoice tool_choice = ToolChoice::auto_choice;
  int max_tokens = 1024;
  double temperature = 0.0;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::vector<ToolCall> tool_calls;
  std::string finish_reason;
  TokenUsage usage;
};

enum class GatewayErrorCategory { transport, auth, rate_limit, malformed };

std::string_view gateway_error_category_name(GatewayErrorCategory category);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorCategory category, const std::string& message)
      : std::runtime_error("GatewayError(" +
                           std::string(gateway_error_category_name(category)) +
                           "): " + message),
        category_(category) {}

  GatewayErrorCategory category() const { return category_; }

 private:
  GatewayErrorCategory category_;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string api_key_env = "ACM_API_KEY";
  std::string path = "/v1/chat/completions";
  int max_retries = 3;        // transport retries beyond the first attempt
  int backoff_base_ms = 250;  // doubled per retry
  int timeout_seconds = 120;
  std::string debug_log_path;  // request/response JSONL when non-empty
};

Json chat_request_to_json(const ChatRequest& request);

// Parses a chat-completions response body. Structure-level problems throw
// GatewayError(malformed); a tool call whose arguments string fails to parse
// is kept with arguments_malformed set so the runtime can return an error
// ToolResult instead of dying.
ChatResponse parse_chat_response(const Json& body);

// One HTTP round trip with exponential-backoff retries on transport failure.
ChatResponse send_chat(const EndpointConfig& config, const ChatRequest& request);

// Anything that can answer a ChatRequest: the live HTTP endpoint or a
// deterministic playback policy.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(EndpointConfig config) : config_(std::move(config)) {}
  ChatResponse complete(const ChatRequest& request) override {
    return send_chat(config_, request);
  }

 private:
  EndpointConfig config_;
};

// Plays back a fixed list of canned responses in order.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ChatResponse> script)
      : script_(std::move(script)) {}
  ChatResponse complete(const ChatRequest& request) override;
  std::size_t steps_taken() const { return cursor_; }

 private:
  std::vector<ChatResponse> script_;
  std::size_t cursor_ = 0;
};

// Computes each response from (step index, request); the building block for
// task-strategy policies.
class RuleBackend : public ChatBackend {
 public:
  using Rule = std::function<ChatResponse(std::size_t step,
                                          const ChatRequest& request)>;
  explicit RuleBackend(Rule rule) : rule_(std::move(rule)) {}
  ChatResponse complete(const ChatRequest& request) override {
    return rule_(step_++, request);
  }

 private:
  Rule rule_;
  std::size_t step_ = 0;
};

// "SUMMARY[<focus>]: " + first 80 chars of the original. Deterministic
// stand-in for a model-backed summarizer.
std::string scripted_summarizer(const std::string& original,
                                const std::string& focus);

Summarizer make_scripted_summarizer();

// Summarizes through the chat endpoint (no tools). Used for live runs.
Summarizer make_llm_summarizer(EndpointConfig config, std::string model);

using TokenCounter = std::function<std::size_t(std::string_view)>;

TokenCounter default_token_counter();

// Canned-response helpers for scripted playback files: one ChatResponse JSON
// object per line.
ChatResponse chat_response_from_json(const Json& value);
Json chat_response_to_json(const ChatResponse& response);
std::vector<ChatResponse> load_response_script(const std::string& path);

// Convenience constructors for building scripted responses.
ChatResponse make_tool_call_response(const std::string& call_id,
                                     const std::string& name,
                                     Json arguments,
                                     const std::string& content = "");
ChatResponse make_answer_response(const std::string& content);

}  // namespace acm
