#include "acm/runtime.hpp"

#include <array>

#include "acm/text.hpp"
#include "acm/tool_schemas.hpp"

namespace acm {
namespace {

constexpr std::array<std::string_view, 4> kContextModifyingTools = {
    "fragment_context",
    "fold_fragment",
    "summarize_fragment",
    "restore_fragment",
};

long context_tokens(const std::vector<Message>& messages,
                    const TokenCounter& counter) {
  long total = 0;
  for (const Message& msg : messages) {
    total += static_cast<long>(counter(msg.content));
    for (const ToolCall& call : msg.tool_calls) {
      total += static_cast<long>(counter(call.arguments.dump()));
    }
  }
  return total;
}

long rendered_context_tokens(const ConversationState& state,
                             const TokenCounter& counter) {
  long total = 0;
  for (const Message& msg : state.messages) {
    total += static_cast<long>(counter(render_message(state, msg.index)));
    for (const ToolCall& call : msg.tool_calls) {
      total += static_cast<long>(counter(call.arguments.dump()));
    }
  }
  return total;
}

}  // namespace

bool context_modifying_name(std::string_view tool_name) noexcept {
  for (std::string_view name : kContextModifyingTools) {
    if (name == tool_name) return true;
  }
  return false;
}

bool is_context_modifying(std::string_view tool_name) {
  if (!is_known_tool(tool_name)) {
    throw Error(ErrorCode::unknown_tool,
                "'" + std::string(tool_name) + "' is not one of the six tools");
  }
  return context_modifying_name(tool_name);
}

std::vector<Message> wire_messages(const ConversationState& state) {
  std::vector<Message> out;
  out.reserve(state.messages.size());
  for (const Message& msg : state.messages) {
    Message wire = msg;
    wire.content = render_message(state, msg.index);
    out.push_back(std::move(wire));
  }
  return out;
}

TurnOutput run_turn(ConversationState state, Message user_msg,
                    ChatBackend& llm, const RuntimeOptions& options,
                    std::string rollout_id) {
  if (user_msg.content.empty()) {
    throw Error(ErrorCode::structural_error, "user message must be non-empty");
  }
  const Summarizer summarizer =
      options.summarizer ? options.summarizer : make_scripted_summarizer();
  const TokenCounter counter = options.token_counter
                                   ? options.token_counter
                                   : default_token_counter();

  user_msg.index = state.messages.size();
  user_msg.role = Role::user;
  state = append_message(std::move(state), std::move(user_msg));

  TrajectoryRecord record;
  record.rollout_id = std::move(rollout_id);
  record.initial_state = state;

  long last_request_tokens = 0;
  bool budget_forced = false;
  for (std::size_t step = 0;; ++step) {
    ChatRequest request;
    request.model = options.model;
    request.messages = wire_messages(state);
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    if (options.tools_enabled) {
      request.tools = all_tool_schemas();
      if (budget_forced) {
        request.tool_choice = ToolChoice::none;
      } else if (step == 0) {
        request.tool_choice = options.limits.first_step_tool_choice;
      } else {
        request.tool_choice = ToolChoice::auto_choice;
      }
    }

    last_request_tokens = context_tokens(request.messages, counter);
    if (step == 0) record.token_counts.initial_context = last_request_tokens;

    ChatResponse response;
    try {
      response = llm.complete(request);
    } catch (const GatewayError& e) {
      record.token_counts.final_context = last_request_tokens;
      throw TurnAborted(e.what(), std::move(record));
    }

    Message completion;
    completion.index = state.messages.size();
    completion.role = Role::assistant;
    completion.content = response.content;
    completion.tool_calls = response.tool_calls;
    for (std::size_t c = 0; c < completion.tool_calls.size(); ++c) {
      // Models occasionally omit call ids; the tool message needs one.
      if (completion.tool_calls[c].id.empty()) {
        completion.tool_calls[c].id =
            "call_auto_" + std::to_string(step) + "_" + std::to_string(c);
      }
    }
    state = append_message(std::move(state), completion);

    const bool wants_tools = !completion.tool_calls.empty();
    if (!wants_tools || budget_forced || !options.tools_enabled) {
      // A tool call after tool_choice=none (or with tools disabled) is a
      // format violation; the content still stands as the final answer.
      if (wants_tools) record.format_error = true;
      record.steps.push_back({std::move(completion), std::nullopt, false});
      record.final_answer = response.content;
      break;
    }

    const ToolCall call = completion.tool_calls.front();
    ToolResult result;
    if (call.arguments_malformed) {
      record.format_error = true;
      result.tool_call_id = call.id;
      result.status = ToolResult::Status::error;
      result.payload =
          "GatewayError(malformed): tool call arguments are not valid JSON: " +
          call.raw_arguments;
    } else {
      ToolOutcome outcome = dispatch(std::move(state), call, summarizer);
      state = std::move(outcome.state);
      result = std::move(outcome.result);
    }
    if (completion.tool_calls.size() > 1) {
      result.payload +=
          "\n(note: " + std::to_string(completion.tool_calls.size() - 1) +
          " additional tool call(s) in this step were not executed; issue one "
          "call per step)";
    }

    Message tool_msg;
    tool_msg.index = state.messages.size();
    tool_msg.role = Role::tool;
    tool_msg.tool_call_id = call.id;
    tool_msg.content = result.payload;
    state = append_message(std::move(state), std::move(tool_msg));

    record.tool_call_count += 1;
    record.steps.push_back(
        {std::move(completion), result, context_modifying_name(call.name)});

    if (record.tool_call_count >= options.limits.max_tool_steps) {
      budget_forced = true;
    }
    // The next request must not blow the context window either.
    if (rendered_context_tokens(state, counter) >
        options.limits.max_context_tokens) {
      budget_forced = true;
    }
  }

  record.token_counts.final_context = last_request_tokens;
  long total = record.token_counts.initial_context;
  for (const TurnStep& step : record.steps) {
    total += static_cast<long>(counter(step.completion.content));
    for (const ToolCall& call : step.completion.tool_calls) {
      total += static_cast<long>(counter(call.arguments.dump()));
    }
    if (step.tool_result) {
      total += static_cast<long>(counter(step.tool_result->payload));
    }
  }
  record.token_counts.trajectory_total = total;

  return {std::move(state), std::move(record)};
}

}  // namespace acm
