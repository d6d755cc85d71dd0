#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acm/conversation.hpp"
#include "acm/gateway.hpp"

namespace acm {

struct TurnLimits {
  int max_tool_steps = 20;
  long max_context_tokens = 128000;
  ToolChoice first_step_tool_choice = ToolChoice::required;
};

// One loop iteration: an assistant completion plus, for tool steps, the
// executed call's result. The final step of every turn has no result.
struct TurnStep {
  Message completion;
  std::optional<ToolResult> tool_result;
  bool ctx_mod = false;  // executed tool was in T_ctx
};

struct TokenCounts {
  long initial_context = 0;   // rendered context of the first request
  long final_context = 0;     // rendered context of the last request
  long trajectory_total = 0;  // initial context + all completions + results
};

// Benchmark judgement attached after scoring; the runtime itself never sets
// this.
struct TrajectoryEval {
  bool correct = false;
  double score = 0.0;
  double context_reduction = 0.0;
};

struct TrajectoryRecord {
  std::string rollout_id;
  // Pre-turn conversation, original contents plus id-stream seeds, so tool
  // effects can be replayed exactly.
  ConversationState initial_state;
  std::vector<TurnStep> steps;
  std::string final_answer;
  int tool_call_count = 0;
  bool format_error = false;
  TokenCounts token_counts;
  std::optional<TrajectoryEval> eval;
};

struct RuntimeOptions {
  TurnLimits limits;
  bool tools_enabled = true;
  std::string model = "playback";
  int max_tokens = 1024;
  double temperature = 0.0;
  Summarizer summarizer;        // defaults to the scripted summarizer
  TokenCounter token_counter;   // defaults to the chars/4 heuristic
};

// Gateway failure that survived retries; carries whatever the turn produced
// before dying.
class TurnAborted : public std::runtime_error {
 public:
  TurnAborted(std::string reason, TrajectoryRecord partial)
      : std::runtime_error("turn aborted: " + reason),
        partial_(std::move(partial)) {}

  const TrajectoryRecord& partial_record() const { return partial_; }

 private:
  TrajectoryRecord partial_;
};

struct TurnOutput {
  ConversationState state;
  TrajectoryRecord record;
};

// Runs one user turn: appends user_msg, then loops LLM completion -> tool
// dispatch -> tool result until the model answers without tool calls or the
// step budget forces a final tool_choice=none request.
TurnOutput run_turn(ConversationState state, Message user_msg,
                    ChatBackend& llm, const RuntimeOptions& options,
                    std::string rollout_id = "rollout");

// True exactly for the four tools that change the rendered context.
// Unknown names are errors.
bool is_context_modifying(std::string_view tool_name);

// Membership test that tolerates unknown/invalid names (used for flags on
// recorded steps, where a bad call simply produced an error result).
bool context_modifying_name(std::string_view tool_name) noexcept;

// Wire view of the conversation: rendered content, tool metadata preserved.
std::vector<Message> wire_messages(const ConversationState& state);

}  // namespace acm
