#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "acm/conversation.hpp"
#include "acm/tool_schemas.hpp"

namespace acm {

// Produces the display text for a summarized fragment. Implementations may
// call out to a model; throwing any exception maps to SummarizerError and
// leaves the fragment untouched.
using Summarizer =
    std::function<std::string(const std::string& original,
                              const std::string& focus)>;

struct ToolOutcome {
  ConversationState state;
  ToolResult result;
};

// The six tool operations. Each is a pure function of (state, arguments,
// seed state); failures are thrown as acm::Error and never mutate the input.

ToolOutcome fragment_context(ConversationState state,
                             std::string_view start_marker,
                             std::string_view end_marker,
                             int num_fragments = 5,
                             RoleFilter role = RoleFilter::user);

ToolOutcome fold_fragment(ConversationState state,
                          const std::string& fragment_id);

ToolOutcome restore_fragment(ConversationState state,
                             const std::string& fragment_id);

ToolOutcome summarize_fragment(ConversationState state,
                               const std::string& fragment_id,
                               const std::string& focus,
                               const Summarizer& summarizer);

ToolOutcome search_context(ConversationState state, const std::string& query,
                           RoleFilter role = RoleFilter::user,
                           int max_results = 10, int context_size = 200);

// Read-only: does not touch the state at all.
ToolResult get_search_detail(const ConversationState& state,
                             const std::string& search_id,
                             int extended_context = 500);

// Validates call.arguments against the tool's schema, invokes the matching
// operation, and converts every failure into a status=error ToolResult so the
// calling model can self-correct. Never throws for bad calls.
ToolOutcome dispatch(ConversationState state, const ToolCall& call,
                     const Summarizer& summarizer);

// Summary text embedded in a summarize_fragment result payload, used when
// replaying recorded trajectories.
std::string summary_from_payload(const std::string& payload);

}  // namespace acm
