#include "acm/conversation.hpp"

#include <algorithm>

#include "acm/text.hpp"

namespace acm {
namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr char kIdAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::structural_error: return "StructuralError";
    case ErrorCode::marker_not_found: return "MarkerNotFound";
    case ErrorCode::cross_message_span: return "CrossMessageSpan";
    case ErrorCode::overlap_rejected: return "OverlapRejected";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::fragment_not_found: return "FragmentNotFound";
    case ErrorCode::summarizer_error: return "SummarizerError";
    case ErrorCode::search_id_not_found: return "SearchIdNotFound";
    case ErrorCode::unknown_tool: return "UnknownTool";
    case ErrorCode::size_error: return "SizeError";
    case ErrorCode::collect_error: return "CollectError";
  }
  return "Error";
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role role_from_name(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  if (name == "tool") return Role::tool;
  throw Error(ErrorCode::structural_error,
              "unknown message role '" + std::string(name) + "'");
}

std::string_view fragment_state_name(FragmentState state) {
  switch (state) {
    case FragmentState::active: return "active";
    case FragmentState::folded: return "folded";
    case FragmentState::summarized: return "summarized";
  }
  return "active";
}

FragmentState fragment_state_from_name(std::string_view name) {
  if (name == "active") return FragmentState::active;
  if (name == "folded") return FragmentState::folded;
  if (name == "summarized") return FragmentState::summarized;
  throw Error(ErrorCode::structural_error,
              "unknown fragment state '" + std::string(name) + "'");
}

std::string_view role_filter_name(RoleFilter filter) {
  switch (filter) {
    case RoleFilter::user: return "user";
    case RoleFilter::assistant: return "assistant";
    case RoleFilter::all: return "all";
  }
  return "user";
}

RoleFilter role_filter_from_name(std::string_view name) {
  if (name == "user") return RoleFilter::user;
  if (name == "assistant") return RoleFilter::assistant;
  if (name == "all") return RoleFilter::all;
  throw Error(ErrorCode::schema_violation,
              "unknown role filter '" + std::string(name) + "'");
}

bool role_matches(RoleFilter filter, Role role) {
  switch (filter) {
    case RoleFilter::user: return role == Role::user;
    case RoleFilter::assistant: return role == Role::assistant;
    case RoleFilter::all: return true;
  }
  return false;
}

std::string IdStream::next(char prefix) {
  std::uint64_t x = splitmix64(state);
  std::string id(1, prefix);
  for (int i = 0; i < 5; ++i) {
    id.push_back(kIdAlphabet[x % 36]);
    x /= 36;
  }
  return id;
}

ConversationState ConversationState::with_seed(std::uint64_t seed) {
  ConversationState state;
  state.fragment_ids.state = seed;
  state.search_ids.state = seed ^ 0xa5a5a5a5a5a5a5a5ull;
  return state;
}

std::string fresh_fragment_id(ConversationState& state) {
  std::string id;
  do {
    id = state.fragment_ids.next('f');
  } while (state.fragments.count(id) != 0);
  return id;
}

std::string fresh_search_id(ConversationState& state) {
  std::string id;
  do {
    id = state.search_ids.next('s');
  } while (state.search_results.count(id) != 0);
  return id;
}

ConversationState append_message(ConversationState state, Message msg) {
  if (msg.index != state.messages.size()) {
    throw Error(ErrorCode::structural_error,
                "message index " + std::to_string(msg.index) +
                    " does not extend a conversation of " +
                    std::to_string(state.messages.size()) + " message(s)");
  }
  if (!msg.tool_calls.empty() && msg.role != Role::assistant) {
    throw Error(ErrorCode::structural_error,
                "tool_calls are only valid on assistant messages");
  }
  if (msg.role == Role::tool) {
    if (msg.tool_call_id.empty()) {
      throw Error(ErrorCode::structural_error,
                  "tool message carries no tool_call_id");
    }
    bool known = false;
    for (const Message& m : state.messages) {
      for (const ToolCall& call : m.tool_calls) {
        if (call.id == msg.tool_call_id) {
          known = true;
          break;
        }
      }
      if (known) break;
    }
    if (!known) {
      throw Error(ErrorCode::structural_error,
                  "tool message references unknown tool_call_id '" +
                      msg.tool_call_id + "'");
    }
  }
  state.messages.push_back(std::move(msg));
  return state;
}

std::string render_message(const ConversationState& state,
                           std::size_t message_index) {
  const Message& msg = state.messages.at(message_index);
  std::vector<const Fragment*> frags;
  for (const auto& [id, frag] : state.fragments) {
    if (frag.message_index == message_index) frags.push_back(&frag);
  }
  std::sort(frags.begin(), frags.end(), [](const Fragment* a, const Fragment* b) {
    return a->span.begin > b->span.begin;
  });
  std::string out = msg.content;
  for (const Fragment* frag : frags) {
    // Byte offsets computed against the original text: splicing right to
    // left leaves every earlier prefix untouched.
    const std::size_t b0 = cp_to_byte(msg.content, frag->span.begin);
    const std::size_t b1 = cp_to_byte(msg.content, frag->span.end);
    out.replace(b0, b1 - b0, frag->display_content);
  }
  return out;
}

std::vector<RenderedMessage> render_context(const ConversationState& state) {
  std::vector<RenderedMessage> out;
  out.reserve(state.messages.size());
  for (const Message& msg : state.messages) {
    out.push_back({msg.role, render_message(state, msg.index)});
  }
  return out;
}

Location locate_span(const ConversationState& state,
                     std::string_view start_marker,
                     std::string_view end_marker, RoleFilter role) {
  if (start_marker.empty()) {
    throw Error(ErrorCode::schema_violation, "start_marker must be non-empty");
  }
  if (end_marker.empty()) {
    throw Error(ErrorCode::schema_violation, "end_marker must be non-empty");
  }
  for (const Message& msg : state.messages) {
    if (!role_matches(role, msg.role)) continue;
    const std::size_t start = cp_find(msg.content, start_marker);
    if (start == text_npos) continue;
    const std::size_t end = cp_find(msg.content, end_marker, start);
    if (end == text_npos) {
      for (const Message& other : state.messages) {
        if (other.index == msg.index || !role_matches(role, other.role)) {
          continue;
        }
        if (cp_find(other.content, end_marker) != text_npos) {
          throw Error(ErrorCode::cross_message_span,
                      "start_marker is in message " +
                          std::to_string(msg.index) + " but end_marker in " +
                          std::to_string(other.index) +
                          "; fragments cannot span messages");
        }
      }
      throw Error(ErrorCode::marker_not_found,
                  "end_marker \"" + std::string(end_marker) +
                      "\" not found after the start marker");
    }
    return {msg.index, Span{start, end + cp_count(end_marker)}};
  }
  throw Error(ErrorCode::marker_not_found,
              "start_marker \"" + std::string(start_marker) + "\" not found");
}

std::string folded_marker(const std::string& fragment_id,
                          std::size_t hidden_chars) {
  return "[FOLDED fragment " + fragment_id + ": " +
         std::to_string(hidden_chars) +
         " chars hidden — restore with restore_fragment]";
}

}  // namespace acm
