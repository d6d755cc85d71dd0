#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "acm/error.hpp"
#include "acm/message.hpp"

namespace acm {

// Half-open range in Unicode scalar offsets within a message's original
// content.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  bool contains(std::size_t offset) const {
    return offset >= begin && offset < end;
  }
};

enum class FragmentState { active, folded, summarized };

std::string_view fragment_state_name(FragmentState state);
FragmentState fragment_state_from_name(std::string_view name);

struct Fragment {
  std::string id;  // 6 chars, 'f' + 5 of [a-z0-9]
  std::size_t message_index = 0;
  Span span;
  FragmentState state = FragmentState::active;
  std::string original_content;  // immutable after creation
  std::string display_content;   // == original_content while active
  std::string focus;             // set while summarized
};

struct SearchHit {
  std::string id;  // 6 chars, 's' + 5 of [a-z0-9]
  std::size_t message_index = 0;
  std::size_t match_offset = 0;  // scalar offset in original content
  std::string query;
  std::string snippet;
  std::string inside_fragment;  // fragment id when the hit sits in a
                                // folded/summarized fragment
};

// Deterministic id source. Seedable so that trajectories replay exactly;
// fragment and search ids draw from independent streams.
struct IdStream {
  std::uint64_t state = 0;

  // prefix + 5 chars of [a-z0-9]
  std::string next(char prefix);
};

struct ConversationState {
  std::vector<Message> messages;
  std::map<std::string, Fragment> fragments;
  std::map<std::string, SearchHit> search_results;
  IdStream fragment_ids;
  IdStream search_ids;

  static ConversationState with_seed(std::uint64_t seed);
};

struct RenderedMessage {
  Role role = Role::user;
  std::string text;
};

enum class RoleFilter { user, assistant, all };

std::string_view role_filter_name(RoleFilter filter);
RoleFilter role_filter_from_name(std::string_view name);
bool role_matches(RoleFilter filter, Role role);

// Appends msg, which must carry index == current message count. Tool messages
// must reference a tool call issued by an earlier assistant message.
ConversationState append_message(ConversationState state, Message msg);

// Current view of one message: original content with every fragment span
// replaced by its display content. Spliced right to left so stored offsets
// stay valid.
std::string render_message(const ConversationState& state,
                           std::size_t message_index);

std::vector<RenderedMessage> render_context(const ConversationState& state);

struct Location {
  std::size_t message_index = 0;
  Span span;
};

// First occurrence of start_marker across messages passing the role filter,
// then the first occurrence of end_marker at or after it in the same message.
// The span runs from the start of start_marker through the end of end_marker.
Location locate_span(const ConversationState& state,
                     std::string_view start_marker,
                     std::string_view end_marker, RoleFilter role);

std::string folded_marker(const std::string& fragment_id,
                          std::size_t hidden_chars);

// Fresh ids guaranteed unique against the respective registry.
std::string fresh_fragment_id(ConversationState& state);
std::string fresh_search_id(ConversationState& state);

}  // namespace acm
