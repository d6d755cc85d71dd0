#include "acm/tools.hpp"

#include <cassert>
#include <sstream>

#include "acm/text.hpp"

namespace acm {
namespace {

constexpr std::string_view kSummaryMarker = "Summary:\n";

Fragment& find_fragment(ConversationState& state, const std::string& id) {
  auto it = state.fragments.find(id);
  if (it == state.fragments.end()) {
    throw Error(ErrorCode::fragment_not_found,
                "no fragment with id '" + id + "'");
  }
  return it->second;
}

ToolResult ok_result(std::string payload) {
  ToolResult result;
  result.status = ToolResult::Status::ok;
  result.payload = std::move(payload);
  return result;
}

// Fragment id enclosing a scalar offset, when that fragment is not active.
std::string enclosing_hidden_fragment(const ConversationState& state,
                                      std::size_t message_index,
                                      std::size_t offset) {
  for (const auto& [id, frag] : state.fragments) {
    if (frag.message_index == message_index && frag.span.contains(offset) &&
        frag.state != FragmentState::active) {
      return id;
    }
  }
  return {};
}

}  // namespace

ToolOutcome fragment_context(ConversationState state,
                             std::string_view start_marker,
                             std::string_view end_marker, int num_fragments,
                             RoleFilter role) {
  if (num_fragments < 1 || num_fragments > 20) {
    throw Error(ErrorCode::schema_violation,
                "num_fragments must be between 1 and 20, got " +
                    std::to_string(num_fragments));
  }
  const Location loc = locate_span(state, start_marker, end_marker, role);
  for (const auto& [id, frag] : state.fragments) {
    if (frag.message_index == loc.message_index &&
        frag.span.overlaps(loc.span)) {
      throw Error(ErrorCode::overlap_rejected,
                  "span [" + std::to_string(loc.span.begin) + ", " +
                      std::to_string(loc.span.end) +
                      ") overlaps existing fragment '" + id + "'");
    }
  }

  const Message& msg = state.messages.at(loc.message_index);
  const std::size_t span_len = loc.span.length();
  // Near-equal partition; the remainder goes one char each to the leading
  // fragments. Spans shorter than the requested count yield one fragment per
  // char rather than empty fragments.
  const std::size_t count =
      std::min<std::size_t>(static_cast<std::size_t>(num_fragments), span_len);
  const std::size_t base = span_len / count;
  const std::size_t rem = span_len % count;

  std::ostringstream payload;
  payload << "Created " << count << " fragment(s) in message "
          << loc.message_index << " covering chars [" << loc.span.begin << ", "
          << loc.span.end << ")";
  if (count != static_cast<std::size_t>(num_fragments)) {
    payload << " (requested " << num_fragments << ", span has only "
            << span_len << " chars)";
  }
  payload << ":";

  std::size_t cursor = loc.span.begin;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = base + (i < rem ? 1 : 0);
    Fragment frag;
    frag.id = fresh_fragment_id(state);
    frag.message_index = loc.message_index;
    frag.span = Span{cursor, cursor + len};
    frag.state = FragmentState::active;
    frag.original_content = cp_substr(msg.content, cursor, len);
    frag.display_content = frag.original_content;
    payload << "\n[" << frag.id << "] chars [" << frag.span.begin << ", "
            << frag.span.end << ") (" << len << " chars)";
    cursor += len;
    state.fragments.emplace(frag.id, std::move(frag));
  }
  return {std::move(state), ok_result(payload.str())};
}

ToolOutcome fold_fragment(ConversationState state,
                          const std::string& fragment_id) {
  Fragment& frag = find_fragment(state, fragment_id);
  const std::size_t hidden = cp_count(frag.original_content);
  if (frag.state == FragmentState::folded) {
    return {std::move(state),
            ok_result("Fragment " + fragment_id + " is already folded (" +
                      std::to_string(hidden) + " chars hidden).")};
  }
  frag.state = FragmentState::folded;
  frag.display_content = folded_marker(fragment_id, hidden);
  frag.focus.clear();
  return {std::move(state),
          ok_result("Folded fragment " + fragment_id + " (" +
                    std::to_string(hidden) + " chars hidden).")};
}

ToolOutcome restore_fragment(ConversationState state,
                             const std::string& fragment_id) {
  Fragment& frag = find_fragment(state, fragment_id);
  const bool was_active = frag.state == FragmentState::active;
  frag.state = FragmentState::active;
  frag.display_content = frag.original_content;
  frag.focus.clear();
  const std::string length =
      std::to_string(cp_count(frag.original_content));
  if (was_active) {
    return {std::move(state),
            ok_result("Fragment " + fragment_id + " is already active (" +
                      length + " chars).")};
  }
  return {std::move(state),
          ok_result("Restored fragment " + fragment_id +
                    " to its original content (" + length + " chars).")};
}

ToolOutcome summarize_fragment(ConversationState state,
                               const std::string& fragment_id,
                               const std::string& focus,
                               const Summarizer& summarizer) {
  if (focus.empty()) {
    throw Error(ErrorCode::schema_violation, "focus must be non-empty");
  }
  if (!summarizer) {
    throw Error(ErrorCode::summarizer_error, "no summarizer configured");
  }
  Fragment& frag = find_fragment(state, fragment_id);
  std::string summary;
  try {
    summary = summarizer(frag.original_content, focus);
  } catch (const std::exception& e) {
    // Fragment left exactly as it was.
    throw Error(ErrorCode::summarizer_error, e.what());
  }
  frag.state = FragmentState::summarized;
  frag.display_content = summary;
  frag.focus = focus;
  return {std::move(state),
          ok_result("Summarized fragment " + fragment_id + " (focus: " +
                    focus + "). " + std::string(kSummaryMarker) + summary)};
}

ToolOutcome search_context(ConversationState state, const std::string& query,
                           RoleFilter role, int max_results,
                           int context_size) {
  if (query.empty()) {
    throw Error(ErrorCode::schema_violation, "query must be non-empty");
  }
  if (max_results < 1 || max_results > 50) {
    throw Error(ErrorCode::schema_violation,
                "max_results must be between 1 and 50, got " +
                    std::to_string(max_results));
  }
  if (context_size < 50 || context_size > 1000) {
    throw Error(ErrorCode::schema_violation,
                "context_size must be between 50 and 1000, got " +
                    std::to_string(context_size));
  }

  // Scans original contents, so matches hidden behind folds or summaries are
  // still discoverable; such hits carry the enclosing fragment id.
  const std::size_t query_len = cp_count(query);
  std::vector<SearchHit> hits;
  for (const Message& msg : state.messages) {
    if (hits.size() >= static_cast<std::size_t>(max_results)) break;
    if (!role_matches(role, msg.role)) continue;
    std::size_t offset = cp_find(msg.content, query);
    while (offset != text_npos &&
           hits.size() < static_cast<std::size_t>(max_results)) {
      SearchHit hit;
      hit.message_index = msg.index;
      hit.match_offset = offset;
      hit.query = query;
      const std::size_t lo =
          offset >= static_cast<std::size_t>(context_size)
              ? offset - static_cast<std::size_t>(context_size)
              : 0;
      const std::size_t hi = offset + query_len +
                             static_cast<std::size_t>(context_size);
      hit.snippet = cp_substr(msg.content, lo, hi - lo);
      hit.inside_fragment =
          enclosing_hidden_fragment(state, msg.index, offset);
      hits.push_back(std::move(hit));
      offset = cp_find(msg.content, query, offset + 1);
    }
  }

  std::ostringstream payload;
  payload << "Found " << hits.size() << " match(es) for \"" << query << "\"";
  payload << (hits.empty() ? "." : ":");
  for (SearchHit& hit : hits) {
    hit.id = fresh_search_id(state);
    payload << "\n[" << hit.id << "] message " << hit.message_index << " ("
            << role_name(state.messages.at(hit.message_index).role)
            << ") offset " << hit.match_offset;
    if (!hit.inside_fragment.empty()) {
      payload << " (inside " << fragment_state_name(
                     state.fragments.at(hit.inside_fragment).state)
              << " fragment " << hit.inside_fragment << ")";
    }
    payload << ": " << hit.snippet;
    state.search_results.emplace(hit.id, hit);
  }
  return {std::move(state), ok_result(payload.str())};
}

ToolResult get_search_detail(const ConversationState& state,
                             const std::string& search_id,
                             int extended_context) {
  if (extended_context < 100 || extended_context > 2000) {
    throw Error(ErrorCode::schema_violation,
                "extended_context must be between 100 and 2000, got " +
                    std::to_string(extended_context));
  }
  auto it = state.search_results.find(search_id);
  if (it == state.search_results.end()) {
    throw Error(ErrorCode::search_id_not_found,
                "no search result with id '" + search_id + "'");
  }
  const SearchHit& hit = it->second;
  const Message& msg = state.messages.at(hit.message_index);
  const std::size_t ec = static_cast<std::size_t>(extended_context);
  const std::size_t lo = hit.match_offset >= ec ? hit.match_offset - ec : 0;
  const std::size_t hi = hit.match_offset + cp_count(hit.query) + ec;
  return ok_result("Detail for " + search_id + " (message " +
                   std::to_string(hit.message_index) + ", offset " +
                   std::to_string(hit.match_offset) + "):\n" +
                   cp_substr(msg.content, lo, hi - lo));
}

ToolOutcome dispatch(ConversationState state, const ToolCall& call,
                     const Summarizer& summarizer) {
#ifndef NDEBUG
  const std::size_t message_count = state.messages.size();
#endif
  auto error_result = [&call](const std::string& text) {
    ToolResult result;
    result.tool_call_id = call.id;
    result.status = ToolResult::Status::error;
    result.payload = text;
    return result;
  };

  if (!is_known_tool(call.name)) {
    return {std::move(state),
            error_result("UnknownTool: unknown tool '" + call.name + "'")};
  }
  if (call.arguments_malformed) {
    return {std::move(state),
            error_result("GatewayError(malformed): tool call arguments are "
                         "not valid JSON: " +
                         call.raw_arguments)};
  }

  try {
    // Operations receive a copy so that a thrown Error leaves `state` intact
    // for the error path below.
    const Json args = validate_tool_arguments(call.name, call.arguments);
    ToolOutcome outcome;
    if (call.name == "fragment_context") {
      outcome = fragment_context(
          state, args.at("start_marker").get<std::string>(),
          args.at("end_marker").get<std::string>(),
          args.at("num_fragments").get<int>(),
          role_filter_from_name(args.at("role").get<std::string>()));
    } else if (call.name == "fold_fragment") {
      outcome = fold_fragment(state, args.at("fragment_id").get<std::string>());
    } else if (call.name == "restore_fragment") {
      outcome =
          restore_fragment(state, args.at("fragment_id").get<std::string>());
    } else if (call.name == "summarize_fragment") {
      outcome = summarize_fragment(state,
                                   args.at("fragment_id").get<std::string>(),
                                   args.at("focus").get<std::string>(),
                                   summarizer);
    } else if (call.name == "search_context") {
      outcome = search_context(
          state, args.at("query").get<std::string>(),
          role_filter_from_name(args.at("role").get<std::string>()),
          args.at("max_results").get<int>(), args.at("context_size").get<int>());
    } else {
      ToolResult result = get_search_detail(
          state, args.at("search_id").get<std::string>(),
          args.at("extended_context").get<int>());
      outcome = {std::move(state), std::move(result)};
    }
    outcome.result.tool_call_id = call.id;
#ifndef NDEBUG
    assert(outcome.state.messages.size() == message_count &&
           "tool operations must never change the message list");
#endif
    return outcome;
  } catch (const Error& e) {
    return {std::move(state), error_result(e.what())};
  }
}

std::string summary_from_payload(const std::string& payload) {
  const std::size_t pos = payload.find(kSummaryMarker);
  if (pos == std::string::npos) return {};
  return payload.substr(pos + kSummaryMarker.size());
}

}  // namespace acm
