#include <doctest.h>

#include <random>

#include "acm/gateway.hpp"
#include "acm/serialize.hpp"
#include "acm/text.hpp"
#include "acm/tools.hpp"

using namespace acm;

namespace {

Message make_msg(std::size_t index, Role role, std::string content) {
  Message msg;
  msg.index = index;
  msg.role = role;
  msg.content = std::move(content);
  return msg;
}

ConversationState single_user(std::string content, std::uint64_t seed = 5) {
  ConversationState state = ConversationState::with_seed(seed);
  return append_message(std::move(state),
                        make_msg(0, Role::user, std::move(content)));
}

std::vector<std::string> fragment_ids_in_span_order(
    const ConversationState& state) {
  std::vector<const Fragment*> frags;
  for (const auto& [id, frag] : state.fragments) frags.push_back(&frag);
  std::sort(frags.begin(), frags.end(),
            [](const Fragment* a, const Fragment* b) {
              return a->span.begin < b->span.begin;
            });
  std::vector<std::string> ids;
  for (const Fragment* frag : frags) ids.push_back(frag->id);
  return ids;
}

ToolCall make_call(const std::string& name, Json arguments,
                   const std::string& id = "call_t") {
  ToolCall call;
  call.id = id;
  call.name = name;
  call.arguments = std::move(arguments);
  return call;
}

// Brute-force scan: every scalar position of every matching message, in
// message then offset order, truncated to max_results.
struct OracleHit {
  std::size_t message_index;
  std::size_t offset;
};

std::vector<OracleHit> search_oracle(const ConversationState& state,
                                     const std::string& query,
                                     RoleFilter filter, std::size_t max) {
  std::vector<OracleHit> hits;
  for (const Message& msg : state.messages) {
    if (hits.size() >= max) break;
    if (!role_matches(filter, msg.role)) continue;
    std::vector<std::size_t> boundaries;
    for (std::size_t b = 0, n = cp_count(msg.content); b <= n; ++b) {
      boundaries.push_back(cp_to_byte(msg.content, b));
    }
    for (std::size_t i = 0; i + 1 <= boundaries.size() - 1; ++i) {
      if (hits.size() >= max) break;
      if (msg.content.compare(boundaries[i], query.size(), query) == 0) {
        hits.push_back({msg.index, i});
      }
    }
  }
  return hits;
}

std::string rendered_blob(const ConversationState& state) {
  std::string out;
  for (const RenderedMessage& msg : render_context(state)) {
    out += std::string(role_name(msg.role)) + "\x01" + msg.text + "\x02";
  }
  return out;
}

std::vector<OracleHit> hits_of(const ConversationState& state) {
  std::vector<const SearchHit*> ordered;
  for (const auto& [id, hit] : state.search_results) ordered.push_back(&hit);
  std::sort(ordered.begin(), ordered.end(),
            [](const SearchHit* a, const SearchHit* b) {
              if (a->message_index != b->message_index) {
                return a->message_index < b->message_index;
              }
              return a->match_offset < b->match_offset;
            });
  std::vector<OracleHit> out;
  for (const SearchHit* hit : ordered) {
    out.push_back({hit->message_index, hit->match_offset});
  }
  return out;
}

}  // namespace

TEST_CASE("fragment_context partitions a span near-equally") {
  ConversationState state = single_user(std::string(1200, 'x'));
  // span of exactly 1000 chars
  state.messages[0].content = "S" + std::string(998, 'x') + "E" +
                              std::string(200, 'y');
  auto [next, result] = fragment_context(state, "S", "E", 5);
  CHECK(result.ok());
  REQUIRE(next.fragments.size() == 5);

  // independent partition oracle: leading remainder rule over the span
  const std::size_t span_len = 1000;
  const std::size_t base = span_len / 5;
  const std::size_t rem = span_len % 5;
  std::vector<std::size_t> expected_sizes;
  for (std::size_t i = 0; i < 5; ++i) expected_sizes.push_back(base + (i < rem));

  const auto ids = fragment_ids_in_span_order(next);
  std::size_t cursor = 0;
  std::string concat;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Fragment& frag = next.fragments.at(ids[i]);
    CHECK(frag.span.length() == expected_sizes[i]);
    CHECK(frag.span.begin == cursor);
    CHECK(frag.state == FragmentState::active);
    CHECK(frag.display_content == frag.original_content);
    cursor = frag.span.end;
    concat += frag.original_content;
  }
  CHECK(concat == cp_substr(next.messages[0].content, 0, 1000));
  for (std::size_t i = 0; i < 5; ++i) CHECK(expected_sizes[i] == 200);
}

TEST_CASE("fragment_context distributes the remainder to leading pieces") {
  ConversationState state = single_user("abcdefg tail");
  auto [next, result] = fragment_context(state, "a", "g", 3);
  const auto ids = fragment_ids_in_span_order(next);
  REQUIRE(ids.size() == 3);
  CHECK(next.fragments.at(ids[0]).span.length() == 3);
  CHECK(next.fragments.at(ids[1]).span.length() == 2);
  CHECK(next.fragments.at(ids[2]).span.length() == 2);
  CHECK(next.fragments.at(ids[0]).original_content == "abc");
  CHECK(next.fragments.at(ids[1]).original_content == "de");
  CHECK(next.fragments.at(ids[2]).original_content == "fg");
}

TEST_CASE("fragment_context with one fragment covers the whole span") {
  ConversationState state = single_user("alpha MIDDLE omega");
  auto [next, result] = fragment_context(state, "alpha", "omega", 1);
  REQUIRE(next.fragments.size() == 1);
  const Fragment& frag = next.fragments.begin()->second;
  CHECK(frag.original_content == "alpha MIDDLE omega");
}

TEST_CASE("fragment_context caps the count at the span length") {
  ConversationState state = single_user("xyz padding padding");
  auto [next, result] = fragment_context(state, "x", "z", 5);
  CHECK(next.fragments.size() == 3);  // span "xyz" has only 3 chars
  CHECK(result.payload.find("requested 5") != std::string::npos);
}

TEST_CASE("fragment_context enforces bounds and overlap") {
  ConversationState state = single_user("one two three four five six");
  CHECK_THROWS_AS(fragment_context(state, "one", "six", 0), Error);
  CHECK_THROWS_AS(fragment_context(state, "one", "six", 21), Error);

  auto [with_frag, r1] = fragment_context(state, "two", "three", 1);
  try {
    fragment_context(with_frag, "one", "four", 2);
    FAIL("expected OverlapRejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::overlap_rejected);
  }
  // non-overlapping second fragment is fine
  CHECK_NOTHROW(fragment_context(with_frag, "five", "six", 1));
}

TEST_CASE("fold hides content behind the marker") {
  ConversationState state = single_user(std::string(100, 'a') +
                                        std::string(500, 'b') +
                                        std::string(100, 'c'));
  auto [frag_state, r1] =
      fragment_context(state, std::string(1, 'b'), std::string(500, 'b'), 1);
  const std::string id = frag_state.fragments.begin()->first;
  REQUIRE(frag_state.fragments.at(id).span.length() == 500);

  const std::string before = render_message(frag_state, 0);
  auto [folded, r2] = fold_fragment(frag_state, id);
  const std::string after = render_message(folded, 0);

  // marker-length arithmetic
  const std::size_t marker_len = cp_count(folded_marker(id, 500));
  CHECK(cp_count(after) == cp_count(before) - 500 + marker_len);
  CHECK(after == std::string(100, 'a') + folded_marker(id, 500) +
                     std::string(100, 'c'));
  CHECK(folded.fragments.at(id).original_content == std::string(500, 'b'));

  SUBCASE("fold is idempotent") {
    auto [again, r3] = fold_fragment(folded, id);
    CHECK(r3.ok());
    CHECK(state_sidecar_to_json(again) == state_sidecar_to_json(folded));
    CHECK(render_message(again, 0) == after);
  }
}

TEST_CASE("fold of an unknown id fails") {
  ConversationState state = single_user("text");
  try {
    fold_fragment(state, "fnopes");
    FAIL("expected FragmentNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::fragment_not_found);
  }
}

TEST_CASE("restore reverses fold and summarize") {
  ConversationState state = single_user("intro 중요한 본문 내용 outro");
  auto [frag_state, r1] = fragment_context(state, "중요한", "내용", 1);
  const std::string id = frag_state.fragments.begin()->first;
  const std::string baseline = render_message(frag_state, 0);

  SUBCASE("folded then restored") {
    auto [folded, r2] = fold_fragment(frag_state, id);
    CHECK(render_message(folded, 0) != baseline);
    auto [restored, r3] = restore_fragment(folded, id);
    CHECK(render_message(restored, 0) == baseline);
    CHECK(restored.fragments.at(id).state == FragmentState::active);
  }

  SUBCASE("summarized then restored, focus cleared") {
    auto [summarized, r2] = summarize_fragment(
        frag_state, id, "key decisions", make_scripted_summarizer());
    CHECK(summarized.fragments.at(id).focus == "key decisions");
    auto [restored, r3] = restore_fragment(summarized, id);
    CHECK(render_message(restored, 0) == baseline);
    CHECK(restored.fragments.at(id).focus.empty());
  }

  SUBCASE("restore of an active fragment is a no-op success") {
    auto [restored, r2] = restore_fragment(frag_state, id);
    CHECK(r2.ok());
    CHECK(render_message(restored, 0) == baseline);
  }
}

TEST_CASE("summarize uses the injected summarizer") {
  ConversationState state = single_user("before BODY TEXT after");
  auto [frag_state, r1] = fragment_context(state, "BODY", "TEXT", 1);
  const std::string id = frag_state.fragments.begin()->first;

  Summarizer scripted = [](const std::string&, const std::string& focus) {
    return "SUM(" + focus + ")";
  };
  auto [summarized, r2] =
      summarize_fragment(frag_state, id, "key decisions", scripted);
  CHECK(summarized.fragments.at(id).display_content == "SUM(key decisions)");
  CHECK(summarized.fragments.at(id).state == FragmentState::summarized);
  CHECK(render_message(summarized, 0) == "before SUM(key decisions) after");
  CHECK(summary_from_payload(r2.payload) == "SUM(key decisions)");
}

TEST_CASE("summarizer failure leaves the fragment unchanged") {
  ConversationState state = single_user("before BODY TEXT after");
  auto [frag_state, r1] = fragment_context(state, "BODY", "TEXT", 1);
  const std::string id = frag_state.fragments.begin()->first;
  Summarizer broken = [](const std::string&, const std::string&) -> std::string {
    throw std::runtime_error("model unavailable");
  };
  try {
    summarize_fragment(frag_state, id, "anything", broken);
    FAIL("expected SummarizerError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::summarizer_error);
  }
  CHECK(frag_state.fragments.at(id).state == FragmentState::active);
  CHECK_THROWS_AS(
      summarize_fragment(frag_state, id, "", make_scripted_summarizer()),
      Error);
}

TEST_CASE("search finds nothing gracefully") {
  ConversationState state = single_user("nothing to see here");
  auto [next, result] = search_context(state, "ghost");
  CHECK(result.ok());
  CHECK(next.search_results.empty());
  CHECK(result.payload == "Found 0 match(es) for \"ghost\".");
}

TEST_CASE("search caps at max_results, earliest first") {
  std::string content;
  for (int i = 0; i < 60; ++i) content += "tok filler ";
  ConversationState state = single_user(content);
  auto [next, result] = search_context(state, "tok", RoleFilter::user, 50, 50);
  CHECK(next.search_results.size() == 50);
  const auto got = hits_of(next);
  const auto expected = search_oracle(next, "tok", RoleFilter::user, 50);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].message_index == expected[i].message_index);
    CHECK(got[i].offset == expected[i].offset);
  }
  CHECK(got.front().offset == 0);
}

TEST_CASE("search matches the brute-force oracle on random states") {
  std::mt19937_64 rng(1234);
  const std::string pool = "ab needle 中文 xyéz ";
  for (int round = 0; round < 200; ++round) {
    ConversationState state = ConversationState::with_seed(round);
    const std::size_t msg_count = 1 + rng() % 5;
    for (std::size_t m = 0; m < msg_count; ++m) {
      std::string content;
      const std::size_t target = 20 + rng() % 400;
      while (cp_count(content) < target) {
        content += cp_substr(pool, rng() % cp_count(pool), 1 + rng() % 6);
      }
      const Role role = rng() % 2 == 0 ? Role::user : Role::assistant;
      state = append_message(std::move(state), make_msg(m, role, content));
    }
    const std::string queries[] = {"needle", "ab", "中文", "é", "zz qq"};
    const std::string& query = queries[rng() % 5];
    const RoleFilter filter = static_cast<RoleFilter>(rng() % 3);
    const int max_results = 1 + static_cast<int>(rng() % 50);

    auto [next, result] =
        search_context(state, query, filter, max_results, 50);
    const auto got = hits_of(next);
    const auto expected = search_oracle(state, query, filter,
                                        static_cast<std::size_t>(max_results));
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].message_index == expected[i].message_index);
      CHECK(got[i].offset == expected[i].offset);
    }
  }
}

TEST_CASE("search scans original content and tags hidden hits") {
  ConversationState state = single_user("prefix SECRET WORD suffix");
  auto [frag_state, r1] = fragment_context(state, "SECRET", "WORD", 1);
  const std::string id = frag_state.fragments.begin()->first;
  auto [folded, r2] = fold_fragment(frag_state, id);
  CHECK(render_message(folded, 0).find("SECRET") == std::string::npos);

  auto [searched, r3] = search_context(folded, "SECRET");
  REQUIRE(searched.search_results.size() == 1);
  const SearchHit& hit = searched.search_results.begin()->second;
  CHECK(hit.inside_fragment == id);
  CHECK(hit.snippet.find("SECRET") != std::string::npos);
  CHECK(r3.payload.find("inside folded fragment " + id) != std::string::npos);

  // message list and fragments untouched by the read-only pair
  CHECK(searched.messages.size() == folded.messages.size());
  CHECK(state_sidecar_to_json(searched)["fragments"] ==
        state_sidecar_to_json(folded)["fragments"]);
}

TEST_CASE("search snippets clamp at message bounds") {
  ConversationState state = single_user("hit at the very start of it all");
  auto [next, result] = search_context(state, "hit", RoleFilter::user, 10, 50);
  REQUIRE(next.search_results.size() == 1);
  const SearchHit& hit = next.search_results.begin()->second;
  CHECK(hit.match_offset == 0);
  CHECK(hit.snippet == "hit at the very start of it all");
}

TEST_CASE("search validates bounds") {
  ConversationState state = single_user("text");
  CHECK_THROWS_AS(search_context(state, ""), Error);
  CHECK_THROWS_AS(search_context(state, "t", RoleFilter::user, 0, 200), Error);
  CHECK_THROWS_AS(search_context(state, "t", RoleFilter::user, 51, 200), Error);
  CHECK_THROWS_AS(search_context(state, "t", RoleFilter::user, 10, 49), Error);
  CHECK_THROWS_AS(search_context(state, "t", RoleFilter::user, 10, 1001), Error);
}

TEST_CASE("get_search_detail slices original content around the hit") {
  const std::string content = std::string(400, 'L') + "needle" +
                              std::string(400, 'R');
  ConversationState state = single_user(content);
  auto [searched, r1] = search_context(state, "needle");
  const std::string sid = searched.search_results.begin()->first;

  const ToolResult detail = get_search_detail(searched, sid, 100);
  // slicing oracle over original content
  const std::size_t off = 400;
  const std::string expected =
      cp_substr(content, off - 100, 100 + 6 + 100);
  CHECK(detail.payload.find(expected) != std::string::npos);

  SUBCASE("boundary clamps") {
    ConversationState tiny = single_user("needle tail");
    auto [s2, r2] = search_context(tiny, "needle");
    const std::string sid2 = s2.search_results.begin()->first;
    const ToolResult d2 = get_search_detail(s2, sid2, 2000);
    CHECK(d2.payload.find("needle tail") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(get_search_detail(searched, "s12345", 500), Error);
    CHECK_THROWS_AS(get_search_detail(searched, sid, 99), Error);
    CHECK_THROWS_AS(get_search_detail(searched, sid, 2001), Error);
  }
}

TEST_CASE("dispatch validates and never throws for bad calls") {
  ConversationState state = single_user("some text to work with");
  const Summarizer summarizer = make_scripted_summarizer();

  SUBCASE("extra property rejected") {
    auto [next, result] = dispatch(
        state, make_call("fold_fragment", Json{{"fragment_id", "fabc12"}, {"x", 1}}),
        summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("SchemaViolation") != std::string::npos);
    CHECK(result.payload.find("'x'") != std::string::npos);
  }
  SUBCASE("valid search succeeds with defaults applied") {
    auto [next, result] =
        dispatch(state, make_call("search_context", Json{{"query", "text"}}),
                 summarizer);
    CHECK(result.ok());
    CHECK(next.search_results.size() == 1);
  }
  SUBCASE("summarize before any fragment exists") {
    auto [next, result] = dispatch(
        state,
        make_call("summarize_fragment",
                  Json{{"fragment_id", "f1a2b3"}, {"focus", "main points"}}),
        summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("FragmentNotFound") != std::string::npos);
    CHECK(state_sidecar_to_json(next) == state_sidecar_to_json(state));
  }
  SUBCASE("unknown tool") {
    auto [next, result] =
        dispatch(state, make_call("do_magic", Json::object()), summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("unknown tool") != std::string::npos);
  }
  SUBCASE("missing required argument") {
    auto [next, result] = dispatch(
        state, make_call("summarize_fragment", Json{{"fragment_id", "fabc12"}}),
        summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("focus") != std::string::npos);
  }
  SUBCASE("malformed arguments surface the gateway category") {
    ToolCall call;
    call.id = "call_бад";
    call.name = "fold_fragment";
    call.raw_arguments = "{not json";
    call.arguments_malformed = true;
    auto [next, result] = dispatch(state, call, summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("GatewayError(malformed)") != std::string::npos);
  }
  SUBCASE("wrong argument type") {
    auto [next, result] = dispatch(
        state,
        make_call("search_context", Json{{"query", "x"}, {"max_results", "9"}}),
        summarizer);
    CHECK_FALSE(result.ok());
    CHECK(result.payload.find("integer") != std::string::npos);
  }
  SUBCASE("result carries the call id") {
    auto [next, result] =
        dispatch(state, make_call("search_context", Json{{"query", "q"}}, "call_77"),
                 summarizer);
    CHECK(result.tool_call_id == "call_77");
  }
}

TEST_CASE("tools are deterministic under a fixed seed") {
  auto run_once = [](std::uint64_t seed) {
    ConversationState state = single_user("alpha beta gamma delta", seed);
    auto [s1, r1] = fragment_context(state, "alpha", "delta", 4);
    const auto ids = fragment_ids_in_span_order(s1);
    auto [s2, r2] = fold_fragment(s1, ids[0]);
    auto [s3, r3] = search_context(s2, "beta");
    return state_sidecar_to_json(s3).dump() + r1.payload + r2.payload +
           r3.payload;
  };
  CHECK(run_once(77) == run_once(77));
  CHECK(run_once(77) != run_once(78));
}

TEST_CASE("random tool sequences preserve structure and reverse cleanly") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 50; ++round) {
    ConversationState state = ConversationState::with_seed(round * 31 + 1);
    const std::size_t msg_count = 1 + rng() % 4;
    for (std::size_t m = 0; m < msg_count; ++m) {
      std::string content;
      for (std::size_t w = 0; w < 30 + rng() % 120; ++w) {
        content += "w" + std::to_string(rng() % 97) + " ";
      }
      state = append_message(std::move(state),
                             make_msg(m, Role::user, content));
    }
    const std::string baseline =
        rendered_blob(state);
    // op sequence
    for (int op = 0; op < 10; ++op) {
      const ConversationState before = state;
      try {
        switch (rng() % 4) {
          case 0: {
            const Message& msg = state.messages[rng() % state.messages.size()];
            const std::size_t len = cp_count(msg.content);
            const std::size_t a = rng() % (len / 2);
            const std::size_t b = len / 2 + rng() % (len / 2 - 1);
            auto out = fragment_context(state, cp_substr(msg.content, a, 3),
                                        cp_substr(msg.content, b, 3),
                                        1 + rng() % 5);
            state = std::move(out.state);
            break;
          }
          case 1:
          case 2: {
            if (state.fragments.empty()) break;
            auto it = state.fragments.begin();
            std::advance(it, rng() % state.fragments.size());
            auto out = rng() % 2 == 0
                           ? fold_fragment(state, it->first)
                           : summarize_fragment(state, it->first, "gist",
                                                make_scripted_summarizer());
            state = std::move(out.state);
            break;
          }
          default: {
            if (state.fragments.empty()) break;
            auto it = state.fragments.begin();
            std::advance(it, rng() % state.fragments.size());
            auto out = restore_fragment(state, it->first);
            state = std::move(out.state);
            break;
          }
        }
      } catch (const Error&) {
        state = before;  // rejected op: state unchanged by contract
      }
      REQUIRE(state.messages.size() == msg_count);
      for (std::size_t m = 0; m < msg_count; ++m) {
        REQUIRE(state.messages[m].index == m);
      }
    }
    // restore everything, in registry order
    std::vector<std::string> ids;
    for (const auto& [id, frag] : state.fragments) ids.push_back(id);
    for (const std::string& id : ids) {
      state = restore_fragment(state, id).state;
    }
    CHECK(rendered_blob(state) == baseline);
  }
}
