#include <doctest.h>

#include <cstdlib>

#include "acm/bench.hpp"
#include "acm/serialize.hpp"
#include "acm/tools.hpp"

using namespace acm;

namespace {

const std::string kGoldenDir = std::string(ACM_SOURCE_DIR) + "/tests/golden/";

Message make_msg(std::size_t index, Role role, std::string content) {
  Message msg;
  msg.index = index;
  msg.role = role;
  msg.content = std::move(content);
  return msg;
}

// A small deterministic state with one of everything.
ConversationState sample_state() {
  ConversationState state = ConversationState::with_seed(2025);
  state = append_message(std::move(state),
                         make_msg(0, Role::system, "be brief"));
  state = append_message(
      std::move(state),
      make_msg(1, Role::user, "alpha beta gamma delta epsilon zeta"));
  auto [s1, r1] = fragment_context(state, "beta", "delta", 2);
  auto ids = std::vector<std::string>{};
  for (const auto& [id, frag] : s1.fragments) ids.push_back(id);
  auto [s2, r2] = fold_fragment(s1, ids[0]);
  auto [s3, r3] = summarize_fragment(s2, ids[1], "gist",
                                     make_scripted_summarizer());
  auto [s4, r4] = search_context(s3, "epsilon");
  return s4;
}

std::string maybe_golden(const std::string& name, const std::string& generated) {
  const std::string path = kGoldenDir + name;
  if (std::getenv("ACM_REGEN_GOLDEN") != nullptr) write_file(path, generated);
  return read_file(path);
}

TrajectoryRecord scripted_record() {
  ConversationState state = ConversationState::with_seed(404);
  state = append_message(std::move(state), make_msg(0, Role::system, "terse"));
  state = append_message(
      std::move(state),
      make_msg(1, Role::user, "keep: alpha beta gamma delta"));
  auto [prepared, r0] = fragment_context(state, "alpha", "gamma", 1);
  const std::string frag_id = prepared.fragments.begin()->first;

  ScriptedBackend backend(
      {make_tool_call_response("call_1", "fold_fragment",
                               Json{{"fragment_id", frag_id}}),
       make_answer_response("folded")});
  RuntimeOptions options;
  options.summarizer = make_scripted_summarizer();
  Message ask;
  ask.role = Role::user;
  ask.content = "fold the middle";
  TurnOutput out = run_turn(prepared, ask, backend, options, "rollout-404");
  out.record.eval = TrajectoryEval{true, 1.0, 0.25};
  return out.record;
}

}  // namespace

TEST_CASE("messages round-trip with optional fields omitted when empty") {
  Message plain = make_msg(3, Role::user, "hello 中文");
  const Json j = message_to_json(plain);
  CHECK_FALSE(j.contains("tool_calls"));
  CHECK_FALSE(j.contains("tool_call_id"));
  const Message back = message_from_json(j);
  CHECK(back.index == 3);
  CHECK(back.role == Role::user);
  CHECK(back.content == "hello 中文");

  Message with_call = make_msg(4, Role::assistant, "");
  ToolCall call;
  call.id = "call_1";
  call.name = "search_context";
  call.arguments = Json{{"query", "x"}};
  with_call.tool_calls.push_back(call);
  const Message back2 = message_from_json(message_to_json(with_call));
  REQUIRE(back2.tool_calls.size() == 1);
  CHECK(back2.tool_calls[0].name == "search_context");
  CHECK(back2.tool_calls[0].arguments.at("query") == "x");

  Message malformed = make_msg(5, Role::assistant, "");
  ToolCall bad;
  bad.id = "call_2";
  bad.name = "fold_fragment";
  bad.raw_arguments = "{oops";
  bad.arguments_malformed = true;
  malformed.tool_calls.push_back(bad);
  const Message back3 = message_from_json(message_to_json(malformed));
  CHECK(back3.tool_calls[0].arguments_malformed);
  CHECK(back3.tool_calls[0].raw_arguments == "{oops");
}

TEST_CASE("conversation JSONL matches the golden file and round-trips") {
  std::vector<Message> messages;
  messages.push_back(make_msg(0, Role::system, "be brief"));
  messages.push_back(make_msg(1, Role::user, "fold the long part"));
  Message assistant = make_msg(2, Role::assistant, "on it");
  ToolCall call;
  call.id = "call_1";
  call.name = "fold_fragment";
  call.arguments = Json{{"fragment_id", "f1a2b3"}};
  assistant.tool_calls.push_back(call);
  messages.push_back(assistant);
  Message tool = make_msg(3, Role::tool, "Folded fragment f1a2b3 (9 chars hidden).");
  tool.tool_call_id = "call_1";
  messages.push_back(tool);

  const std::string jsonl = conversation_to_jsonl(messages);
  CHECK(jsonl == maybe_golden("conversation.jsonl", jsonl));

  const std::vector<Message> back = conversation_from_jsonl(jsonl);
  REQUIRE(back.size() == 4);
  CHECK(back[2].tool_calls.size() == 1);
  CHECK(back[3].tool_call_id == "call_1");
  CHECK(conversation_to_jsonl(back) == jsonl);
}

TEST_CASE("state sidecars restore fragments, hits and id streams") {
  const ConversationState state = sample_state();
  const Json sidecar = state_sidecar_to_json(state);
  const std::string dumped = sidecar.dump(2) + "\n";
  CHECK(dumped == maybe_golden("state_sidecar.json", dumped));
  ConversationState back = state_from_parts(state.messages, sidecar);

  CHECK(back.fragments.size() == state.fragments.size());
  CHECK(back.search_results.size() == state.search_results.size());
  CHECK(back.fragment_ids.state == state.fragment_ids.state);
  CHECK(back.search_ids.state == state.search_ids.state);
  // renders identically
  const auto a = render_context(state);
  const auto b = render_context(back);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
  CHECK(state_sidecar_to_json(back) == sidecar);

  // and keeps drawing the same ids (drawing mutates, so check this last)
  ConversationState left = state;
  CHECK(fresh_fragment_id(left) == fresh_fragment_id(back));
}

TEST_CASE("trajectory records serialize deterministically") {
  const TrajectoryRecord record = scripted_record();
  const Json j = record_to_json(record);
  const std::string line = j.dump() + "\n";
  CHECK(line == maybe_golden("trajectory_record.jsonl", line));

  const TrajectoryRecord back = record_from_json(j);
  CHECK(back.rollout_id == record.rollout_id);
  CHECK(back.steps.size() == record.steps.size());
  CHECK(back.final_answer == record.final_answer);
  CHECK(back.tool_call_count == record.tool_call_count);
  CHECK(back.token_counts.initial_context ==
        record.token_counts.initial_context);
  REQUIRE(back.eval.has_value());
  CHECK(back.eval->score == 1.0);
  CHECK(record_to_json(back) == j);

  // replaying the parsed record yields the same samples as the original
  const auto samples_a = collect_training_samples(record);
  const auto samples_b = collect_training_samples(back);
  REQUIRE(samples_a.size() == samples_b.size());
  for (std::size_t i = 0; i < samples_a.size(); ++i) {
    CHECK(sample_to_json(samples_a[i]) == sample_to_json(samples_b[i]));
  }
}

TEST_CASE("training samples and gspo groups round-trip") {
  const TrajectoryRecord record = scripted_record();
  const auto samples = collect_training_samples(record);
  REQUIRE_FALSE(samples.empty());
  const Json j = sample_to_json(samples[0]);
  const TrainingSample back = sample_from_json(j);
  CHECK(back.rollout_id == samples[0].rollout_id);
  CHECK(back.loss_mask == samples[0].loss_mask);
  CHECK(back.reward == samples[0].reward);
  CHECK(sample_to_json(back) == j);

  GspoGroup group;
  group.query_id = "q";
  group.clip_epsilon = 0.1;
  GspoTrajectory traj;
  traj.rollout_id = "r1";
  traj.logp_new = {-1.0, -2.0};
  traj.logp_old = {-1.5, -2.5};
  traj.reward = 1.0;
  group.trajectories = {traj, traj};
  const GspoGroup back_group = gspo_group_from_json(gspo_group_to_json(group));
  CHECK(back_group.query_id == "q");
  CHECK(back_group.clip_epsilon == 0.1);
  CHECK(back_group.trajectories.size() == 2);
  CHECK(back_group.trajectories[0].logp_new == traj.logp_new);
}

TEST_CASE("jsonl file helpers round-trip") {
  const std::string path = "/tmp/acm_test_lines.jsonl";
  const std::vector<Json> lines = {Json{{"a", 1}}, Json{{"b", "two"}}};
  write_jsonl(path, lines);
  const std::vector<Json> back = read_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].at("a") == 1);
  CHECK(back[1].at("b") == "two");
  CHECK_THROWS(read_file("/tmp/definitely/not/here.txt"));
}
