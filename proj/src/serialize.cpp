#include "acm/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acm {
namespace {

Json tool_call_to_json(const ToolCall& call) {
  Json value;
  value["id"] = call.id;
  value["type"] = "function";
  value["function"] = {
      {"name", call.name},
      {"arguments",
       call.arguments_malformed ? call.raw_arguments : call.arguments.dump()},
  };
  return value;
}

ToolCall tool_call_from_json(const Json& value) {
  ToolCall call;
  call.id = value.at("id").get<std::string>();
  const Json& function = value.at("function");
  call.name = function.at("name").get<std::string>();
  call.raw_arguments = function.at("arguments").get<std::string>();
  try {
    call.arguments = Json::parse(call.raw_arguments);
    if (!call.arguments.is_object()) call.arguments_malformed = true;
  } catch (const Json::parse_error&) {
    call.arguments_malformed = true;
  }
  return call;
}

Json tool_result_to_json(const ToolResult& result) {
  Json value;
  value["tool_call_id"] = result.tool_call_id;
  value["status"] = result.ok() ? "ok" : "error";
  value["payload"] = result.payload;
  return value;
}

ToolResult tool_result_from_json(const Json& value) {
  ToolResult result;
  result.tool_call_id = value.at("tool_call_id").get<std::string>();
  result.status = value.at("status").get<std::string>() == "ok"
                      ? ToolResult::Status::ok
                      : ToolResult::Status::error;
  result.payload = value.at("payload").get<std::string>();
  return result;
}

Json fragment_to_json(const Fragment& frag) {
  Json value;
  value["id"] = frag.id;
  value["message_index"] = frag.message_index;
  value["span"] = {frag.span.begin, frag.span.end};
  value["state"] = fragment_state_name(frag.state);
  value["original_content"] = frag.original_content;
  value["display_content"] = frag.display_content;
  if (!frag.focus.empty()) value["focus"] = frag.focus;
  return value;
}

Fragment fragment_from_json(const Json& value) {
  Fragment frag;
  frag.id = value.at("id").get<std::string>();
  frag.message_index = value.at("message_index").get<std::size_t>();
  frag.span.begin = value.at("span").at(0).get<std::size_t>();
  frag.span.end = value.at("span").at(1).get<std::size_t>();
  frag.state = fragment_state_from_name(value.at("state").get<std::string>());
  frag.original_content = value.at("original_content").get<std::string>();
  frag.display_content = value.at("display_content").get<std::string>();
  frag.focus = value.value("focus", "");
  return frag;
}

Json search_hit_to_json(const SearchHit& hit) {
  Json value;
  value["id"] = hit.id;
  value["message_index"] = hit.message_index;
  value["match_offset"] = hit.match_offset;
  value["query"] = hit.query;
  value["snippet"] = hit.snippet;
  if (!hit.inside_fragment.empty()) value["inside_fragment"] = hit.inside_fragment;
  return value;
}

SearchHit search_hit_from_json(const Json& value) {
  SearchHit hit;
  hit.id = value.at("id").get<std::string>();
  hit.message_index = value.at("message_index").get<std::size_t>();
  hit.match_offset = value.at("match_offset").get<std::size_t>();
  hit.query = value.at("query").get<std::string>();
  hit.snippet = value.at("snippet").get<std::string>();
  hit.inside_fragment = value.value("inside_fragment", "");
  return hit;
}

}  // namespace

Json message_to_json(const Message& msg) {
  Json value;
  value["index"] = msg.index;
  value["role"] = role_name(msg.role);
  value["content"] = msg.content;
  if (!msg.tool_calls.empty()) {
    Json calls = Json::array();
    for (const ToolCall& call : msg.tool_calls) {
      calls.push_back(tool_call_to_json(call));
    }
    value["tool_calls"] = std::move(calls);
  }
  if (!msg.tool_call_id.empty()) value["tool_call_id"] = msg.tool_call_id;
  return value;
}

Message message_from_json(const Json& value) {
  Message msg;
  msg.index = value.at("index").get<std::size_t>();
  msg.role = role_from_name(value.at("role").get<std::string>());
  msg.content = value.at("content").get<std::string>();
  if (value.contains("tool_calls")) {
    for (const Json& call : value.at("tool_calls")) {
      msg.tool_calls.push_back(tool_call_from_json(call));
    }
  }
  msg.tool_call_id = value.value("tool_call_id", "");
  return msg;
}

std::string conversation_to_jsonl(const std::vector<Message>& messages) {
  std::ostringstream out;
  for (const Message& msg : messages) {
    out << message_to_json(msg).dump() << "\n";
  }
  return out.str();
}

std::vector<Message> conversation_from_jsonl(const std::string& text) {
  std::vector<Message> messages;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    messages.push_back(message_from_json(Json::parse(line)));
  }
  return messages;
}

Json state_sidecar_to_json(const ConversationState& state) {
  Json value;
  value["fragment_id_state"] = state.fragment_ids.state;
  value["search_id_state"] = state.search_ids.state;
  Json fragments = Json::object();
  for (const auto& [id, frag] : state.fragments) {
    fragments[id] = fragment_to_json(frag);
  }
  value["fragments"] = std::move(fragments);
  Json hits = Json::object();
  for (const auto& [id, hit] : state.search_results) {
    hits[id] = search_hit_to_json(hit);
  }
  value["search_results"] = std::move(hits);
  return value;
}

ConversationState state_from_parts(std::vector<Message> messages,
                                   const Json& sidecar) {
  ConversationState state;
  state.messages = std::move(messages);
  state.fragment_ids.state = sidecar.at("fragment_id_state").get<std::uint64_t>();
  state.search_ids.state = sidecar.at("search_id_state").get<std::uint64_t>();
  for (const auto& [id, frag] : sidecar.at("fragments").items()) {
    state.fragments.emplace(id, fragment_from_json(frag));
  }
  for (const auto& [id, hit] : sidecar.at("search_results").items()) {
    state.search_results.emplace(id, search_hit_from_json(hit));
  }
  return state;
}

Json record_to_json(const TrajectoryRecord& record) {
  Json value;
  value["rollout_id"] = record.rollout_id;
  Json initial = Json::array();
  for (const Message& msg : record.initial_state.messages) {
    initial.push_back(message_to_json(msg));
  }
  value["initial_messages"] = std::move(initial);
  value["initial_sidecar"] = state_sidecar_to_json(record.initial_state);
  Json steps = Json::array();
  for (const TurnStep& step : record.steps) {
    Json s;
    s["completion"] = message_to_json(step.completion);
    s["tool_result"] =
        step.tool_result ? tool_result_to_json(*step.tool_result) : Json();
    s["ctx_mod"] = step.ctx_mod;
    steps.push_back(std::move(s));
  }
  value["steps"] = std::move(steps);
  value["final_answer"] = record.final_answer;
  value["tool_call_count"] = record.tool_call_count;
  value["format_error"] = record.format_error;
  value["token_counts"] = {
      {"initial_context", record.token_counts.initial_context},
      {"final_context", record.token_counts.final_context},
      {"trajectory_total", record.token_counts.trajectory_total},
  };
  if (record.eval) {
    value["eval"] = {
        {"correct", record.eval->correct},
        {"score", record.eval->score},
        {"context_reduction", record.eval->context_reduction},
    };
  }
  return value;
}

TrajectoryRecord record_from_json(const Json& value) {
  TrajectoryRecord record;
  record.rollout_id = value.at("rollout_id").get<std::string>();
  std::vector<Message> initial;
  for (const Json& msg : value.at("initial_messages")) {
    initial.push_back(message_from_json(msg));
  }
  record.initial_state =
      state_from_parts(std::move(initial), value.at("initial_sidecar"));
  for (const Json& s : value.at("steps")) {
    TurnStep step;
    step.completion = message_from_json(s.at("completion"));
    if (!s.at("tool_result").is_null()) {
      step.tool_result = tool_result_from_json(s.at("tool_result"));
    }
    step.ctx_mod = s.at("ctx_mod").get<bool>();
    record.steps.push_back(std::move(step));
  }
  record.final_answer = value.at("final_answer").get<std::string>();
  record.tool_call_count = value.at("tool_call_count").get<int>();
  record.format_error = value.at("format_error").get<bool>();
  const Json& tokens = value.at("token_counts");
  record.token_counts.initial_context = tokens.at("initial_context").get<long>();
  record.token_counts.final_context = tokens.at("final_context").get<long>();
  record.token_counts.trajectory_total =
      tokens.at("trajectory_total").get<long>();
  if (value.contains("eval")) {
    TrajectoryEval eval;
    eval.correct = value.at("eval").at("correct").get<bool>();
    eval.score = value.at("eval").at("score").get<double>();
    eval.context_reduction =
        value.at("eval").at("context_reduction").get<double>();
    record.eval = eval;
  }
  return record;
}

Json sample_to_json(const TrainingSample& sample) {
  Json value;
  value["rollout_id"] = sample.rollout_id;
  Json messages = Json::array();
  for (const Message& msg : sample.messages) {
    messages.push_back(message_to_json(msg));
  }
  value["messages"] = std::move(messages);
  value["loss_mask"] = sample.loss_mask;
  value["reward"] = sample.reward;
  return value;
}

TrainingSample sample_from_json(const Json& value) {
  TrainingSample sample;
  sample.rollout_id = value.at("rollout_id").get<std::string>();
  for (const Json& msg : value.at("messages")) {
    sample.messages.push_back(message_from_json(msg));
  }
  sample.loss_mask = value.at("loss_mask").get<std::vector<int>>();
  sample.reward = value.at("reward").get<double>();
  return sample;
}

Json gspo_group_to_json(const GspoGroup& group) {
  Json value;
  value["query_id"] = group.query_id;
  value["clip_epsilon"] = group.clip_epsilon;
  Json trajectories = Json::array();
  for (const GspoTrajectory& traj : group.trajectories) {
    trajectories.push_back(Json{{"rollout_id", traj.rollout_id},
                                {"logp_new", traj.logp_new},
                                {"logp_old", traj.logp_old},
                                {"reward", traj.reward}});
  }
  value["trajectories"] = std::move(trajectories);
  return value;
}

GspoGroup gspo_group_from_json(const Json& value) {
  GspoGroup group;
  group.query_id = value.at("query_id").get<std::string>();
  group.clip_epsilon = value.value("clip_epsilon", 0.2);
  for (const Json& t : value.at("trajectories")) {
    GspoTrajectory traj;
    traj.rollout_id = t.value("rollout_id", "");
    traj.logp_new = t.at("logp_new").get<std::vector<double>>();
    traj.logp_old = t.at("logp_old").get<std::vector<double>>();
    traj.reward = t.value("reward", 0.0);
    group.trajectories.push_back(std::move(traj));
  }
  return group;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<Json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    lines.push_back(Json::parse(line));
  }
  return lines;
}

void write_jsonl(const std::string& path, const std::vector<Json>& lines) {
  std::ostringstream out;
  for (const Json& line : lines) out << line.dump() << "\n";
  write_file(path, out.str());
}

}  // namespace acm
