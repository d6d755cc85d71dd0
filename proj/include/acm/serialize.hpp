#pragma once

#include <string>
#include <vector>

#include "acm/conversation.hpp"
#include "acm/forge.hpp"
#include "acm/runtime.hpp"

namespace acm {

// Message wire form, field order fixed: index, role, content, tool_calls?,
// tool_call_id?. Optional fields are omitted when empty.
Json message_to_json(const Message& msg);
Message message_from_json(const Json& value);

// One message object per line.
std::string conversation_to_jsonl(const std::vector<Message>& messages);
std::vector<Message> conversation_from_jsonl(const std::string& text);

// Fragment/search registries plus id-stream states; pairs with the JSONL
// message stream to round-trip a full ConversationState.
Json state_sidecar_to_json(const ConversationState& state);
ConversationState state_from_parts(std::vector<Message> messages,
                                   const Json& sidecar);

Json record_to_json(const TrajectoryRecord& record);
TrajectoryRecord record_from_json(const Json& value);

Json sample_to_json(const TrainingSample& sample);
TrainingSample sample_from_json(const Json& value);

Json gspo_group_to_json(const GspoGroup& group);
GspoGroup gspo_group_from_json(const Json& value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::vector<Json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Json>& lines);

}  // namespace acm
