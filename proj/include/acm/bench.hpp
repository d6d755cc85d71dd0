#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "acm/gateway.hpp"
#include "acm/runtime.hpp"

namespace acm {

// Key-value interference task: a long stream of updates where only each
// key's last value matters.
struct PiTask {
  std::vector<std::string> keys;
  int updates_per_key = 0;
  std::string stream;  // update lines, one per line, interleaved
  std::map<std::string, std::string> truth;  // key -> last value
  std::uint64_t seed = 0;
};

PiTask gen_pi_task(int n_keys, int n_updates, std::uint64_t seed);

std::string pi_update_line(const std::string& key, const std::string& value);

struct PiScore {
  double fraction = 0.0;
  std::vector<std::string> wrong_keys;  // missing or mismatched
  bool parse_warning = false;           // no key: value lines at all
};

// Parses "key: value" lines (last occurrence wins) and scores the fraction of
// keys whose reported value matches the truth, case-insensitive and trimmed.
PiScore score_pi(const std::string& answer, const PiTask& task);

// Keys whose final update line is not present intact in the given text.
std::vector<std::string> pi_keys_missing_from(const std::string& visible_text,
                                              const PiTask& task);

// Last value per key among the intact update lines in a, possibly fold-
// mangled, rendered view. Any line surviving verbatim is recovered even when
// markers sit right against it.
std::map<std::string, std::string> pi_visible_updates(const std::string& text);

// Multi-needle chain task: n linked parent facts buried in filler; the
// question asks for the endpoint of the chain.
struct NeedleTask {
  std::string haystack;
  std::vector<std::string> needles;
  std::string question;
  std::string answer;  // oldest ancestor's name
  double depth = 0.4;
  std::uint64_t seed = 0;
};

NeedleTask gen_needle_task(int n_needles, std::size_t context_chars,
                           double depth, std::uint64_t seed);

bool score_needle(const std::string& answer, const NeedleTask& task);

struct ReductionReport {
  long initial_tokens = 0;
  long final_tokens = 0;
  double reduction = 0.0;  // clamped to [0, 1]
};

// 1 - final/initial rendered context size, from the record's token counts.
ReductionReport context_reduction(const TrajectoryRecord& record);

// Task text as presented to the agent (stream/haystack plus the question).
std::string pi_task_user_message(const PiTask& task);
std::string needle_task_user_message(const NeedleTask& task);

// Named system prompt presets: "unified", "pi", "needle".
std::string_view system_prompt(std::string_view name);

// Scripted strategies.
//
// The PI strategy fragments the update stream into num_fragments pieces, folds
// all but the last keep_last, then answers from the visible tail.
std::unique_ptr<ChatBackend> make_pi_fold_backend(int num_fragments = 10,
                                                  int keep_last = 2);

// The needle strategy chains search_context / get_search_detail hops until a
// person has no recorded parent, then answers with that name.
std::unique_ptr<ChatBackend> make_needle_chain_backend();

// Answers immediately with fixed text; the no-tools baseline.
std::unique_ptr<ChatBackend> make_direct_answer_backend(std::string answer);

// Task file round-trip (JSON, task plus truth).
Json pi_task_to_json(const PiTask& task);
PiTask pi_task_from_json(const Json& value);
Json needle_task_to_json(const NeedleTask& task);
NeedleTask needle_task_from_json(const Json& value);

}  // namespace acm
