#include "acm/forge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acm/tools.hpp"

namespace acm {
namespace {

// Replays one recorded context-modifying call against the pre-turn state.
// Summaries are taken from the recorded result so replay matches the run even
// when the original summarizer was model-backed. Calls that failed at run
// time are skipped: they changed nothing then either.
ConversationState apply_tool_effect(ConversationState state,
                                    const ToolCall& call,
                                    const ToolResult& result) {
  if (!result.ok()) return state;
  Summarizer summarizer;
  if (call.name == "summarize_fragment") {
    std::string summary = summary_from_payload(result.payload);
    summarizer = [summary = std::move(summary)](const std::string&,
                                                const std::string&) {
      return summary;
    };
  }
  ToolOutcome outcome = dispatch(std::move(state), call, summarizer);
  return std::move(outcome.state);
}

Message tool_result_message(std::size_t index, const ToolResult& result) {
  Message msg;
  msg.index = index;
  msg.role = Role::tool;
  msg.tool_call_id = result.tool_call_id;
  msg.content = result.payload;
  return msg;
}

}  // namespace

std::vector<TrainingSample> collect_training_samples(
    const TrajectoryRecord& record) {
  const std::size_t step_count = record.steps.size();
  if (step_count == 0) {
    throw Error(ErrorCode::collect_error, "record has no steps");
  }
  for (std::size_t i = 0; i + 1 < step_count; ++i) {
    const TurnStep& step = record.steps[i];
    if (!step.tool_result || step.completion.tool_calls.empty()) {
      throw Error(ErrorCode::collect_error,
                  "step " + std::to_string(i) +
                      " before the final completion must carry a tool call "
                      "and its result");
    }
  }
  if (record.steps.back().tool_result.has_value()) {
    throw Error(ErrorCode::collect_error,
                "the final step must not carry a tool result");
  }

  const double sample_reward =
      reward(record,
             record.eval && record.eval->correct ? Verdict::correct
                                                 : Verdict::incorrect,
             record.token_counts.trajectory_total);

  ConversationState query_state = record.initial_state;
  const std::size_t n = step_count - 1;
  std::vector<bool> trained(step_count, false);
  std::vector<TrainingSample> samples;

  for (std::size_t i = 0; i <= n; ++i) {
    const TurnStep& step = record.steps[i];
    const ToolCall* call = step.completion.tool_calls.empty()
                               ? nullptr
                               : &step.completion.tool_calls.front();
    const bool modifies = call != nullptr && context_modifying_name(call->name);
    if (!modifies && i != n) continue;

    TrainingSample sample;
    sample.rollout_id = record.rollout_id;
    // Snapshot: current rendering of the pre-turn conversation, then the
    // recorded completions and tool results verbatim.
    for (const Message& msg : query_state.messages) {
      Message rendered = msg;
      rendered.content = render_message(query_state, msg.index);
      sample.messages.push_back(std::move(rendered));
      sample.loss_mask.push_back(0);
    }
    for (std::size_t j = 0; j <= i; ++j) {
      Message completion = record.steps[j].completion;
      completion.index = sample.messages.size();
      sample.messages.push_back(std::move(completion));
      if (!trained[j]) {
        sample.loss_mask.push_back(1);
        trained[j] = true;
      } else {
        sample.loss_mask.push_back(0);
      }
      if (j < i && record.steps[j].tool_result) {
        sample.messages.push_back(tool_result_message(
            sample.messages.size(), *record.steps[j].tool_result));
        sample.loss_mask.push_back(0);
      }
    }
    if (i < n && step.tool_result) {
      sample.messages.push_back(
          tool_result_message(sample.messages.size(), *step.tool_result));
      sample.loss_mask.push_back(0);
    }
    sample.reward = sample_reward;
    samples.push_back(std::move(sample));

    if (modifies && step.tool_result) {
      query_state =
          apply_tool_effect(std::move(query_state), *call, *step.tool_result);
    }
  }
  return samples;
}

double reward(const TrajectoryRecord& record, Verdict verdict,
              long token_count) {
  if (record.format_error || record.tool_call_count > 20 ||
      token_count > 128000) {
    return -1.0;
  }
  return verdict == Verdict::correct ? 1.0 : 0.0;
}

double sequence_ratio(std::span<const double> logp_new,
                      std::span<const double> logp_old) {
  if (logp_new.size() != logp_old.size()) {
    throw std::invalid_argument("log-prob vectors differ in length");
  }
  if (logp_new.empty()) {
    throw std::invalid_argument("sequence ratio of an empty trajectory");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    sum += logp_new[i] - logp_old[i];
  }
  return std::exp(sum / static_cast<double>(logp_new.size()));
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) {
    throw std::invalid_argument("advantage normalization needs a group of 2+");
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double variance = 0.0;
  for (double r : rewards) variance += (r - mean) * (r - mean);
  variance /= static_cast<double>(g);
  const double std_dev = std::sqrt(variance);

  std::vector<double> advantages(g, 0.0);
  if (std_dev == 0.0) return advantages;  // degenerate group: skip update
  for (std::size_t i = 0; i < g; ++i) {
    advantages[i] = (rewards[i] - mean) / std_dev;
  }
  return advantages;
}

double gspo_objective(std::span<const double> ratios,
                      std::span<const double> advantages,
                      double clip_epsilon) {
  if (ratios.size() != advantages.size()) {
    throw std::invalid_argument("ratios and advantages differ in length");
  }
  if (ratios.empty()) {
    throw std::invalid_argument("objective over an empty group");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double clipped =
        std::clamp(ratios[i], 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    sum += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
  }
  return sum / static_cast<double>(ratios.size());
}

GspoEvaluation evaluate_gspo_group(const GspoGroup& group) {
  if (group.trajectories.size() < 2) {
    throw std::invalid_argument("GSPO group needs at least 2 trajectories");
  }
  GspoEvaluation eval;
  std::vector<double> rewards;
  for (const GspoTrajectory& traj : group.trajectories) {
    eval.ratios.push_back(sequence_ratio(traj.logp_new, traj.logp_old));
    rewards.push_back(traj.reward);
  }
  eval.advantages = group_advantages(rewards);
  eval.objective =
      gspo_objective(eval.ratios, eval.advantages, group.clip_epsilon);
  return eval;
}

double gspo_objective(const GspoGroup& group) {
  return evaluate_gspo_group(group).objective;
}

}  // namespace acm
