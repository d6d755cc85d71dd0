#pragma once

#include <span>
#include <string>
#include <vector>

#include "acm/runtime.hpp"

namespace acm {

// One training instance: a trajectory snapshot whose loss mask enables
// exactly the completions that have not been trained on in an earlier
// snapshot of the same rollout.
struct TrainingSample {
  std::string rollout_id;
  std::vector<Message> messages;
  std::vector<int> loss_mask;  // one entry per message, 1 only on completions
  double reward = 0.0;
};

// Conditional trajectory collection with incremental loss assignment: emits a
// snapshot at every context-modifying step and at the final completion,
// replaying each context modification against the pre-turn conversation so
// later snapshots see the updated rendering.
std::vector<TrainingSample> collect_training_samples(
    const TrajectoryRecord& record);

enum class Verdict { correct, incorrect };

// Terminal reward: 1 for a clean correct answer; -1 on format error, more
// than 20 tool calls, or a trajectory beyond 128k tokens (penalties beat
// correctness); 0 otherwise.
double reward(const TrajectoryRecord& record, Verdict verdict,
              long token_count);

// Length-normalized sequence importance ratio:
// exp(mean(logp_new - logp_old)).
double sequence_ratio(std::span<const double> logp_new,
                      std::span<const double> logp_old);

// Group-normalized advantages (population std). A zero-spread group yields
// all-zero advantages.
std::vector<double> group_advantages(std::span<const double> rewards);

// Mean over the group of min(s*A, clip(s, 1-eps, 1+eps)*A).
double gspo_objective(std::span<const double> ratios,
                      std::span<const double> advantages, double clip_epsilon);

struct GspoTrajectory {
  std::string rollout_id;
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  double reward = 0.0;
};

struct GspoGroup {
  std::string query_id;
  double clip_epsilon = 0.2;
  std::vector<GspoTrajectory> trajectories;
};

struct GspoEvaluation {
  std::vector<double> ratios;
  std::vector<double> advantages;
  double objective = 0.0;
};

GspoEvaluation evaluate_gspo_group(const GspoGroup& group);

double gspo_objective(const GspoGroup& group);

}  // namespace acm
