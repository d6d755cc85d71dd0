#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "acm/bench.hpp"
#include "acm/forge.hpp"
#include "acm/gateway.hpp"
#include "acm/runtime.hpp"
#include "acm/serialize.hpp"
#include "acm/tool_schemas.hpp"

namespace {

using acm::Json;

struct TaskRun {
  std::string task_path;
  std::string kind;
  acm::TrajectoryRecord record;
  std::vector<std::string> wrong_keys;  // pi tasks scoring < 1
  bool aborted = false;
  std::string abort_reason;
};

std::string prompt_text(const std::string& selection, const std::string& kind) {
  if (selection == "auto") return std::string(acm::system_prompt(kind));
  if (selection == "unified" || selection == "pi" || selection == "needle") {
    return std::string(acm::system_prompt(selection));
  }
  return acm::read_file(selection);  // custom prompt file
}

std::unique_ptr<acm::ChatBackend> make_backend(const std::string& policy,
                                               const acm::EndpointConfig& endpoint) {
  if (policy == "live") return std::make_unique<acm::HttpBackend>(endpoint);
  if (policy == "pi") return acm::make_pi_fold_backend();
  if (policy == "needle") return acm::make_needle_chain_backend();
  if (policy == "direct") {
    return acm::make_direct_answer_backend(
        "I cannot determine the answer without the document tools.");
  }
  return std::make_unique<acm::ScriptedBackend>(
      acm::load_response_script(policy));
}

TaskRun run_one_task(const std::string& task_path, const std::string& policy,
                     const acm::EndpointConfig& endpoint,
                     const acm::RuntimeOptions& options,
                     const std::string& prompt_selection, std::uint64_t seed,
                     std::size_t task_index) {
  TaskRun run;
  run.task_path = task_path;
  const Json task_json = Json::parse(acm::read_file(task_path));
  run.kind = task_json.at("kind").get<std::string>();

  std::string user_text;
  acm::PiTask pi_task;
  acm::NeedleTask needle_task;
  if (run.kind == "pi") {
    pi_task = acm::pi_task_from_json(task_json);
    user_text = acm::pi_task_user_message(pi_task);
  } else if (run.kind == "needle") {
    needle_task = acm::needle_task_from_json(task_json);
    user_text = acm::needle_task_user_message(needle_task);
  } else {
    throw std::runtime_error("unknown task kind '" + run.kind + "' in " +
                             task_path);
  }

  acm::ConversationState state = acm::ConversationState::with_seed(seed);
  acm::Message system;
  system.index = 0;
  system.role = acm::Role::system;
  system.content = prompt_text(prompt_selection, run.kind);
  state = acm::append_message(std::move(state), std::move(system));

  acm::Message user;
  user.index = 1;
  user.role = acm::Role::user;
  user.content = user_text;

  auto backend = make_backend(policy, endpoint);
  const std::string rollout_id =
      std::filesystem::path(task_path).stem().string() + "-" +
      std::to_string(task_index);
  try {
    acm::TurnOutput output = acm::run_turn(std::move(state), std::move(user),
                                           *backend, options, rollout_id);
    run.record = std::move(output.record);
  } catch (const acm::TurnAborted& e) {
    run.aborted = true;
    run.abort_reason = e.what();
    run.record = e.partial_record();
    run.record.rollout_id = rollout_id;
    return run;
  }

  acm::TrajectoryEval eval;
  if (run.kind == "pi") {
    const acm::PiScore score = acm::score_pi(run.record.final_answer, pi_task);
    eval.score = score.fraction;
    eval.correct = score.fraction == 1.0;
    run.wrong_keys = score.wrong_keys;
  } else {
    const bool correct = acm::score_needle(run.record.final_answer, needle_task);
    eval.score = correct ? 1.0 : 0.0;
    eval.correct = correct;
  }
  eval.context_reduction = acm::context_reduction(run.record).reduction;
  run.record.eval = eval;
  return run;
}

int cmd_gen_bench(const std::string& kind, int keys, int updates, int needles,
                  std::size_t chars, double depth, std::uint64_t seed,
                  const std::string& out_path) {
  Json task;
  if (kind == "pi") {
    task = acm::pi_task_to_json(acm::gen_pi_task(keys, updates, seed));
  } else {
    task = acm::needle_task_to_json(
        acm::gen_needle_task(needles, chars, depth, seed));
  }
  acm::write_file(out_path, task.dump(2) + "\n");
  std::cout << "wrote " << kind << " task to " << out_path << "\n";
  return 0;
}

int cmd_run_agent(const std::vector<std::string>& task_paths,
                  const std::string& policy, const acm::EndpointConfig& endpoint,
                  acm::RuntimeOptions options, const std::string& prompt_selection,
                  std::uint64_t seed, const std::string& out_dir, int jobs) {
  std::filesystem::create_directories(out_dir);
  if (policy == "live") {
    options.summarizer = acm::make_llm_summarizer(endpoint, options.model);
  }

  std::vector<TaskRun> runs(task_paths.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < task_paths.size();
         i = next.fetch_add(1)) {
      try {
        runs[i] = run_one_task(task_paths[i], policy, endpoint, options,
                               prompt_selection, seed, i);
      } catch (const std::exception& e) {
        std::cerr << task_paths[i] << ": " << e.what() << "\n";
        failed = true;
      }
    }
  };
  const std::size_t thread_count = std::max(
      1, std::min<int>(jobs, static_cast<int>(task_paths.size())));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failed) return 1;

  std::vector<Json> record_lines;
  Json report_tasks = Json::array();
  bool any_aborted = false;
  for (const TaskRun& run : runs) {
    record_lines.push_back(acm::record_to_json(run.record));
    Json entry;
    entry["rollout_id"] = run.record.rollout_id;
    entry["task"] = run.task_path;
    entry["kind"] = run.kind;
    if (run.aborted) {
      any_aborted = true;
      entry["aborted"] = run.abort_reason;
    } else if (run.record.eval) {
      entry["score"] = run.record.eval->score;
      entry["correct"] = run.record.eval->correct;
      entry["context_reduction"] = run.record.eval->context_reduction;
      if (!run.wrong_keys.empty()) entry["lost_keys"] = run.wrong_keys;
    }
    entry["tool_call_count"] = run.record.tool_call_count;
    const acm::ReductionReport reduction = acm::context_reduction(run.record);
    entry["initial_tokens"] = reduction.initial_tokens;
    entry["final_tokens"] = reduction.final_tokens;
    report_tasks.push_back(std::move(entry));
  }
  const std::string records_path =
      (std::filesystem::path(out_dir) / "records.jsonl").string();
  const std::string report_path =
      (std::filesystem::path(out_dir) / "report.json").string();
  acm::write_jsonl(records_path, record_lines);
  acm::write_file(report_path,
                  Json{{"tasks", report_tasks}}.dump(2) + "\n");
  std::cout << "wrote " << record_lines.size() << " record(s) to "
            << records_path << "\n";
  for (const Json& entry : report_tasks) std::cout << entry.dump() << "\n";
  return any_aborted ? 1 : 0;
}

int cmd_forge(const std::string& in_path, const std::string& out_path) {
  std::vector<Json> out_lines;
  for (const Json& line : acm::read_jsonl(in_path)) {
    const acm::TrajectoryRecord record = acm::record_from_json(line);
    const std::vector<acm::TrainingSample> samples =
        acm::collect_training_samples(record);

    // Exactly-once coverage check: across the rollout's samples, mask-1
    // entries sit on assistant messages and cover each completion once.
    std::size_t mask_total = 0;
    for (const acm::TrainingSample& sample : samples) {
      for (std::size_t i = 0; i < sample.messages.size(); ++i) {
        if (sample.loss_mask[i] == 0) continue;
        if (sample.messages[i].role != acm::Role::assistant) {
          throw std::runtime_error("loss mask set on a non-assistant message");
        }
        ++mask_total;
      }
      out_lines.push_back(acm::sample_to_json(sample));
    }
    if (mask_total != record.steps.size()) {
      throw std::runtime_error(
          "rollout " + record.rollout_id + " masked " +
          std::to_string(mask_total) + " completions, expected " +
          std::to_string(record.steps.size()));
    }
  }
  acm::write_jsonl(out_path, out_lines);
  std::cout << "wrote " << out_lines.size() << " sample(s) to " << out_path
            << "\n";
  return 0;
}

int cmd_gspo_eval(const std::string& samples_path, const std::string& fixtures_path,
                  const std::string& out_path) {
  std::map<std::string, double> rewards;
  if (!samples_path.empty()) {
    for (const Json& line : acm::read_jsonl(samples_path)) {
      const acm::TrainingSample sample = acm::sample_from_json(line);
      rewards[sample.rollout_id] = sample.reward;
    }
  }

  const Json fixtures = Json::parse(acm::read_file(fixtures_path));
  Json groups_out = Json::array();
  double objective_sum = 0.0;
  for (const Json& group_json : fixtures.at("groups")) {
    acm::GspoGroup group = acm::gspo_group_from_json(group_json);
    for (acm::GspoTrajectory& traj : group.trajectories) {
      auto it = rewards.find(traj.rollout_id);
      if (it != rewards.end()) traj.reward = it->second;
    }
    const acm::GspoEvaluation eval = acm::evaluate_gspo_group(group);
    groups_out.push_back(Json{{"query_id", group.query_id},
                              {"G", group.trajectories.size()},
                              {"clip_epsilon", group.clip_epsilon},
                              {"ratios", eval.ratios},
                              {"advantages", eval.advantages},
                              {"objective", eval.objective}});
    objective_sum += eval.objective;
  }
  Json report;
  report["groups"] = groups_out;
  report["mean_objective"] =
      groups_out.empty() ? 0.0 : objective_sum / groups_out.size();
  acm::write_file(out_path, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_schemas(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (std::string_view name : acm::tool_names()) {
    const std::string path =
        (std::filesystem::path(out_dir) / (std::string(name) + ".json"))
            .string();
    acm::write_file(path, acm::schema_document_text(name));
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active context management engine: benchmark generation, "
               "agent runs, training-sample collection, GSPO evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 7;
  app.add_option("--seed", seed, "Seed for generators and fragment ids");

  // gen-bench
  auto* gen = app.add_subcommand("gen-bench", "Generate a benchmark task file");
  std::string gen_kind;
  int gen_keys = 46;
  int gen_updates = 64;
  int gen_needles = 3;
  std::size_t gen_chars = 16000;
  double gen_depth = 0.4;
  std::string gen_out = "task.json";
  gen->add_option("kind", gen_kind, "Task kind: pi or needle")
      ->required()
      ->check(CLI::IsMember({"pi", "needle"}));
  gen->add_option("--keys", gen_keys, "PI: number of keys");
  gen->add_option("--updates", gen_updates, "PI: updates per key");
  gen->add_option("--needles", gen_needles, "Needle: chain length (2-5)");
  gen->add_option("--chars", gen_chars, "Needle: haystack length in chars");
  gen->add_option("--depth", gen_depth, "Needle: insertion depth fraction");
  gen->add_option("--out", gen_out, "Output task file");

  // run-agent
  auto* run = app.add_subcommand("run-agent", "Run agent turns over task files");
  std::vector<std::string> run_tasks;
  std::string run_policy = "pi";
  std::string run_prompt = "auto";
  std::string run_out_dir = "runs";
  std::string run_endpoint = "http://127.0.0.1:8080";
  std::string run_api_key_env = "ACM_API_KEY";
  std::string run_model = "playback";
  std::string run_debug_log;
  int run_max_tool_steps = 20;
  long run_max_context_tokens = 128000;
  bool run_no_tools = false;
  int run_jobs = 1;
  run->add_option("--task", run_tasks, "Task file(s) from gen-bench")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--policy", run_policy,
                  "live, pi, needle, direct, or a canned-response JSONL path");
  run->add_option("--prompt", run_prompt,
                  "System prompt: auto, unified, pi, needle, or a file path");
  run->add_option("--out-dir", run_out_dir, "Output directory");
  run->add_option("--endpoint", run_endpoint, "Chat-completions base URL");
  run->add_option("--api-key-env", run_api_key_env,
                  "Env var holding the API key");
  run->add_option("--model", run_model, "Model name for live runs");
  run->add_option("--debug-log", run_debug_log,
                  "JSONL request/response log for live runs");
  run->add_option("--limits.max-tool-steps", run_max_tool_steps,
                  "Tool-step cap per turn");
  run->add_option("--limits.max-context-tokens", run_max_context_tokens,
                  "Context token budget");
  run->add_flag("--no-tools", run_no_tools,
                "Baseline run without the tool suite");
  run->add_option("--jobs", run_jobs, "Parallel tasks");

  // forge
  auto* forge = app.add_subcommand(
      "forge", "Convert trajectory records into training samples");
  std::string forge_in;
  std::string forge_out = "samples.jsonl";
  forge->add_option("--in", forge_in, "records.jsonl from run-agent")
      ->required()
      ->check(CLI::ExistingFile);
  forge->add_option("--out", forge_out, "Output samples JSONL");

  // gspo-eval
  auto* gspo = app.add_subcommand("gspo-eval",
                                  "Evaluate the GSPO objective over groups");
  std::string gspo_samples;
  std::string gspo_fixtures;
  std::string gspo_out = "gspo_report.json";
  gspo->add_option("--samples", gspo_samples,
                   "samples.jsonl providing rewards by rollout_id");
  gspo->add_option("--logprobs", gspo_fixtures,
                   "JSON fixture with per-trajectory log-prob vectors")
      ->required()
      ->check(CLI::ExistingFile);
  gspo->add_option("--out", gspo_out, "Output report path");

  // schemas
  auto* schemas = app.add_subcommand("schemas", "Export the six tool schemas");
  std::string schemas_out = "schemas";
  schemas->add_option("--out-dir", schemas_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen_bench(gen_kind, gen_keys, gen_updates, gen_needles,
                           gen_chars, gen_depth, seed, gen_out);
    }
    if (run->parsed()) {
      acm::EndpointConfig endpoint;
      endpoint.base_url = run_endpoint;
      endpoint.api_key_env = run_api_key_env;
      endpoint.debug_log_path = run_debug_log;
      acm::RuntimeOptions options;
      options.limits.max_tool_steps = run_max_tool_steps;
      options.limits.max_context_tokens = run_max_context_tokens;
      options.tools_enabled = !run_no_tools;
      options.model = run_model;
      if (run_no_tools && run_policy != "live") run_policy = "direct";
      return cmd_run_agent(run_tasks, run_policy, endpoint, options,
                           run_prompt, seed, run_out_dir, run_jobs);
    }
    if (forge->parsed()) return cmd_forge(forge_in, forge_out);
    if (gspo->parsed()) {
      return cmd_gspo_eval(gspo_samples, gspo_fixtures, gspo_out);
    }
    if (schemas->parsed()) return cmd_schemas(schemas_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
