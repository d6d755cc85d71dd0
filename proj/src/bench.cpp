#include "acm/bench.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "acm/error.hpp"
#include "acm/text.hpp"

namespace acm {
namespace {

// Update-stream keys. Each run takes the first n_keys.
const std::vector<std::string>& pi_keys() {
  static const std::vector<std::string> keys = {
      "law",      "climate",  "emotion", "color",    "metal",    "river",
      "planet",   "fruit",    "animal",  "music",    "sport",    "language",
      "battery",  "engine",   "fabric",  "weather",  "mineral",  "flower",
      "insect",   "ocean",    "desert",  "mountain", "bridge",   "harvest",
      "voltage",  "protein",  "enzyme",  "galaxy",   "comet",    "canyon",
      "glacier",  "volcano",  "market",  "cipher",   "signal",   "compass",
      "turbine",  "reactor",  "antenna", "satellite", "horizon", "monsoon",
      "tundra",   "valley",   "summit",  "quarry",   "circuit",  "garden",
      "forest",   "temple",   "castle",  "tunnel",
  };
  return keys;
}

const std::vector<std::string>& value_adjectives() {
  static const std::vector<std::string> words = {
      "amber",  "brisk",  "calm",   "daring", "eager",  "fabled", "gentle",
      "hollow", "icy",    "jolly",  "keen",   "lively", "mellow", "noble",
      "plucky", "quiet",  "rustic", "silver", "tidal",  "urban",  "vivid",
      "zesty",  "bold",   "crisp",  "dusty",  "early",  "faint",  "grand",
      "humble", "ivory",  "jagged", "kind",   "lunar",  "misty",  "narrow",
      "pale",   "quick",  "rough",  "sleek",  "tame",   "upbeat", "vast",
      "warm",   "young",  "broad",  "clear",  "deep",   "fresh",
  };
  return words;
}

const std::vector<std::string>& value_nouns() {
  static const std::vector<std::string> words = {
      "falcon",  "harbor",  "lantern", "meadow",  "night",   "orchid",
      "pebble",  "quartz",  "ribbon",  "saddle",  "thicket", "umbrella",
      "violin",  "willow",  "yarn",    "zephyr",  "anchor",  "basket",
      "cedar",   "drum",    "ember",   "fern",    "grove",   "hedge",
      "inlet",   "jungle",  "kestrel", "ledge",   "marsh",   "nectar",
      "oasis",   "prairie", "quill",   "reef",    "spruce",  "trellis",
      "vale",    "wharf",   "yew",     "atlas",   "breeze",  "cliff",
      "dune",    "echo",    "fjord",   "gull",    "knoll",   "pine",
  };
  return words;
}

const std::vector<std::string>& needle_names() {
  static const std::vector<std::string> names = {
      "Aurelia",    "Barnaby",    "Cordelia",  "Dmitri",     "Esperanza",
      "Fitzgerald", "Guinevere",  "Horatio",   "Isadora",    "Jeremiah",
      "Katarina",   "Leopold",    "Magnolia",  "Nathaniel",  "Octavia",
      "Percival",   "Quentin",    "Rosalind",  "Sebastian",  "Theodora",
      "Ulysses",    "Valentina",  "Wilhelmina", "Xavier",    "Yolanda",
      "Zachariah",  "Anastasia",  "Bartholomew", "Celestine", "Demetrius",
      "Evangeline", "Ferdinand",  "Genevieve", "Hyacinth",   "Ignatius",
      "Josephine",  "Kristoffer", "Lavinia",   "Maximilian", "Nicodemus",
      "Ophelia",    "Peregrine",  "Quintessa", "Reginald",   "Seraphina",
      "Thaddeus",   "Umberto",    "Veronica",  "Winifred",   "Xiomara",
      "Yasmina",    "Zebediah",
  };
  return names;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",      "village",  "records",  "mention",  "a",        "long",
      "season",   "of",       "steady",   "rain",     "and",      "careful",
      "repairs",  "to",       "old",      "stone",    "walls",    "several",
      "traders",  "carried",  "bundles",  "across",   "narrow",   "paths",
      "while",    "lantern",  "light",    "flickered", "over",    "quiet",
      "markets",  "children", "counted",  "boats",    "near",     "shore",
      "farmers",  "sorted",   "grain",    "into",     "woven",    "baskets",
      "before",   "winter",   "settled",  "each",     "ledger",   "notes",
      "ordinary", "matters",  "weather",  "prices",   "journeys", "letters",
      "nothing",  "remarkable", "appears", "in",      "these",    "pages",
      "beyond",   "daily",    "routine",  "work",
  };
  return words;
}

// mt19937_64 is bit-exact across platforms; the modulo draw keeps task bytes
// reproducible without relying on unspecified distribution internals.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[bounded(rng, i)]);
  }
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::string lower(std::string text) {
  for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return text;
}

bool plain_lowercase(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (!(std::islower(static_cast<unsigned char>(c)) || c == ' ')) return false;
  }
  return true;
}


const Message& last_message_of_role(const std::vector<Message>& messages,
                                    Role role) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == role) return *it;
  }
  throw Error(ErrorCode::structural_error,
              "request carries no message with the required role");
}

std::vector<std::string> parse_bracket_ids(const std::string& payload,
                                           char prefix) {
  std::vector<std::string> ids;
  std::size_t pos = 0;
  while ((pos = payload.find('[', pos)) != std::string::npos) {
    if (pos + 7 < payload.size() && payload[pos + 1] == prefix &&
        payload[pos + 7] == ']') {
      ids.push_back(payload.substr(pos + 1, 6));
      pos += 8;
    } else {
      ++pos;
    }
  }
  return ids;
}

}  // namespace

std::string pi_update_line(const std::string& key, const std::string& value) {
  return "The value of " + key + " is now " + value + ".";
}

PiTask gen_pi_task(int n_keys, int n_updates, std::uint64_t seed) {
  if (n_keys < 1 || static_cast<std::size_t>(n_keys) > pi_keys().size()) {
    throw Error(ErrorCode::size_error,
                "n_keys must be between 1 and " +
                    std::to_string(pi_keys().size()));
  }
  const std::size_t combos =
      value_adjectives().size() * value_nouns().size();
  if (n_updates < 1 || static_cast<std::size_t>(n_updates) > combos) {
    throw Error(ErrorCode::size_error,
                "n_updates must be between 1 and " + std::to_string(combos));
  }

  std::mt19937_64 rng(seed);
  PiTask task;
  task.seed = seed;
  task.updates_per_key = n_updates;
  task.keys.assign(pi_keys().begin(), pi_keys().begin() + n_keys);

  // Distinct values per key: a seeded shuffle of all adjective-noun combos.
  std::vector<std::vector<std::string>> values(task.keys.size());
  std::vector<std::uint32_t> combo_ids(combos);
  for (std::size_t k = 0; k < task.keys.size(); ++k) {
    for (std::size_t i = 0; i < combos; ++i) combo_ids[i] = static_cast<std::uint32_t>(i);
    seeded_shuffle(combo_ids, rng);
    values[k].reserve(n_updates);
    for (int u = 0; u < n_updates; ++u) {
      const std::uint32_t id = combo_ids[u];
      values[k].push_back(value_adjectives()[id / value_nouns().size()] + " " +
                          value_nouns()[id % value_nouns().size()]);
    }
  }

  // Uniformly interleave each key's updates while preserving per-key order.
  std::vector<std::uint32_t> slots;
  slots.reserve(task.keys.size() * static_cast<std::size_t>(n_updates));
  for (std::size_t k = 0; k < task.keys.size(); ++k) {
    for (int u = 0; u < n_updates; ++u) slots.push_back(static_cast<std::uint32_t>(k));
  }
  seeded_shuffle(slots, rng);

  std::vector<std::size_t> next_update(task.keys.size(), 0);
  std::ostringstream stream;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const std::uint32_t k = slots[i];
    if (i > 0) stream << "\n";
    stream << pi_update_line(task.keys[k], values[k][next_update[k]++]);
  }
  task.stream = stream.str();
  for (std::size_t k = 0; k < task.keys.size(); ++k) {
    task.truth[task.keys[k]] = values[k][static_cast<std::size_t>(n_updates) - 1];
  }
  return task;
}

PiScore score_pi(const std::string& answer, const PiTask& task) {
  PiScore result;
  std::map<std::string, std::string> reported;
  std::istringstream in(answer);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string value = lower(trim(line.substr(colon + 1)));
    if (key.empty() || value.empty()) continue;
    reported[key] = value;  // the answer's last line for a key wins
  }
  if (reported.empty()) {
    result.parse_warning = true;
    result.wrong_keys = task.keys;
    return result;
  }
  std::size_t correct = 0;
  for (const std::string& key : task.keys) {
    auto it = reported.find(lower(key));
    if (it != reported.end() && it->second == lower(task.truth.at(key))) {
      ++correct;
    } else {
      result.wrong_keys.push_back(key);
    }
  }
  result.fraction =
      static_cast<double>(correct) / static_cast<double>(task.keys.size());
  return result;
}

std::vector<std::string> pi_keys_missing_from(const std::string& visible_text,
                                              const PiTask& task) {
  std::vector<std::string> missing;
  for (const std::string& key : task.keys) {
    const std::string line = pi_update_line(key, task.truth.at(key));
    if (visible_text.find(line) == std::string::npos) missing.push_back(key);
  }
  return missing;
}

std::map<std::string, std::string> pi_visible_updates(
    const std::string& text) {
  constexpr std::string_view prefix = "The value of ";
  constexpr std::string_view infix = " is now ";
  std::map<std::string, std::string> latest;
  std::size_t pos = text.find(prefix);
  while (pos != std::string::npos) {
    const std::size_t key_begin = pos + prefix.size();
    const std::size_t infix_pos = text.find(infix, key_begin);
    const std::size_t next = text.find(prefix, pos + 1);
    if (infix_pos == std::string::npos) break;
    if (next != std::string::npos && infix_pos > next) {
      pos = next;  // torn line: no separator before the next update starts
      continue;
    }
    const std::size_t value_begin = infix_pos + infix.size();
    const std::size_t dot = text.find('.', value_begin);
    const std::string key = text.substr(key_begin, infix_pos - key_begin);
    if (dot == std::string::npos || !plain_lowercase(key)) {
      pos = next;
      continue;
    }
    const std::string value = text.substr(value_begin, dot - value_begin);
    if (plain_lowercase(value)) {
      latest[key] = value;  // later occurrences overwrite earlier ones
    }
    pos = next;
  }
  return latest;
}

NeedleTask gen_needle_task(int n_needles, std::size_t context_chars,
                           double depth, std::uint64_t seed) {
  if (n_needles < 2 || n_needles > 5) {
    throw Error(ErrorCode::schema_violation,
                "n_needles must be between 2 and 5");
  }
  if (depth < 0.0 || depth > 1.0) {
    throw Error(ErrorCode::schema_violation, "depth must be in [0, 1]");
  }

  std::mt19937_64 rng(seed);
  NeedleTask task;
  task.seed = seed;
  task.depth = depth;

  // One more person than needles: chain[0] is the subject, chain.back() the
  // oldest ancestor.
  std::vector<std::string> pool = needle_names();
  seeded_shuffle(pool, rng);
  std::vector<std::string> chain(pool.begin(), pool.begin() + n_needles + 1);
  for (int i = 0; i < n_needles; ++i) {
    const char* relation = bounded(rng, 2) == 0 ? "mother" : "father";
    task.needles.push_back(chain[static_cast<std::size_t>(i) + 1] + " is " +
                           chain[static_cast<std::size_t>(i)] + "'s " +
                           relation + ".");
  }
  task.answer = chain.back();
  task.question = "Given the information in the document, who is the oldest "
                  "ancestor of " +
                  chain.front() + "? Answer with the name only.";

  std::size_t needle_chars = 0;
  for (const std::string& needle : task.needles) {
    needle_chars += needle.size() + 1;  // trailing space after insertion
  }
  if (context_chars < needle_chars + 64) {
    throw Error(ErrorCode::size_error,
                "context of " + std::to_string(context_chars) +
                    " chars cannot hold " + std::to_string(n_needles) +
                    " needles");
  }

  const std::size_t filler_len = context_chars - needle_chars;
  std::string filler;
  filler.reserve(filler_len + 16);
  std::size_t words_in_sentence = 0;
  while (filler.size() < filler_len) {
    const std::string& word =
        filler_words()[bounded(rng, filler_words().size())];
    if (!filler.empty()) filler += ' ';
    filler += word;
    if (++words_in_sentence >= 12) {
      filler += '.';
      words_in_sentence = 0;
    }
  }
  filler.resize(filler_len);

  // Insert from the deepest position backwards so earlier targets stay valid;
  // positions snap back to word starts.
  const std::size_t start =
      static_cast<std::size_t>(depth * static_cast<double>(filler_len));
  const std::size_t gap =
      (filler_len - start) / static_cast<std::size_t>(n_needles);
  task.haystack = filler;
  for (int i = n_needles - 1; i >= 0; --i) {
    std::size_t target = start + static_cast<std::size_t>(i) * gap;
    target = std::min(target, task.haystack.size());
    while (target > 0 && task.haystack[target - 1] != ' ') --target;
    task.haystack.insert(target, task.needles[static_cast<std::size_t>(i)] + " ");
  }

  for (const std::string& needle : task.needles) {
    const std::size_t first = task.haystack.find(needle);
    if (first == std::string::npos ||
        task.haystack.find(needle, first + 1) != std::string::npos) {
      throw Error(ErrorCode::size_error,
                  "needle placement failed to be unique: " + needle);
    }
  }
  return task;
}

bool score_needle(const std::string& answer, const NeedleTask& task) {
  std::string normalized = trim(answer);
  if (!normalized.empty() && normalized.back() == '.') normalized.pop_back();
  return lower(trim(normalized)) == lower(task.answer);
}

ReductionReport context_reduction(const TrajectoryRecord& record) {
  ReductionReport report;
  report.initial_tokens = record.token_counts.initial_context;
  report.final_tokens = record.token_counts.final_context;
  if (report.initial_tokens > 0) {
    const double raw = 1.0 - static_cast<double>(report.final_tokens) /
                                 static_cast<double>(report.initial_tokens);
    report.reduction = std::clamp(raw, 0.0, 1.0);
  }
  return report;
}

std::string pi_task_user_message(const PiTask& task) {
  return task.stream +
         "\n\nWhat is the current value of each key? Reply with one line per "
         "key, formatted exactly as key: value.";
}

std::string needle_task_user_message(const NeedleTask& task) {
  return task.haystack + "\n\n" + task.question;
}

std::string_view system_prompt(std::string_view name) {
  static const std::string unified =
      "You are a helpful assistant. You can autonomously manage your own "
      "context: fold irrelevant information, focus on useful details, "
      "summarize long texts to keep your context concise, and use search "
      "tools to find key information in large documents.";
  static const std::string pi =
      "You are an intelligent assistant specialized for PI-LLM (Proactive "
      "Interference) testing. Your task is to track continuous updates to "
      "multiple key-value pairs and accurately remember the latest value for "
      "each key amidst substantial interference information.\n\nRemember: "
      "First use the fragment_context tool to split the long text into "
      "multiple fragments, then use fold_fragment to fold unimportant, "
      "earlier key-value updates, allowing you to concentrate on the final "
      "updates. The recommended approach is to divide the entire update "
      "stream into multiple fragments (e.g., ten fragments), then keep only "
      "the last two or three fragments while folding the rest. This strategy "
      "enables focus on the current, most recent content without being "
      "distracted by earlier information.";
  static const std::string needle =
      "You are an agent skilled at analyzing family relationships between "
      "different people. You have \"search_context\" and \"get_search_detail\" "
      "tools. You excel at conducting chained searches for key information in "
      "long texts until you find complete information to reach your desired "
      "final answer.\n\nWhen searching for the oldest ancestor, ensure that "
      "every person name found has been verified through the search tools to "
      "confirm they truly have no higher-level ancestors before concluding "
      "your reasoning.";
  if (name == "unified") return unified;
  if (name == "pi") return pi;
  if (name == "needle") return needle;
  throw Error(ErrorCode::schema_violation,
              "unknown system prompt preset '" + std::string(name) + "'");
}

std::unique_ptr<ChatBackend> make_pi_fold_backend(int num_fragments,
                                                  int keep_last) {
  auto rule = [num_fragments, keep_last](
                  std::size_t step,
                  const ChatRequest& request) -> ChatResponse {
    const std::string call_id = "call_" + std::to_string(step + 1);

    // Locate the fragment listing and count folds already confirmed.
    std::string fragment_listing;
    int folds_done = 0;
    for (const Message& msg : request.messages) {
      if (msg.role != Role::tool) continue;
      if (msg.content.rfind("Created ", 0) == 0) fragment_listing = msg.content;
      if (msg.content.rfind("Folded fragment ", 0) == 0) ++folds_done;
    }

    if (fragment_listing.empty()) {
      // First step: fragment the update stream between its first and last
      // update lines.
      const Message& task = last_message_of_role(request.messages, Role::user);
      std::istringstream in(task.content);
      std::string line;
      std::string first_line;
      std::string last_line;
      while (std::getline(in, line)) {
        if (line.rfind("The value of ", 0) != 0) continue;
        if (first_line.empty()) first_line = line;
        last_line = line;
      }
      return make_tool_call_response(call_id, "fragment_context",
                                     Json{{"start_marker", first_line},
                                          {"end_marker", last_line},
                                          {"num_fragments", num_fragments},
                                          {"role", "user"}});
    }

    const std::vector<std::string> ids =
        parse_bracket_ids(fragment_listing, 'f');
    const int target_folds =
        std::max(0, static_cast<int>(ids.size()) - keep_last);
    if (folds_done < target_folds) {
      return make_tool_call_response(
          call_id, "fold_fragment",
          Json{{"fragment_id", ids[static_cast<std::size_t>(folds_done)]}});
    }

    // Answer from whatever survived folding.
    const Message& task = last_message_of_role(request.messages, Role::user);
    const std::map<std::string, std::string> latest =
        pi_visible_updates(task.content);
    std::ostringstream answer;
    bool first = true;
    for (const auto& [key, value] : latest) {
      if (!first) answer << "\n";
      answer << key << ": " << value;
      first = false;
    }
    return make_answer_response(answer.str());
  };
  return std::make_unique<RuleBackend>(rule);
}

std::unique_ptr<ChatBackend> make_needle_chain_backend() {
  auto rule = [](std::size_t step, const ChatRequest& request) -> ChatResponse {
    const std::string call_id = "call_" + std::to_string(step + 1);

    // Person currently being traced: the subject of the last search issued.
    auto current_person = [&request]() -> std::string {
      for (auto it = request.messages.rbegin(); it != request.messages.rend();
           ++it) {
        for (const ToolCall& call : it->tool_calls) {
          if (call.name != "search_context") continue;
          const std::string query = call.arguments.value("query", "");
          // query shape: is <Name>'s
          if (query.rfind("is ", 0) == 0 && query.size() > 5) {
            return query.substr(3, query.size() - 5);
          }
        }
      }
      return {};
    };
    auto search_for = [&call_id](const std::string& person) {
      return make_tool_call_response(call_id, "search_context",
                                     Json{{"query", "is " + person + "'s"},
                                          {"role", "user"},
                                          {"max_results", 10},
                                          {"context_size", 200}});
    };

    const Message* last_tool = nullptr;
    for (auto it = request.messages.rbegin(); it != request.messages.rend();
         ++it) {
      if (it->role == Role::tool) {
        last_tool = &*it;
        break;
      }
    }

    if (last_tool == nullptr) {
      // First step: pull the subject out of the question.
      const Message& task = last_message_of_role(request.messages, Role::user);
      constexpr std::string_view anchor = "oldest ancestor of ";
      const std::size_t pos = task.content.find(anchor);
      if (pos == std::string::npos) {
        return make_answer_response("The question names no subject.");
      }
      std::size_t end = pos + anchor.size();
      while (end < task.content.size() &&
             std::isalpha(static_cast<unsigned char>(task.content[end]))) {
        ++end;
      }
      return search_for(task.content.substr(pos + anchor.size(),
                                            end - (pos + anchor.size())));
    }

    if (last_tool->content.rfind("Found 0", 0) == 0) {
      // Nobody is recorded as this person's parent: end of the chain.
      return make_answer_response(current_person());
    }
    if (last_tool->content.rfind("Found ", 0) == 0) {
      const std::vector<std::string> hits =
          parse_bracket_ids(last_tool->content, 's');
      if (hits.empty()) return make_answer_response(current_person());
      return make_tool_call_response(call_id, "get_search_detail",
                                     Json{{"search_id", hits.front()},
                                          {"extended_context", 500}});
    }
    if (last_tool->content.rfind("Detail for ", 0) == 0) {
      // Parent name directly precedes "is <current>'s" in the detail text.
      const std::string person = current_person();
      const std::string pattern = " is " + person + "'s";
      const std::size_t pos = last_tool->content.find(pattern);
      if (pos == std::string::npos) return make_answer_response(person);
      std::size_t begin = pos;
      while (begin > 0 && std::isalpha(static_cast<unsigned char>(
                              last_tool->content[begin - 1]))) {
        --begin;
      }
      return search_for(last_tool->content.substr(begin, pos - begin));
    }
    return make_answer_response(current_person());
  };
  return std::make_unique<RuleBackend>(rule);
}

std::unique_ptr<ChatBackend> make_direct_answer_backend(std::string answer) {
  auto rule = [answer = std::move(answer)](std::size_t,
                                           const ChatRequest&) {
    return make_answer_response(answer);
  };
  return std::make_unique<RuleBackend>(rule);
}

Json pi_task_to_json(const PiTask& task) {
  Json value;
  value["kind"] = "pi";
  value["seed"] = task.seed;
  value["updates_per_key"] = task.updates_per_key;
  value["keys"] = task.keys;
  value["stream"] = task.stream;
  Json truth = Json::object();
  for (const auto& [key, val] : task.truth) truth[key] = val;
  value["truth"] = std::move(truth);
  return value;
}

PiTask pi_task_from_json(const Json& value) {
  PiTask task;
  task.seed = value.at("seed").get<std::uint64_t>();
  task.updates_per_key = value.at("updates_per_key").get<int>();
  task.keys = value.at("keys").get<std::vector<std::string>>();
  task.stream = value.at("stream").get<std::string>();
  for (const auto& [key, val] : value.at("truth").items()) {
    task.truth[key] = val.get<std::string>();
  }
  return task;
}

Json needle_task_to_json(const NeedleTask& task) {
  Json value;
  value["kind"] = "needle";
  value["seed"] = task.seed;
  value["depth"] = task.depth;
  value["needles"] = task.needles;
  value["question"] = task.question;
  value["answer"] = task.answer;
  value["haystack"] = task.haystack;
  return value;
}

NeedleTask needle_task_from_json(const Json& value) {
  NeedleTask task;
  task.seed = value.at("seed").get<std::uint64_t>();
  task.depth = value.at("depth").get<double>();
  task.needles = value.at("needles").get<std::vector<std::string>>();
  task.question = value.at("question").get<std::string>();
  task.answer = value.at("answer").get<std::string>();
  task.haystack = value.at("haystack").get<std::string>();
  return task;
}

}  // namespace acm
