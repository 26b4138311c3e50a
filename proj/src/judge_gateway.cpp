#include "jurykit/judge_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace jurykit {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool iequals_at(std::string_view text, std::size_t pos, std::string_view token) {
  if (pos + token.size() > text.size()) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
        std::tolower(static_cast<unsigned char>(token[i])))
      return false;
  }
  return true;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

TelemetryRecord telemetry_from_json(const json& doc) {
  TelemetryRecord telemetry;
  telemetry.cost_usd = doc.value("cost_usd", 0.0);
  telemetry.latency_ms = doc.value("latency_ms", 0.0);
  telemetry.input_tokens = doc.value("input_tokens", std::int64_t{0});
  telemetry.output_tokens = doc.value("output_tokens", std::int64_t{0});
  telemetry.provider_reported = doc.value("provider_reported", false);
  return telemetry;
}

}  // namespace

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Unusable: return "unusable";
  }
  return "unusable";
}

Verdict verdict_from_string(const std::string& value) {
  if (value == "pass") return Verdict::Pass;
  if (value == "fail") return Verdict::Fail;
  if (value == "unusable") return Verdict::Unusable;
  throw MalformedDocument("unknown verdict: \"" + value + "\"");
}

JuryPool parse_pool(const std::string& raw) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception& ex) {
    throw MalformedDocument(ex.what());
  }
  JuryPool pool;
  if (!doc.contains("pool_id")) throw MissingField("pool_id");
  pool.pool_id = doc["pool_id"].get<std::string>();
  if (!doc.contains("judges")) throw MissingField("judges");
  pool.judges = doc["judges"].get<std::vector<std::string>>();
  pool.endpoint = doc.value("endpoint", std::string{});
  pool.auth_env = doc.value("auth_env", std::string{});

  if (pool.judges.size() != kJurySize)
    throw MalformedDocument("pool \"" + pool.pool_id + "\" must list exactly " +
                            std::to_string(kJurySize) + " judges");
  std::set<std::string> distinct(pool.judges.begin(), pool.judges.end());
  if (distinct.size() != kJurySize)
    throw MalformedDocument("pool \"" + pool.pool_id + "\" has duplicate judge ids");
  return pool;
}

JuryPool load_pool(const std::filesystem::path& path) {
  try {
    return parse_pool(read_file(path));
  } catch (const MalformedDocument& ex) {
    throw MalformedDocument(path.string() + ": " + ex.what());
  }
}

nlohmann::json pool_to_json(const JuryPool& pool) {
  return json{{"pool_id", pool.pool_id},
              {"judges", pool.judges},
              {"endpoint", pool.endpoint},
              {"auth_env", pool.auth_env}};
}

std::vector<ChatMessage> build_judge_prompt(const JudgeRequest& request) {
  static const char* kSystem =
      "You are one judge on a grading jury. You will be shown a task prompt, "
      "one grading criterion, and a candidate submission. Decide whether the "
      "submission satisfies the criterion. Judge only the stated criterion; "
      "ignore unrelated flaws. You may explain your reasoning first. End your "
      "reply with a single line containing exactly \"VERDICT: PASS\" or "
      "\"VERDICT: FAIL\".";

  std::string user;
  user += "=== TASK PROMPT ===\n";
  user += request.task_prompt;
  user += "\n";
  if (!request.references.empty()) {
    user += "\n=== REFERENCES ===\n";
    for (const ReferenceFile& ref : request.references) {
      user += "- " + ref.name + " (" + to_string(ref.kind) + "): " + ref.path + "\n";
    }
  }
  user += "\n=== CRITERION ===\n";
  user += request.criterion_instruction;
  user += "\n\n=== SUBMISSION ===\n";
  user += request.submission_text;
  user += "\n";

  return {{"system", kSystem}, {"user", std::move(user)}};
}

std::pair<Verdict, std::string> parse_verdict(std::string_view raw) {
  constexpr std::string_view kMarker = "VERDICT:";
  std::size_t best_pos = std::string_view::npos;
  Verdict best_verdict = Verdict::Unusable;
  std::size_t best_end = 0;

  for (std::size_t pos = 0; pos + kMarker.size() <= raw.size(); ++pos) {
    if (!iequals_at(raw, pos, kMarker)) continue;
    std::size_t cursor = pos + kMarker.size();
    while (cursor < raw.size() && (raw[cursor] == ' ' || raw[cursor] == '\t')) ++cursor;
    if (iequals_at(raw, cursor, "PASS")) {
      best_pos = pos;
      best_verdict = Verdict::Pass;
      best_end = cursor + 4;
    } else if (iequals_at(raw, cursor, "FAIL")) {
      best_pos = pos;
      best_verdict = Verdict::Fail;
      best_end = cursor + 4;
    }
  }

  if (best_pos == std::string_view::npos) {
    return {Verdict::Unusable, "no verdict marker"};
  }
  std::string rationale = trim(raw.substr(0, best_pos));
  const std::string tail = trim(raw.substr(best_end));
  if (!tail.empty()) {
    if (!rationale.empty()) rationale += "\n";
    rationale += tail;
  }
  return {best_verdict, rationale};
}

JudgeClient::JudgeClient(std::shared_ptr<JudgeBackend> backend, RetryPolicy policy,
                         Sleeper sleeper, std::uint64_t jitter_seed)
    : backend_(std::move(backend)),
      policy_(policy),
      sleeper_(std::move(sleeper)),
      rng_(jitter_seed) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds delay) {
      std::this_thread::sleep_for(delay);
    };
  }
}

std::chrono::milliseconds JudgeClient::backoff_delay(int attempt) {
  double step = static_cast<double>(policy_.base_delay.count());
  for (int i = 0; i < attempt; ++i) step *= policy_.factor;
  double jitter = 0.0;
  if (policy_.jitter > 0.0) {
    std::lock_guard lock(rng_mutex_);
    jitter = std::uniform_real_distribution<double>(0.0, policy_.jitter)(rng_);
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(step * (1.0 + jitter)));
}

BackendReply JudgeClient::call_judge(const JudgeCallContext& context,
                                     const std::vector<ChatMessage>& messages) {
  std::string last_error;
  for (int attempt = 0; attempt < policy_.max_attempts; ++attempt) {
    try {
      return backend_->complete(context, messages);
    } catch (const TransientBackendError& ex) {
      last_error = ex.what();
      if (attempt + 1 < policy_.max_attempts) sleeper_(backoff_delay(attempt));
    }
  }
  throw ExhaustedRetries("judge \"" + context.judge_id + "\" after " +
                         std::to_string(policy_.max_attempts) +
                         " attempts; last error: " + last_error);
}

void ScriptedBackend::add_entry(const std::string& judge_id,
                                const std::string& criterion_id, Entry entry) {
  std::lock_guard lock(mutex_);
  State state;
  state.remaining_failures = entry.fail_times;
  state.entry = std::move(entry);
  entries_[{judge_id, criterion_id}] = std::move(state);
}

void ScriptedBackend::set_default(Entry entry) {
  std::lock_guard lock(mutex_);
  default_ = std::move(entry);
}

BackendReply ScriptedBackend::complete(const JudgeCallContext& context,
                                       const std::vector<ChatMessage>&) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find({context.judge_id, context.criterion_id});
  if (it == entries_.end()) {
    if (!default_) throw MissingScriptEntry(context.judge_id, context.criterion_id);
    return {default_->response, default_->telemetry};
  }
  State& state = it->second;
  if (state.remaining_failures > 0) {
    --state.remaining_failures;
    throw TransientBackendError("scripted failure for judge \"" +
                                context.judge_id + "\"");
  }
  return {state.entry.response, state.entry.telemetry};
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& doc) {
  auto backend = std::make_shared<ScriptedBackend>();
  auto parse_entry = [](const json& node) {
    Entry entry;
    if (!node.contains("response")) throw MissingField("response");
    entry.response = node["response"].get<std::string>();
    entry.telemetry = telemetry_from_json(node);
    entry.fail_times = node.value("fail_times", 0);
    return entry;
  };
  if (doc.contains("default")) backend->set_default(parse_entry(doc["default"]));
  if (doc.contains("entries")) {
    for (const json& node : doc["entries"]) {
      if (!node.contains("judge_id")) throw MissingField("entries[].judge_id");
      if (!node.contains("criterion_id")) throw MissingField("entries[].criterion_id");
      backend->add_entry(node["judge_id"].get<std::string>(),
                         node["criterion_id"].get<std::string>(), parse_entry(node));
    }
  }
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw MalformedDocument(path.string() + ": " + ex.what());
  }
  return from_json(doc);
}

// --- HTTP transport ---

struct HttpJudgeBackend::Impl {
  explicit Impl(HttpBackendConfig cfg)
      : config(std::move(cfg)),
        in_flight(std::max(1, config.concurrency_cap)) {
    split_endpoint();
  }

  void split_endpoint() {
    // "https://host[:port]/base/path" -> client target + path prefix.
    const std::string& url = config.endpoint;
    std::size_t scheme_end = url.find("://");
    std::size_t path_start =
        scheme_end == std::string::npos ? url.find('/') : url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      client_target = url;
      path_prefix.clear();
    } else {
      client_target = url.substr(0, path_start);
      path_prefix = url.substr(path_start);
      while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
    }
  }

  HttpBackendConfig config;
  std::string client_target;
  std::string path_prefix;
  std::counting_semaphore<> in_flight;
};

HttpJudgeBackend::HttpJudgeBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpJudgeBackend::~HttpJudgeBackend() = default;

BackendReply HttpJudgeBackend::complete(const JudgeCallContext& context,
                                        const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = context.judge_id;
  json msgs = json::array();
  for (const ChatMessage& message : messages) {
    msgs.push_back({{"role", message.role}, {"content", message.content}});
  }
  body["messages"] = std::move(msgs);

  httplib::Headers headers = {{"Content-Type", "application/json"}};
  if (!impl_->config.auth_env.empty()) {
    const char* token = std::getenv(impl_->config.auth_env.c_str());
    if (token == nullptr || *token == '\0')
      throw AuthError("credential env var " + impl_->config.auth_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{impl_->in_flight};

  httplib::Client client(impl_->client_target);
  client.set_connection_timeout(impl_->config.connect_timeout);
  client.set_read_timeout(impl_->config.read_timeout);
  client.set_follow_location(true);

  const auto start = std::chrono::steady_clock::now();
  httplib::Result result = client.Post(impl_->path_prefix + "/chat/completions",
                                       headers, body.dump(), "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - start;

  TelemetryRecord telemetry;
  telemetry.latency_ms =
      std::chrono::duration<double, std::milli>(elapsed).count();

  if (!result) {
    throw TransientBackendError("transport failure: " +
                                httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403) {
    throw AuthError("endpoint rejected credentials (HTTP " +
                    std::to_string(result->status) + ")");
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransientBackendError("HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    throw PermanentBackendError("HTTP " + std::to_string(result->status) + ": " +
                                result->body);
  }

  json doc;
  try {
    doc = json::parse(result->body);
  } catch (const json::exception& ex) {
    throw TransientBackendError(std::string("unparseable response body: ") + ex.what());
  }
  if (!doc.contains("choices") || doc["choices"].empty() ||
      !doc["choices"][0].contains("message")) {
    throw TransientBackendError("response has no choices[0].message");
  }

  BackendReply reply;
  reply.text = doc["choices"][0]["message"].value("content", std::string{});
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& usage = doc["usage"];
    telemetry.input_tokens = usage.value("prompt_tokens", std::int64_t{0});
    telemetry.output_tokens = usage.value("completion_tokens", std::int64_t{0});
    if (usage.contains("cost") && usage["cost"].is_number()) {
      telemetry.cost_usd = usage["cost"].get<double>();
      telemetry.provider_reported = true;
    }
  }
  reply.telemetry = telemetry;
  return reply;
}

}  // namespace jurykit
