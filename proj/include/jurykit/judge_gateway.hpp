#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jurykit/contract.hpp"
#include "jurykit/errors.hpp"

namespace jurykit {

inline constexpr std::size_t kJurySize = 5;

enum class Verdict { Pass, Fail, Unusable };

std::string to_string(Verdict verdict);
Verdict verdict_from_string(const std::string& value);

/// Fixed panel of five judge models plus the endpoint that serves them.
struct JuryPool {
  std::string pool_id;
  std::vector<std::string> judges;  // exactly 5 distinct ids
  std::string endpoint;             // chat-completion base URL
  std::string auth_env;             // env var holding the bearer token

  friend bool operator==(const JuryPool&, const JuryPool&) = default;
};

/// Throws MalformedDocument unless the pool has exactly 5 distinct judges.
JuryPool parse_pool(const std::string& raw);
JuryPool load_pool(const std::filesystem::path& path);
nlohmann::json pool_to_json(const JuryPool& pool);

/// Per-call accounting measured around the full HTTP exchange.
struct TelemetryRecord {
  double cost_usd = 0.0;
  double latency_ms = 0.0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  /// True when the provider reported cost metadata; we never estimate cost.
  bool provider_reported = false;

  std::int64_t total_tokens() const { return input_tokens + output_tokens; }

  friend bool operator==(const TelemetryRecord&, const TelemetryRecord&) = default;
};

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// What one judge sees: the task, the candidate submission, and the
/// criterion-specific instruction, plus descriptors of any references.
struct JudgeRequest {
  std::string task_prompt;
  std::string submission_text;
  std::string criterion_instruction;
  std::vector<ReferenceFile> references;
};

/// Deterministic message sequence for one judge call. The judge is told to
/// end with a single line "VERDICT: PASS" or "VERDICT: FAIL".
std::vector<ChatMessage> build_judge_prompt(const JudgeRequest& request);

/// Scans for the last "VERDICT: PASS|FAIL" marker (case-insensitive). The
/// surrounding text becomes the rationale. No marker -> Unusable. Total over
/// all inputs; never throws.
std::pair<Verdict, std::string> parse_verdict(std::string_view raw);

struct JudgeCallContext {
  std::string judge_id;
  std::string task_id;
  std::string criterion_id;
};

struct BackendReply {
  std::string text;
  TelemetryRecord telemetry;
};

/// One judge transport. Implementations throw TransientBackendError for
/// retryable faults, PermanentBackendError for terminal per-call faults and
/// AuthError for configuration faults.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual BackendReply complete(const JudgeCallContext& context,
                                const std::vector<ChatMessage>& messages) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  /// Additive jitter as a fraction of the step delay, drawn from [0, jitter).
  /// Keeps per-attempt delays non-decreasing.
  double jitter = 0.25;
};

/// Wraps any backend with the retry contract: transient failures are retried
/// up to max_attempts with exponential backoff, then ExhaustedRetries.
class JudgeClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit JudgeClient(std::shared_ptr<JudgeBackend> backend,
                       RetryPolicy policy = {}, Sleeper sleeper = {},
                       std::uint64_t jitter_seed = std::random_device{}());

  BackendReply call_judge(const JudgeCallContext& context,
                          const std::vector<ChatMessage>& messages);

 private:
  std::chrono::milliseconds backoff_delay(int attempt);

  std::shared_ptr<JudgeBackend> backend_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// Canned judge responses keyed by (judge_id, criterion_id); enables fully
/// offline, deterministic runs.
class ScriptedBackend : public JudgeBackend {
 public:
  struct Entry {
    std::string response;
    TelemetryRecord telemetry;
    /// Number of transient failures to simulate before succeeding.
    int fail_times = 0;
  };

  void add_entry(const std::string& judge_id, const std::string& criterion_id,
                 Entry entry);
  void set_default(Entry entry);

  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& doc);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  BackendReply complete(const JudgeCallContext& context,
                        const std::vector<ChatMessage>& messages) override;

 private:
  struct State {
    Entry entry;
    int remaining_failures = 0;
  };

  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, State> entries_;
  std::optional<Entry> default_;
};

struct HttpBackendConfig {
  std::string endpoint;  // base URL, e.g. https://openrouter.ai/api/v1
  std::string auth_env;  // env var with the bearer token; empty -> no header
  int concurrency_cap = 10;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{120};
};

/// OpenAI-compatible chat-completion transport. POSTs to
/// <endpoint>/chat/completions and reads choices[0].message.content plus
/// usage metadata when present.
class HttpJudgeBackend : public JudgeBackend {
 public:
  explicit HttpJudgeBackend(HttpBackendConfig config);
  ~HttpJudgeBackend() override;

  BackendReply complete(const JudgeCallContext& context,
                        const std::vector<ChatMessage>& messages) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace jurykit
