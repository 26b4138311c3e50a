#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jurykit/contract.hpp"
#include "jurykit/grading.hpp"

namespace jurykit {

inline constexpr int kTraceSchemaVersion = 1;

/// Task flags that exclude a task from grading and analytics.
bool is_error_flag(const std::string& flag);

inline const char* kFlagMissingSubmission = "missing_submission";
inline const char* kFlagEmptyResults = "empty_results";
inline const char* kFlagVerifierError = "verifier_error";

/// Everything recorded for one task: the contract snapshot, the submission
/// under audit, per-pool results with votes and telemetry, and error flags.
struct TaskRecord {
  std::string task_id;
  EvaluationContract contract;
  std::optional<Submission> submission;
  std::vector<std::string> flags;
  std::map<std::string, TaskResult> results;  // keyed by pool_id
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved

  bool errored() const;

  friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

struct RunTrace {
  std::string run_id;
  std::string solver_id;
  std::vector<JuryPool> pools;
  std::vector<TaskRecord> tasks;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

struct ManifestEntry {
  std::string task_id;
  std::vector<std::string> flags;
  bool graded = false;
};

struct TraceManifest {
  std::string run_id;
  std::string solver_id;
  std::vector<ManifestEntry> tasks;
};

/// Writes <root>/<run_id>/<task_id>/detail.json per task plus a run-level
/// manifest. Each document is written temp-then-rename, so readers never
/// observe partial files.
TraceManifest write_trace(const RunTrace& run, const std::filesystem::path& root);

/// Full reconstruction; unknown fields preserved. Throws CorruptTrace when
/// the manifest or a listed task document is missing or unparseable.
RunTrace read_trace(const std::filesystem::path& root, const std::string& run_id);

/// Recomputes each task score using pool_id's stored votes for llm-judge
/// criteria and the stored ExactMatch outcomes. Error-flagged tasks are
/// omitted. Throws MissingPoolVotes naming the criterion.
std::map<std::string, double> replay_scores(const RunTrace& trace,
                                            const std::string& pool_id);

// JSON encoding shared with the trace documents (also used by reports).
nlohmann::json telemetry_to_json(const TelemetryRecord& telemetry);
TelemetryRecord telemetry_from_json(const nlohmann::json& doc);
nlohmann::json task_result_to_json(const TaskResult& result);
TaskResult task_result_from_json(const nlohmann::json& doc);

}  // namespace jurykit
