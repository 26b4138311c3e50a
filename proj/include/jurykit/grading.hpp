#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jurykit/contract.hpp"
#include "jurykit/judge_gateway.hpp"

namespace jurykit {

enum class Decision { Pass, Fail };

enum class VotePattern { Unanimous, OneDissenter, Split, Reduced, NotApplicable };

std::string to_string(Decision decision);
std::string to_string(VotePattern pattern);
Decision decision_from_string(const std::string& value);
VotePattern vote_pattern_from_string(const std::string& value);

/// The final candidate answer text produced by a solver for one task.
struct Submission {
  std::string task_id;
  std::string solver_id;
  std::string text;
  std::int64_t char_count = 0;

  static Submission make(std::string task_id, std::string solver_id, std::string text);

  friend bool operator==(const Submission&, const Submission&) = default;
};

/// One judge's binary verdict plus rationale and call telemetry.
struct JudgeVote {
  std::string judge_id;
  Verdict verdict = Verdict::Unusable;
  std::string rationale;  // Unusable votes carry the reason here
  TelemetryRecord telemetry;

  friend bool operator==(const JudgeVote&, const JudgeVote&) = default;
};

struct CriterionResult {
  std::string criterion_id;
  GraderType grader_type = GraderType::ExactMatch;
  Decision decision = Decision::Fail;
  double awarded_weight = 0.0;
  std::vector<JudgeVote> votes;               // empty for ExactMatch
  std::optional<std::string> extracted_answer;  // ExactMatch only
  VotePattern vote_pattern = VotePattern::NotApplicable;

  friend bool operator==(const CriterionResult&, const CriterionResult&) = default;
};

struct TaskResult {
  std::string task_id;
  std::string solver_id;
  std::string pool_id;
  double score = 0.0;  // 0-100
  bool passed = false;
  std::vector<CriterionResult> criterion_results;
  std::vector<std::string> flags;  // e.g. judge_panel_empty:<criterion_id>

  friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

/// Returns the remainder of the last line starting (case-insensitively, after
/// optional whitespace) with "ANSWER:". Falls back to the last non-empty
/// line; empty input yields an empty answer.
std::string extract_terminal_answer(std::string_view text);

/// Canonical comparison form: trimmed, whitespace runs collapsed to one
/// space, lowercased, trailing sentence punctuation (. ! ?) stripped.
std::string normalize_answer(std::string_view answer);

CriterionResult grade_exact_match(const Criterion& criterion,
                                  const Submission& submission);

/// Strict majority over usable votes; ties fail; an empty usable panel fails.
Decision jury_consensus(const std::vector<JudgeVote>& votes);

/// Exactly 5 usable votes map |#pass - #fail| 5/3/1 onto
/// Unanimous/OneDissenter/Split; anything else is Reduced.
VotePattern classify_vote_pattern(const std::vector<JudgeVote>& votes);

struct GradeOptions {
  /// Upper bound on concurrently issued judge calls for one task.
  std::size_t concurrency = 10;
};

/// Grades every criterion independently: ExactMatch locally, LlmJudge with
/// one call per pool judge. Gateway faults degrade to Unusable votes and a
/// task flag; configuration faults (AuthError, MissingScriptEntry) propagate.
TaskResult grade_task(const EvaluationContract& contract, const Submission& submission,
                      const JuryPool& pool, JudgeClient& client,
                      const GradeOptions& options = {});

}  // namespace jurykit
