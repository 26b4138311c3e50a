#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jurykit/errors.hpp"

namespace jurykit {

enum class GraderType { ExactMatch, LlmJudge };

enum class MediaKind { Image, Document, Text };

std::string to_string(GraderType type);
std::string to_string(MediaKind kind);

/// Accepts both stylings ("ExactMatch"/"exact-match", "llm-judge"/"LlmJudge"),
/// case-insensitively. Throws BadGraderType for anything else.
GraderType parse_grader_type(const std::string& value);
MediaKind parse_media_kind(const std::string& value);

struct ReferenceFile {
  std::string name;
  MediaKind kind = MediaKind::Text;
  std::string path;

  friend bool operator==(const ReferenceFile&, const ReferenceFile&) = default;
};

struct Criterion {
  std::string criterion_id;
  GraderType grader_type = GraderType::ExactMatch;
  /// For ExactMatch: the reference lookup value. For LlmJudge: the judging
  /// instruction handed to every juror.
  std::string semantic_prompt;
  /// Raw weight before normalization, 0-100-scale weight after.
  double weight = 0.0;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

/// One task's grading policy: what is graded, how each criterion is judged,
/// and the decision rule that turns criterion outcomes into a task outcome.
struct EvaluationContract {
  std::string task_id;
  std::string task_prompt;
  std::vector<ReferenceFile> reference_files;
  std::vector<Criterion> criteria;
  double pass_threshold = 0.0;
  /// Free-form provenance; inert for grading. Unknown document fields are
  /// folded in here by parse_bundle.
  nlohmann::json metadata = nlohmann::json::object();

  friend bool operator==(const EvaluationContract&, const EvaluationContract&) = default;
};

struct Violation {
  std::string path;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool runnable() const { return violations.empty(); }
};

/// Parses one contract document. Unknown top-level fields are preserved into
/// metadata. Throws MalformedDocument, MissingField or BadGraderType.
EvaluationContract parse_bundle(const std::string& raw);

/// Inverse of parse_bundle up to field equality: parse(serialize(c)) == c.
std::string serialize_bundle(const EvaluationContract& contract);

/// Rescales criterion weights onto the 0-100 scale: w' = 100 * w / sum(w).
/// Idempotent and ratio-preserving. Throws ZeroTotalWeight when sum(w) == 0.
EvaluationContract normalize_weights(const EvaluationContract& contract);

/// Lists every violated invariant with its field path. An empty report means
/// the contract is runnable.
ValidationReport validate_contract(const EvaluationContract& contract);

/// Cross-document invariants over a bundle set (duplicate task ids).
ValidationReport validate_bundle_set(const std::vector<EvaluationContract>& contracts);

/// Loads one contract file or every *.json contract document in a directory
/// (the references/ subdirectory is skipped). Results are ordered by task_id.
/// Throws IoError when the path is unreadable or contains no documents.
std::vector<EvaluationContract> load_bundle(const std::filesystem::path& path);

}  // namespace jurykit
