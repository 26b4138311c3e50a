#include "jurykit/contract.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace jurykit {

namespace {

using nlohmann::json;

std::string lower_alnum(const std::string& value) {
  std::string out;
  out.reserve(value.size());
  for (unsigned char c : value) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const json* find_key(const json& doc, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (auto it = doc.find(name); it != doc.end()) return &*it;
  }
  return nullptr;
}

std::string require_string(const json& doc, std::initializer_list<const char*> names,
                           const std::string& field) {
  const json* value = find_key(doc, names);
  if (value == nullptr) throw MissingField(field);
  if (!value->is_string())
    throw MalformedDocument(field + " must be a string");
  return value->get<std::string>();
}

double require_number(const json& doc, std::initializer_list<const char*> names,
                      const std::string& field) {
  const json* value = find_key(doc, names);
  if (value == nullptr) throw MissingField(field);
  if (!value->is_number())
    throw MalformedDocument(field + " must be a number");
  return value->get<double>();
}

ReferenceFile parse_reference(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw MalformedDocument(path + " must be an object");
  ReferenceFile ref;
  ref.name = require_string(doc, {"name"}, path + ".name");
  ref.kind = parse_media_kind(require_string(doc, {"kind", "media_kind"}, path + ".kind"));
  ref.path = require_string(doc, {"path"}, path + ".path");
  return ref;
}

Criterion parse_criterion(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw MalformedDocument(path + " must be an object");
  Criterion criterion;
  criterion.criterion_id = require_string(doc, {"criterion_id"}, path + ".criterion_id");
  criterion.grader_type =
      parse_grader_type(require_string(doc, {"grader_type"}, path + ".grader_type"));
  criterion.semantic_prompt = require_string(
      doc, {"semanticPrompt", "semantic_prompt"}, path + ".semantic_prompt");
  criterion.weight = require_number(doc, {"weight"}, path + ".weight");
  return criterion;
}

}  // namespace

std::string to_string(GraderType type) {
  return type == GraderType::ExactMatch ? "ExactMatch" : "llm-judge";
}

std::string to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::Image: return "image";
    case MediaKind::Document: return "document";
    case MediaKind::Text: return "text";
  }
  return "text";
}

GraderType parse_grader_type(const std::string& value) {
  const std::string key = lower_alnum(value);
  if (key == "exactmatch") return GraderType::ExactMatch;
  if (key == "llmjudge") return GraderType::LlmJudge;
  throw BadGraderType(value);
}

MediaKind parse_media_kind(const std::string& value) {
  const std::string key = lower_alnum(value);
  if (key == "image") return MediaKind::Image;
  if (key == "document") return MediaKind::Document;
  if (key == "text") return MediaKind::Text;
  throw MalformedDocument("unknown reference media kind: \"" + value + "\"");
}

EvaluationContract parse_bundle(const std::string& raw) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception& ex) {
    throw MalformedDocument(ex.what());
  }
  if (!doc.is_object()) throw MalformedDocument("top level must be an object");

  EvaluationContract contract;
  contract.task_id = require_string(doc, {"task_id"}, "task_id");
  contract.task_prompt = require_string(doc, {"task_prompt"}, "task_prompt");

  if (const json* refs = find_key(doc, {"reference_file", "reference_files"})) {
    if (!refs->is_array())
      throw MalformedDocument("reference_file must be an array");
    for (std::size_t i = 0; i < refs->size(); ++i) {
      contract.reference_files.push_back(
          parse_reference((*refs)[i], "reference_file[" + std::to_string(i) + "]"));
    }
  }

  const json* criteria = find_key(doc, {"criteria"});
  if (criteria == nullptr) throw MissingField("criteria");
  if (!criteria->is_array()) throw MalformedDocument("criteria must be an array");
  for (std::size_t i = 0; i < criteria->size(); ++i) {
    contract.criteria.push_back(
        parse_criterion((*criteria)[i], "criteria[" + std::to_string(i) + "]"));
  }

  contract.pass_threshold =
      require_number(doc, {"passThreshold", "pass_threshold"}, "pass_threshold");

  if (const json* metadata = find_key(doc, {"metadata"})) {
    if (!metadata->is_object())
      throw MalformedDocument("metadata must be an object");
    contract.metadata = *metadata;
  }

  // Unknown top-level fields are kept as inert provenance.
  static const std::set<std::string> known = {
      "task_id",       "task_prompt",   "reference_file", "reference_files",
      "criteria",      "passThreshold", "pass_threshold", "metadata"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) contract.metadata[key] = value;
  }
  return contract;
}

std::string serialize_bundle(const EvaluationContract& contract) {
  json doc = json::object();
  doc["task_id"] = contract.task_id;
  doc["task_prompt"] = contract.task_prompt;
  json refs = json::array();
  for (const ReferenceFile& ref : contract.reference_files) {
    refs.push_back({{"name", ref.name},
                    {"kind", to_string(ref.kind)},
                    {"path", ref.path}});
  }
  doc["reference_file"] = refs;
  json criteria = json::array();
  for (const Criterion& criterion : contract.criteria) {
    criteria.push_back({{"criterion_id", criterion.criterion_id},
                        {"grader_type", to_string(criterion.grader_type)},
                        {"semanticPrompt", criterion.semantic_prompt},
                        {"weight", criterion.weight}});
  }
  doc["criteria"] = criteria;
  doc["passThreshold"] = contract.pass_threshold;
  doc["metadata"] = contract.metadata;
  return doc.dump(2);
}

EvaluationContract normalize_weights(const EvaluationContract& contract) {
  double total = 0.0;
  for (const Criterion& criterion : contract.criteria) total += criterion.weight;
  if (total <= 0.0) throw ZeroTotalWeight();

  EvaluationContract normalized = contract;
  for (Criterion& criterion : normalized.criteria) {
    criterion.weight = 100.0 * criterion.weight / total;
  }
  return normalized;
}

ValidationReport validate_contract(const EvaluationContract& contract) {
  ValidationReport report;
  auto add = [&report](std::string path, std::string message) {
    report.violations.push_back({std::move(path), std::move(message)});
  };

  if (contract.task_id.empty()) add("task_id", "must be non-empty");
  if (contract.criteria.empty()) add("criteria", "at least one criterion required");
  if (contract.pass_threshold < 0.0 || contract.pass_threshold > 100.0)
    add("pass_threshold", "out of [0,100]");

  bool any_positive_weight = false;
  bool any_llm_judge = false;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < contract.criteria.size(); ++i) {
    const Criterion& criterion = contract.criteria[i];
    const std::string path = "criteria[" + std::to_string(i) + "]";
    if (criterion.semantic_prompt.empty())
      add(path + ".semantic_prompt",
          "must be non-empty (criterion \"" + criterion.criterion_id + "\")");
    if (criterion.weight < 0.0)
      add(path + ".weight",
          "must be non-negative (criterion \"" + criterion.criterion_id + "\")");
    if (criterion.weight > 0.0) any_positive_weight = true;
    if (criterion.grader_type == GraderType::LlmJudge) any_llm_judge = true;
    if (!seen_ids.insert(criterion.criterion_id).second)
      add(path + ".criterion_id",
          "duplicate criterion id \"" + criterion.criterion_id + "\"");
  }
  if (!contract.criteria.empty() && !any_positive_weight)
    add("criteria", "at least one criterion must have weight > 0");
  if (any_llm_judge && contract.task_prompt.empty())
    add("task_prompt", "must be non-empty when llm-judge criteria are present");

  for (std::size_t i = 0; i < contract.reference_files.size(); ++i) {
    if (contract.reference_files[i].name.empty())
      add("reference_file[" + std::to_string(i) + "].name", "must be non-empty");
  }
  return report;
}

ValidationReport validate_bundle_set(const std::vector<EvaluationContract>& contracts) {
  ValidationReport report;
  std::set<std::string> seen;
  for (const EvaluationContract& contract : contracts) {
    if (!seen.insert(contract.task_id).second) {
      report.violations.push_back(
          {"task_id", "duplicate task id \"" + contract.task_id + "\" in bundle set"});
    }
  }
  return report;
}

std::vector<EvaluationContract> load_bundle(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("path does not exist: " + path.string());

  std::vector<fs::path> files;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty())
    throw IoError("no contract documents found under " + path.string());

  std::vector<EvaluationContract> contracts;
  for (const fs::path& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      contracts.push_back(parse_bundle(buffer.str()));
    } catch (const Error& ex) {
      throw MalformedDocument(file.string() + ": " + ex.what());
    }
  }
  std::sort(contracts.begin(), contracts.end(),
            [](const EvaluationContract& a, const EvaluationContract& b) {
              return a.task_id < b.task_id;
            });
  return contracts;
}

}  // namespace jurykit
