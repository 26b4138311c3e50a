#include "jurykit/trace_store.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace jurykit {

namespace {

using nlohmann::json;

json contract_to_json(const EvaluationContract& contract) {
  return json::parse(serialize_bundle(contract));
}

EvaluationContract contract_from_json(const json& doc) {
  return parse_bundle(doc.dump());
}

json vote_to_json(const JudgeVote& vote) {
  return json{{"judge_id", vote.judge_id},
              {"verdict", to_string(vote.verdict)},
              {"rationale", vote.rationale},
              {"telemetry", telemetry_to_json(vote.telemetry)}};
}

JudgeVote vote_from_json(const json& doc) {
  JudgeVote vote;
  vote.judge_id = doc.at("judge_id").get<std::string>();
  vote.verdict = verdict_from_string(doc.at("verdict").get<std::string>());
  vote.rationale = doc.value("rationale", std::string{});
  if (doc.contains("telemetry")) vote.telemetry = telemetry_from_json(doc["telemetry"]);
  return vote;
}

json criterion_result_to_json(const CriterionResult& result) {
  json doc{{"criterion_id", result.criterion_id},
           {"grader_type", to_string(result.grader_type)},
           {"decision", to_string(result.decision)},
           {"awarded_weight", result.awarded_weight},
           {"vote_pattern", to_string(result.vote_pattern)}};
  if (result.extracted_answer) doc["extracted_answer"] = *result.extracted_answer;
  json votes = json::array();
  for (const JudgeVote& vote : result.votes) votes.push_back(vote_to_json(vote));
  doc["votes"] = std::move(votes);
  return doc;
}

CriterionResult criterion_result_from_json(const json& doc) {
  CriterionResult result;
  result.criterion_id = doc.at("criterion_id").get<std::string>();
  result.grader_type = parse_grader_type(doc.at("grader_type").get<std::string>());
  result.decision = decision_from_string(doc.at("decision").get<std::string>());
  result.awarded_weight = doc.at("awarded_weight").get<double>();
  result.vote_pattern = vote_pattern_from_string(doc.at("vote_pattern").get<std::string>());
  if (doc.contains("extracted_answer"))
    result.extracted_answer = doc["extracted_answer"].get<std::string>();
  for (const json& vote : doc.value("votes", json::array()))
    result.votes.push_back(vote_from_json(vote));
  return result;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
    if (!in) break;
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << content;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " +
                        ec.message());
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptTrace(path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw CorruptTrace(path.string() + ": " + ex.what());
  }
}

const std::set<std::string> kTaskDocKeys = {
    "schema_version", "task_id", "contract",       "reference_hashes",
    "submission",     "flags",   "results"};
const std::set<std::string> kManifestKeys = {
    "schema_version", "run_id", "solver_id", "pools", "tasks"};

json task_record_to_json(const TaskRecord& record) {
  json doc = record.extra.is_object() ? record.extra : json::object();
  doc["schema_version"] = kTraceSchemaVersion;
  doc["task_id"] = record.task_id;
  doc["contract"] = contract_to_json(record.contract);

  json hashes = json::object();
  for (const ReferenceFile& ref : record.contract.reference_files) {
    const std::string digest = file_sha256(ref.path);
    if (!digest.empty()) hashes[ref.name] = digest;
  }
  doc["reference_hashes"] = std::move(hashes);

  if (record.submission) {
    doc["submission"] = json{{"task_id", record.submission->task_id},
                             {"solver_id", record.submission->solver_id},
                             {"text", record.submission->text},
                             {"char_count", record.submission->char_count}};
  } else {
    doc["submission"] = nullptr;
  }
  doc["flags"] = record.flags;
  json results = json::object();
  for (const auto& [pool_id, result] : record.results)
    results[pool_id] = task_result_to_json(result);
  doc["results"] = std::move(results);
  return doc;
}

TaskRecord task_record_from_json(const json& doc, const std::string& path) {
  TaskRecord record;
  try {
    record.task_id = doc.at("task_id").get<std::string>();
    record.contract = contract_from_json(doc.at("contract"));
    if (doc.contains("submission") && !doc["submission"].is_null()) {
      const json& sub = doc["submission"];
      record.submission = Submission{};
      record.submission->task_id = sub.value("task_id", record.task_id);
      record.submission->solver_id = sub.value("solver_id", std::string{});
      record.submission->text = sub.value("text", std::string{});
      record.submission->char_count = sub.value("char_count", std::int64_t{0});
    }
    record.flags = doc.value("flags", std::vector<std::string>{});
    if (doc.contains("results")) {
      for (const auto& [pool_id, result] : doc["results"].items())
        record.results[pool_id] = task_result_from_json(result);
    }
    for (const auto& [key, value] : doc.items()) {
      if (!kTaskDocKeys.count(key)) record.extra[key] = value;
    }
    // reference_hashes is recomputed on write; keep it out of round-trip state.
  } catch (const json::exception& ex) {
    throw CorruptTrace(path + ": " + ex.what());
  }
  return record;
}

}  // namespace

bool is_error_flag(const std::string& flag) {
  return flag == kFlagMissingSubmission || flag == kFlagEmptyResults ||
         flag.rfind(kFlagVerifierError, 0) == 0;
}

bool TaskRecord::errored() const {
  for (const std::string& flag : flags) {
    if (is_error_flag(flag)) return true;
  }
  return false;
}

nlohmann::json telemetry_to_json(const TelemetryRecord& telemetry) {
  return json{{"cost_usd", telemetry.cost_usd},
              {"latency_ms", telemetry.latency_ms},
              {"input_tokens", telemetry.input_tokens},
              {"output_tokens", telemetry.output_tokens},
              {"provider_reported", telemetry.provider_reported}};
}

TelemetryRecord telemetry_from_json(const nlohmann::json& doc) {
  TelemetryRecord telemetry;
  telemetry.cost_usd = doc.value("cost_usd", 0.0);
  telemetry.latency_ms = doc.value("latency_ms", 0.0);
  telemetry.input_tokens = doc.value("input_tokens", std::int64_t{0});
  telemetry.output_tokens = doc.value("output_tokens", std::int64_t{0});
  telemetry.provider_reported = doc.value("provider_reported", false);
  return telemetry;
}

nlohmann::json task_result_to_json(const TaskResult& result) {
  json doc{{"task_id", result.task_id},
           {"solver_id", result.solver_id},
           {"pool_id", result.pool_id},
           {"score", result.score},
           {"passed", result.passed},
           {"flags", result.flags}};
  json entries = json::array();
  for (const CriterionResult& entry : result.criterion_results)
    entries.push_back(criterion_result_to_json(entry));
  doc["criterion_results"] = std::move(entries);
  return doc;
}

TaskResult task_result_from_json(const nlohmann::json& doc) {
  TaskResult result;
  result.task_id = doc.at("task_id").get<std::string>();
  result.solver_id = doc.value("solver_id", std::string{});
  result.pool_id = doc.at("pool_id").get<std::string>();
  result.score = doc.at("score").get<double>();
  result.passed = doc.at("passed").get<bool>();
  result.flags = doc.value("flags", std::vector<std::string>{});
  for (const json& entry : doc.value("criterion_results", json::array()))
    result.criterion_results.push_back(criterion_result_from_json(entry));
  return result;
}

TraceManifest write_trace(const RunTrace& run, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path run_dir = root / run.run_id;
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("cannot create " + run_dir.string() + ": " + ec.message());

  TraceManifest manifest;
  manifest.run_id = run.run_id;
  manifest.solver_id = run.solver_id;

  for (const TaskRecord& record : run.tasks) {
    const fs::path task_dir = run_dir / record.task_id;
    fs::create_directories(task_dir, ec);
    if (ec) throw IoError("cannot create " + task_dir.string() + ": " + ec.message());
    atomic_write(task_dir / "detail.json", task_record_to_json(record).dump(2));
    manifest.tasks.push_back({record.task_id, record.flags, !record.errored()});
  }

  json doc = run.extra.is_object() ? run.extra : json::object();
  doc["schema_version"] = kTraceSchemaVersion;
  doc["run_id"] = run.run_id;
  doc["solver_id"] = run.solver_id;
  json pools = json::array();
  for (const JuryPool& pool : run.pools) pools.push_back(pool_to_json(pool));
  doc["pools"] = std::move(pools);
  json tasks = json::array();
  for (const ManifestEntry& entry : manifest.tasks) {
    tasks.push_back(json{{"task_id", entry.task_id},
                         {"flags", entry.flags},
                         {"graded", entry.graded}});
  }
  doc["tasks"] = std::move(tasks);
  atomic_write(run_dir / "manifest.json", doc.dump(2));
  return manifest;
}

RunTrace read_trace(const std::filesystem::path& root, const std::string& run_id) {
  namespace fs = std::filesystem;
  const fs::path run_dir = root / run_id;
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw CorruptTrace("manifest missing: " + manifest_path.string());
  const json manifest = load_json(manifest_path);

  RunTrace trace;
  try {
    trace.run_id = manifest.at("run_id").get<std::string>();
    trace.solver_id = manifest.value("solver_id", std::string{});
    for (const json& pool : manifest.value("pools", json::array())) {
      trace.pools.push_back(parse_pool(pool.dump()));
    }
    for (const auto& [key, value] : manifest.items()) {
      if (!kManifestKeys.count(key)) trace.extra[key] = value;
    }
    for (const json& entry : manifest.value("tasks", json::array())) {
      const std::string task_id = entry.at("task_id").get<std::string>();
      const fs::path detail = run_dir / task_id / "detail.json";
      if (!fs::exists(detail))
        throw CorruptTrace("task document missing: " + detail.string());
      trace.tasks.push_back(task_record_from_json(load_json(detail), detail.string()));
    }
  } catch (const json::exception& ex) {
    throw CorruptTrace(manifest_path.string() + ": " + ex.what());
  }
  return trace;
}

std::map<std::string, double> replay_scores(const RunTrace& trace,
                                            const std::string& pool_id) {
  std::map<std::string, double> scores;
  for (const TaskRecord& record : trace.tasks) {
    if (record.errored()) continue;

    const TaskResult* pool_result = nullptr;
    if (auto it = record.results.find(pool_id); it != record.results.end())
      pool_result = &it->second;

    auto find_result = [&](const TaskResult& result,
                           const std::string& criterion_id) -> const CriterionResult* {
      for (const CriterionResult& entry : result.criterion_results) {
        if (entry.criterion_id == criterion_id) return &entry;
      }
      return nullptr;
    };

    double score = 0.0;
    for (const Criterion& criterion : record.contract.criteria) {
      if (criterion.grader_type == GraderType::LlmJudge) {
        const CriterionResult* entry =
            pool_result ? find_result(*pool_result, criterion.criterion_id) : nullptr;
        if (entry == nullptr)
          throw MissingPoolVotes(pool_id, criterion.criterion_id);
        if (jury_consensus(entry->votes) == Decision::Pass) score += criterion.weight;
      } else {
        // ExactMatch outcomes are pool-independent; fall back to any pool.
        const CriterionResult* entry =
            pool_result ? find_result(*pool_result, criterion.criterion_id) : nullptr;
        if (entry == nullptr) {
          for (const auto& [other_pool, result] : record.results) {
            entry = find_result(result, criterion.criterion_id);
            if (entry != nullptr) break;
          }
        }
        if (entry == nullptr)
          throw CorruptTrace("no stored ExactMatch outcome for criterion \"" +
                             criterion.criterion_id + "\"");
        if (entry->decision == Decision::Pass) score += criterion.weight;
      }
    }
    scores[record.task_id] = score;
  }
  return scores;
}

}  // namespace jurykit
