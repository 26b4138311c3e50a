#pragma once

// Shared builders for scripted-judge fixtures used by the unit and
// acceptance suites.

#include <memory>
#include <string>
#include <vector>

#include "jurykit/contract.hpp"
#include "jurykit/grading.hpp"
#include "jurykit/judge_gateway.hpp"

namespace jurykit::testing {

inline JuryPool make_pool(const std::string& pool_id, const std::string& prefix) {
  JuryPool pool;
  pool.pool_id = pool_id;
  for (int i = 1; i <= 5; ++i) pool.judges.push_back(prefix + std::to_string(i));
  pool.endpoint = "http://localhost:0";
  return pool;
}

inline ScriptedBackend::Entry verdict_entry(bool pass, double cost = 0.01,
                                            double latency_ms = 100.0,
                                            std::int64_t input_tokens = 1000,
                                            std::int64_t output_tokens = 200) {
  ScriptedBackend::Entry entry;
  entry.response = std::string("Considered the criterion.\nVERDICT: ") +
                   (pass ? "PASS" : "FAIL");
  entry.telemetry.cost_usd = cost;
  entry.telemetry.latency_ms = latency_ms;
  entry.telemetry.input_tokens = input_tokens;
  entry.telemetry.output_tokens = output_tokens;
  entry.telemetry.provider_reported = true;
  return entry;
}

/// Scripts the five votes of `pool` on `criterion_id` from a pass/fail
/// pattern like "PPFFF".
inline void script_panel(ScriptedBackend& backend, const JuryPool& pool,
                         const std::string& criterion_id, const std::string& pattern) {
  for (std::size_t i = 0; i < pool.judges.size(); ++i) {
    backend.add_entry(pool.judges[i], criterion_id, verdict_entry(pattern.at(i) == 'P'));
  }
}

inline std::vector<JudgeVote> votes_from_pattern(const std::string& pattern) {
  std::vector<JudgeVote> votes;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    JudgeVote vote;
    vote.judge_id = "judge-" + std::to_string(i + 1);
    switch (pattern[i]) {
      case 'P': vote.verdict = Verdict::Pass; break;
      case 'F': vote.verdict = Verdict::Fail; break;
      default:
        vote.verdict = Verdict::Unusable;
        vote.rationale = "scripted unusable";
        break;
    }
    votes.push_back(std::move(vote));
  }
  return votes;
}

/// Retry-free client wired to a scripted backend; no real sleeping.
inline JudgeClient instant_client(std::shared_ptr<JudgeBackend> backend) {
  RetryPolicy policy;
  policy.base_delay = std::chrono::milliseconds(0);
  return JudgeClient(std::move(backend), policy,
                     [](std::chrono::milliseconds) {}, /*jitter_seed=*/1);
}

}  // namespace jurykit::testing
