#include "jurykit/grading.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <functional>
#include <thread>

namespace jurykit {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

/// Remainder of the line if it starts with the ANSWER: marker, else nullopt.
std::optional<std::string_view> answer_marker_payload(std::string_view line) {
  constexpr std::string_view kMarker = "ANSWER:";
  std::string_view body = trim_view(line);
  if (body.size() < kMarker.size()) return std::nullopt;
  for (std::size_t i = 0; i < kMarker.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(body[i])) != kMarker[i])
      return std::nullopt;
  }
  return trim_view(body.substr(kMarker.size()));
}

/// Runs tasks[0..n) on up to `concurrency` worker threads. Exceptions are
/// captured per slot and rethrown by the caller in slot order.
void run_bounded(std::vector<std::function<void()>>& tasks, std::size_t concurrency) {
  if (tasks.empty()) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, tasks.size()));
  if (workers == 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t index = next.fetch_add(1);
        if (index >= tasks.size()) return;
        tasks[index]();
      }
    });
  }
  for (std::thread& thread : pool) thread.join();
}

}  // namespace

std::string to_string(Decision decision) {
  return decision == Decision::Pass ? "pass" : "fail";
}

Decision decision_from_string(const std::string& value) {
  if (value == "pass") return Decision::Pass;
  if (value == "fail") return Decision::Fail;
  throw MalformedDocument("unknown decision: \"" + value + "\"");
}

std::string to_string(VotePattern pattern) {
  switch (pattern) {
    case VotePattern::Unanimous: return "unanimous";
    case VotePattern::OneDissenter: return "one_dissenter";
    case VotePattern::Split: return "split";
    case VotePattern::Reduced: return "reduced";
    case VotePattern::NotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

VotePattern vote_pattern_from_string(const std::string& value) {
  if (value == "unanimous") return VotePattern::Unanimous;
  if (value == "one_dissenter") return VotePattern::OneDissenter;
  if (value == "split") return VotePattern::Split;
  if (value == "reduced") return VotePattern::Reduced;
  if (value == "not_applicable") return VotePattern::NotApplicable;
  throw MalformedDocument("unknown vote pattern: \"" + value + "\"");
}

Submission Submission::make(std::string task_id, std::string solver_id,
                            std::string text) {
  Submission submission;
  submission.task_id = std::move(task_id);
  submission.solver_id = std::move(solver_id);
  submission.char_count = static_cast<std::int64_t>(text.size());
  submission.text = std::move(text);
  return submission;
}

std::string extract_terminal_answer(std::string_view text) {
  std::optional<std::string> marker_answer;
  std::string_view last_non_empty;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    if (auto payload = answer_marker_payload(line)) {
      marker_answer = std::string(*payload);
    }
    if (!trim_view(line).empty()) last_non_empty = trim_view(line);
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }

  if (marker_answer) return *marker_answer;
  return std::string(last_non_empty);
}

std::string normalize_answer(std::string_view answer) {
  std::string out;
  out.reserve(answer.size());
  bool pending_space = false;
  for (char c : trim_view(answer)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?'))
    out.pop_back();
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

CriterionResult grade_exact_match(const Criterion& criterion,
                                  const Submission& submission) {
  CriterionResult result;
  result.criterion_id = criterion.criterion_id;
  result.grader_type = GraderType::ExactMatch;
  result.vote_pattern = VotePattern::NotApplicable;

  const std::string extracted = extract_terminal_answer(submission.text);
  result.extracted_answer = extracted;
  const bool matched =
      normalize_answer(extracted) == normalize_answer(criterion.semantic_prompt);
  result.decision = matched ? Decision::Pass : Decision::Fail;
  result.awarded_weight = matched ? criterion.weight : 0.0;
  return result;
}

Decision jury_consensus(const std::vector<JudgeVote>& votes) {
  std::size_t usable = 0;
  std::size_t pass = 0;
  for (const JudgeVote& vote : votes) {
    if (vote.verdict == Verdict::Unusable) continue;
    ++usable;
    if (vote.verdict == Verdict::Pass) ++pass;
  }
  // Strict majority: ties fail, the empty panel fails.
  return 2 * pass > usable ? Decision::Pass : Decision::Fail;
}

VotePattern classify_vote_pattern(const std::vector<JudgeVote>& votes) {
  std::size_t pass = 0;
  std::size_t fail = 0;
  for (const JudgeVote& vote : votes) {
    if (vote.verdict == Verdict::Pass) ++pass;
    if (vote.verdict == Verdict::Fail) ++fail;
  }
  if (pass + fail != kJurySize) return VotePattern::Reduced;
  const std::size_t margin = pass > fail ? pass - fail : fail - pass;
  switch (margin) {
    case 5: return VotePattern::Unanimous;
    case 3: return VotePattern::OneDissenter;
    case 1: return VotePattern::Split;
    default: return VotePattern::Reduced;  // unreachable for 5 usable votes
  }
}

TaskResult grade_task(const EvaluationContract& contract, const Submission& submission,
                      const JuryPool& pool, JudgeClient& client,
                      const GradeOptions& options) {
  TaskResult result;
  result.task_id = contract.task_id;
  result.solver_id = submission.solver_id;
  result.pool_id = pool.pool_id;
  result.criterion_results.resize(contract.criteria.size());

  // One call unit per (llm-judge criterion, juror). Slots are pre-allocated
  // so assembly is independent of completion order.
  struct CallSlot {
    std::size_t criterion_index = 0;
    std::size_t judge_index = 0;
    BackendReply reply;
    std::string failure;  // non-empty when the call degraded to Unusable
  };
  std::vector<CallSlot> slots;
  for (std::size_t i = 0; i < contract.criteria.size(); ++i) {
    if (contract.criteria[i].grader_type != GraderType::LlmJudge) continue;
    for (std::size_t j = 0; j < pool.judges.size(); ++j) {
      slots.push_back({i, j, {}, {}});
    }
  }

  std::vector<std::function<void()>> calls;
  calls.reserve(slots.size());
  std::vector<std::exception_ptr> fatal(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    calls.emplace_back([&, s] {
      CallSlot& slot = slots[s];
      const Criterion& criterion = contract.criteria[slot.criterion_index];
      JudgeRequest request{contract.task_prompt, submission.text,
                           criterion.semantic_prompt, contract.reference_files};
      JudgeCallContext context{pool.judges[slot.judge_index], contract.task_id,
                               criterion.criterion_id};
      try {
        slot.reply = client.call_judge(context, build_judge_prompt(request));
      } catch (const ExhaustedRetries& ex) {
        slot.failure = ex.what();
      } catch (const PermanentBackendError& ex) {
        slot.failure = ex.what();
      } catch (...) {
        fatal[s] = std::current_exception();  // configuration fault
      }
    });
  }
  run_bounded(calls, options.concurrency);
  for (const std::exception_ptr& ex : fatal) {
    if (ex) std::rethrow_exception(ex);
  }

  // Votes are keyed by (criterion, judge) and emitted in pool order.
  std::vector<std::vector<JudgeVote>> votes(contract.criteria.size());
  for (std::size_t i = 0; i < contract.criteria.size(); ++i) {
    if (contract.criteria[i].grader_type == GraderType::LlmJudge)
      votes[i].resize(pool.judges.size());
  }
  for (const CallSlot& slot : slots) {
    JudgeVote vote;
    vote.judge_id = pool.judges[slot.judge_index];
    if (!slot.failure.empty()) {
      vote.verdict = Verdict::Unusable;
      vote.rationale = slot.failure;
    } else {
      auto [verdict, rationale] = parse_verdict(slot.reply.text);
      vote.verdict = verdict;
      vote.rationale = std::move(rationale);
      vote.telemetry = slot.reply.telemetry;
    }
    votes[slot.criterion_index][slot.judge_index] = std::move(vote);
  }

  double score = 0.0;
  for (std::size_t i = 0; i < contract.criteria.size(); ++i) {
    const Criterion& criterion = contract.criteria[i];
    CriterionResult& entry = result.criterion_results[i];
    if (criterion.grader_type == GraderType::ExactMatch) {
      entry = grade_exact_match(criterion, submission);
    } else {
      entry.criterion_id = criterion.criterion_id;
      entry.grader_type = GraderType::LlmJudge;
      entry.votes = std::move(votes[i]);
      entry.decision = jury_consensus(entry.votes);
      entry.vote_pattern = classify_vote_pattern(entry.votes);
      entry.awarded_weight =
          entry.decision == Decision::Pass ? criterion.weight : 0.0;
      const bool any_usable = std::any_of(
          entry.votes.begin(), entry.votes.end(),
          [](const JudgeVote& vote) { return vote.verdict != Verdict::Unusable; });
      if (!any_usable)
        result.flags.push_back("judge_panel_empty:" + criterion.criterion_id);
    }
    score += entry.awarded_weight;
  }
  result.score = score;
  result.passed = score >= contract.pass_threshold;
  return result;
}

}  // namespace jurykit
