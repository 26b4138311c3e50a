#include "jurykit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace jurykit::analytics {

namespace {

using nlohmann::json;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string format_double(double value) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << value;
  return out.str();
}

std::string percent(double fraction, int decimals = 1) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << fraction * 100.0 << "%";
  return out.str();
}

std::string percent_or_dash(const std::optional<double>& fraction, int decimals = 1) {
  return fraction ? percent(*fraction, decimals) : std::string("-");
}

std::string fixed(double value, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << value;
  return out.str();
}

json optional_to_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

std::size_t PoolVotes::usable() const {
  std::size_t count = 0;
  for (const JudgeVote& vote : votes) {
    if (vote.verdict != Verdict::Unusable) ++count;
  }
  return count;
}

std::size_t PoolVotes::pass_votes() const {
  std::size_t count = 0;
  for (const JudgeVote& vote : votes) {
    if (vote.verdict == Verdict::Pass) ++count;
  }
  return count;
}

bool PoolVotes::full_panel() const {
  return votes.size() == kJurySize && usable() == kJurySize;
}

bool PoolVotes::tie() const {
  const std::size_t k = usable();
  return k > 0 && 2 * pass_votes() == k;
}

std::vector<CriterionInstance> collect_instances(const RunTrace& trace) {
  std::vector<CriterionInstance> instances;
  for (const TaskRecord& record : trace.tasks) {
    if (record.results.empty()) continue;
    for (const Criterion& criterion : record.contract.criteria) {
      if (criterion.grader_type != GraderType::LlmJudge) continue;
      CriterionInstance instance;
      instance.run_id = trace.run_id;
      instance.task_id = record.task_id;
      instance.criterion_id = criterion.criterion_id;
      instance.weight = criterion.weight;
      instance.task_flags = record.flags;
      if (record.submission) {
        instance.submission_present = true;
        instance.char_count = record.submission->char_count;
        instance.extracted_text_present =
            !extract_terminal_answer(record.submission->text).empty();
      }
      for (const auto& [pool_id, result] : record.results) {
        for (const CriterionResult& entry : result.criterion_results) {
          if (entry.criterion_id != criterion.criterion_id) continue;
          PoolVotes pool_votes;
          pool_votes.votes = entry.votes;
          pool_votes.decision = entry.decision;
          instance.pools[pool_id] = std::move(pool_votes);
          break;
        }
      }
      if (!instance.pools.empty()) instances.push_back(std::move(instance));
    }
  }
  return instances;
}

AgreementResult majority_agreement(const std::vector<CriterionInstance>& instances,
                                   const std::string& pool_a,
                                   const std::string& pool_b) {
  AgreementResult result;
  std::size_t matches = 0;
  for (const CriterionInstance& instance : instances) {
    auto a = instance.pools.find(pool_a);
    auto b = instance.pools.find(pool_b);
    if (a == instance.pools.end() || b == instance.pools.end()) continue;
    ++result.n;
    if (a->second.decision == b->second.decision) ++matches;
  }
  if (result.n > 0)
    result.rate = static_cast<double>(matches) / static_cast<double>(result.n);
  return result;
}

CommonSubsetResult common_subset_agreement(
    const std::vector<std::vector<CriterionInstance>>& runs,
    const std::string& pool_a, const std::string& pool_b) {
  if (runs.size() < 2) throw EmptySample("common-subset agreement needs >= 2 runs");

  using Key = std::pair<std::string, std::string>;
  auto comparable_keys = [&](const std::vector<CriterionInstance>& instances) {
    std::set<Key> keys;
    for (const CriterionInstance& instance : instances) {
      if (instance.pools.count(pool_a) && instance.pools.count(pool_b))
        keys.insert(instance.key());
    }
    return keys;
  };

  std::set<Key> subset = comparable_keys(runs.front());
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const std::set<Key> keys = comparable_keys(runs[i]);
    std::set<Key> next;
    std::set_intersection(subset.begin(), subset.end(), keys.begin(), keys.end(),
                          std::inserter(next, next.begin()));
    subset = std::move(next);
  }
  if (subset.empty()) throw EmptyIntersection();

  CommonSubsetResult result;
  result.subset_size = subset.size();
  double total = 0.0;
  for (const std::vector<CriterionInstance>& instances : runs) {
    std::vector<CriterionInstance> restricted;
    for (const CriterionInstance& instance : instances) {
      if (subset.count(instance.key())) restricted.push_back(instance);
    }
    AgreementResult rate = majority_agreement(restricted, pool_a, pool_b);
    total += rate.rate.value_or(0.0);
    result.per_run.push_back(std::move(rate));
  }
  result.mean_rate = total / static_cast<double>(runs.size());
  return result;
}

PatternRates dissent_rates(const std::vector<CriterionInstance>& instances,
                           const std::string& pool_id) {
  PatternRates rates;
  std::size_t unanimous = 0;
  std::size_t one_dissenter = 0;
  std::size_t split = 0;
  for (const CriterionInstance& instance : instances) {
    auto it = instance.pools.find(pool_id);
    if (it == instance.pools.end()) continue;
    ++rates.total;
    switch (classify_vote_pattern(it->second.votes)) {
      case VotePattern::Unanimous: ++unanimous; ++rates.full_panels; break;
      case VotePattern::OneDissenter: ++one_dissenter; ++rates.full_panels; break;
      case VotePattern::Split: ++split; ++rates.full_panels; break;
      default: ++rates.reduced; break;
    }
  }
  if (rates.total == 0)
    throw EmptySample("no instances with votes for pool \"" + pool_id + "\"");
  if (rates.full_panels > 0) {
    const double n = static_cast<double>(rates.full_panels);
    rates.unanimous = unanimous / n;
    rates.one_dissenter = one_dissenter / n;
    rates.split = split / n;
  }
  rates.reduced_share =
      static_cast<double>(rates.reduced) / static_cast<double>(rates.total);
  return rates;
}

ScoreStability score_stability(const std::vector<double>& a,
                               const std::vector<double>& b) {
  if (a.size() != b.size())
    throw LengthMismatch("paired score vectors differ: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  ScoreStability stats;
  stats.n = a.size();
  if (a.empty()) return stats;

  std::vector<double> deltas(a.size());
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    deltas[i] = a[i] - b[i];
    if (deltas[i] == 0.0) ++zeros;
    stats.mean_abs_delta += std::abs(deltas[i]);
    stats.max_abs_delta = std::max(stats.max_abs_delta, std::abs(deltas[i]));
  }
  stats.mean_abs_delta /= static_cast<double>(deltas.size());
  stats.frac_zero = static_cast<double>(zeros) / static_cast<double>(deltas.size());

  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  stats.median_delta = sorted.size() % 2 == 1
                           ? sorted[mid]
                           : 0.5 * (sorted[mid - 1] + sorted[mid]);

  double mean_delta = 0.0;
  for (double d : deltas) mean_delta += d;
  mean_delta /= static_cast<double>(deltas.size());
  if (deltas.size() >= 2) {
    double ss = 0.0;
    for (double d : deltas) ss += (d - mean_delta) * (d - mean_delta);
    stats.sd_delta = std::sqrt(ss / static_cast<double>(deltas.size() - 1));
  }

  if (a.size() >= 2) {
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      mean_a += a[i];
      mean_b += b[i];
    }
    mean_a /= static_cast<double>(a.size());
    mean_b /= static_cast<double>(a.size());
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sxy += (a[i] - mean_a) * (b[i] - mean_b);
      sxx += (a[i] - mean_a) * (a[i] - mean_a);
      syy += (b[i] - mean_b) * (b[i] - mean_b);
    }
    if (sxx > 0.0 && syy > 0.0) stats.pearson_r = sxy / std::sqrt(sxx * syy);
  }
  return stats;
}

double benchmark_aggregate(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptySample("benchmark aggregate over zero tasks");
  double total = 0.0;
  for (double score : scores) total += score;
  return total / (100.0 * static_cast<double>(scores.size()));
}

double pass_rate(const std::vector<double>& scores,
                 const std::vector<double>& thresholds) {
  if (scores.size() != thresholds.size())
    throw LengthMismatch("scores vs thresholds: " + std::to_string(scores.size()) +
                         " vs " + std::to_string(thresholds.size()));
  if (scores.empty()) throw EmptySample("pass rate over zero tasks");
  std::size_t passed = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= thresholds[i]) ++passed;
  }
  return static_cast<double>(passed) / static_cast<double>(scores.size());
}

std::optional<double> metric_reduction(double a, double b) {
  if (a == 0.0) return std::nullopt;
  return 1.0 - b / a;
}

EconomicsComparison economics_summary(const std::vector<CriterionInstance>& instances,
                                      const std::string& pool_a,
                                      const std::string& pool_b) {
  EconomicsComparison comparison;

  auto accumulate = [&](const std::string& pool_id, PoolEconomics& econ) {
    for (const CriterionInstance& instance : instances) {
      auto it = instance.pools.find(pool_id);
      if (it == instance.pools.end()) continue;
      if (!instance.pools.count(pool_id == pool_a ? pool_b : pool_a)) continue;
      double cost = 0.0;
      double latency_sum = 0.0;
      double latency_max = 0.0;
      double output_tokens = 0.0;
      double total_tokens = 0.0;
      for (const JudgeVote& vote : it->second.votes) {
        cost += vote.telemetry.cost_usd;
        latency_sum += vote.telemetry.latency_ms;
        latency_max = std::max(latency_max, vote.telemetry.latency_ms);
        output_tokens += static_cast<double>(vote.telemetry.output_tokens);
        total_tokens += static_cast<double>(vote.telemetry.total_tokens());
      }
      ++econ.n;
      econ.mean_cost_usd += cost;
      econ.mean_latency_ms_sum += latency_sum;
      econ.mean_latency_ms_max += latency_max;
      econ.mean_output_tokens += output_tokens;
      econ.mean_total_tokens += total_tokens;
    }
    if (econ.n > 0) {
      const double n = static_cast<double>(econ.n);
      econ.mean_cost_usd /= n;
      econ.mean_latency_ms_sum /= n;
      econ.mean_latency_ms_max /= n;
      econ.mean_output_tokens /= n;
      econ.mean_total_tokens /= n;
    }
  };

  accumulate(pool_a, comparison.pool_a);
  accumulate(pool_b, comparison.pool_b);
  comparison.reduction_cost =
      metric_reduction(comparison.pool_a.mean_cost_usd, comparison.pool_b.mean_cost_usd);
  comparison.reduction_latency = metric_reduction(comparison.pool_a.mean_latency_ms_sum,
                                                  comparison.pool_b.mean_latency_ms_sum);
  comparison.reduction_output_tokens = metric_reduction(
      comparison.pool_a.mean_output_tokens, comparison.pool_b.mean_output_tokens);
  comparison.reduction_total_tokens = metric_reduction(
      comparison.pool_a.mean_total_tokens, comparison.pool_b.mean_total_tokens);
  return comparison;
}

std::vector<CriterionInstance> comparable_row_filter(
    const std::vector<CriterionInstance>& instances, const std::string& pool_a,
    const std::string& pool_b) {
  std::vector<CriterionInstance> kept;
  for (const CriterionInstance& instance : instances) {
    auto a = instance.pools.find(pool_a);
    auto b = instance.pools.find(pool_b);
    if (a == instance.pools.end() || b == instance.pools.end()) continue;
    if (a->second.tie() || b->second.tie()) continue;
    if (!a->second.full_panel() || !b->second.full_panel()) continue;
    bool flagged = false;
    for (const std::string& flag : instance.task_flags) {
      if (is_error_flag(flag)) flagged = true;
    }
    if (flagged) continue;
    if (!instance.submission_present || !instance.extracted_text_present) continue;
    kept.push_back(instance);
  }
  return kept;
}

int disagreement_severity(const std::vector<JudgeVote>& votes) {
  std::size_t pass = 0;
  std::size_t fail = 0;
  for (const JudgeVote& vote : votes) {
    if (vote.verdict == Verdict::Pass) ++pass;
    if (vote.verdict == Verdict::Fail) ++fail;
  }
  if (pass + fail != kJurySize)
    throw ReducedPanel("severity defined only for full 5-vote panels, got " +
                       std::to_string(pass + fail) + " usable votes");
  const std::size_t margin = pass > fail ? pass - fail : fail - pass;
  if (margin == 5) return 0;
  if (margin == 3) return 1;
  return 2;
}

std::vector<double> length_feature(const std::vector<std::int64_t>& char_counts,
                                   StdDevMode mode) {
  if (char_counts.size() < 2)
    throw EmptySample("length feature needs a sample of >= 2 submissions");
  std::vector<double> logs(char_counts.size());
  for (std::size_t i = 0; i < char_counts.size(); ++i) {
    logs[i] = std::log1p(static_cast<double>(char_counts[i]));
  }
  double mean = 0.0;
  for (double x : logs) mean += x;
  mean /= static_cast<double>(logs.size());
  double ss = 0.0;
  for (double x : logs) ss += (x - mean) * (x - mean);
  const double denom = mode == StdDevMode::kSample
                           ? static_cast<double>(logs.size() - 1)
                           : static_cast<double>(logs.size());
  const double sd = std::sqrt(ss / denom);
  if (sd == 0.0) throw ConstantSample();
  for (double& x : logs) x = (x - mean) / sd;
  return logs;
}

std::vector<OrdinalRow> build_ordinal_rows(
    const std::vector<CriterionInstance>& filtered, const std::string& pool_a,
    const std::string& pool_b, StdDevMode mode) {
  std::vector<std::int64_t> counts;
  counts.reserve(filtered.size());
  for (const CriterionInstance& instance : filtered) counts.push_back(instance.char_count);
  const std::vector<double> length_z = length_feature(counts, mode);

  std::vector<OrdinalRow> rows;
  rows.reserve(2 * filtered.size());
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    const CriterionInstance& instance = filtered[i];
    for (const std::string* pool : {&pool_a, &pool_b}) {
      OrdinalRow row;
      row.run_id = instance.run_id;
      row.task_id = instance.task_id;
      row.criterion_id = instance.criterion_id;
      row.comparison_pool = pool == &pool_b ? 1 : 0;
      row.severity = disagreement_severity(instance.pools.at(*pool).votes);
      row.length_z = length_z[i];
      row.char_count = instance.char_count;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CategoryProbabilities ordinal_predict(const OrdinalModelCoefficients& coeffs,
                                      double length_z, int comparison_pool,
                                      const std::string& run_id) {
  if (!(coeffs.cutpoint_low < coeffs.cutpoint_high)) throw InvalidCutpoints();
  double run_effect = 0.0;
  if (auto it = coeffs.run_effects.find(run_id); it != coeffs.run_effects.end())
    run_effect = it->second;
  const double pool = static_cast<double>(comparison_pool);
  const double eta = coeffs.intercept + coeffs.beta_length * length_z +
                     coeffs.beta_compact * pool +
                     coeffs.beta_interaction * length_z * pool + run_effect +
                     coeffs.random_intercept;
  const double cumulative_low = sigmoid(coeffs.cutpoint_low - eta);
  const double cumulative_high = sigmoid(coeffs.cutpoint_high - eta);
  CategoryProbabilities probabilities;
  probabilities.unanimous = cumulative_low;
  probabilities.one_dissenter = cumulative_high - cumulative_low;
  probabilities.split = 1.0 - cumulative_high;
  return probabilities;
}

CategoryProbabilities ordinal_predict_run_averaged(
    const OrdinalModelCoefficients& coeffs, double length_z, int comparison_pool) {
  if (coeffs.run_effects.empty())
    return ordinal_predict(coeffs, length_z, comparison_pool);
  CategoryProbabilities averaged;
  for (const auto& [run_id, effect] : coeffs.run_effects) {
    (void)effect;
    const CategoryProbabilities p =
        ordinal_predict(coeffs, length_z, comparison_pool, run_id);
    averaged.unanimous += p.unanimous;
    averaged.one_dissenter += p.one_dissenter;
    averaged.split += p.split;
  }
  const double n = static_cast<double>(coeffs.run_effects.size());
  averaged.unanimous /= n;
  averaged.one_dissenter /= n;
  averaged.split /= n;
  return averaged;
}

DesignMatrix design_matrix(const std::vector<OrdinalRow>& rows) {
  std::set<std::string> runs;
  for (const OrdinalRow& row : rows) runs.insert(row.run_id);
  // Lexicographically first run is the reference level.
  std::vector<std::string> dummy_runs(runs.begin(), runs.end());
  if (!dummy_runs.empty()) dummy_runs.erase(dummy_runs.begin());

  DesignMatrix matrix;
  matrix.column_names = {"intercept", "length_z", "pool_indicator", "length_x_pool"};
  for (const std::string& run : dummy_runs) matrix.column_names.push_back("run_" + run);

  for (const OrdinalRow& row : rows) {
    std::vector<double> values;
    values.reserve(matrix.column_names.size());
    values.push_back(1.0);
    values.push_back(row.length_z);
    values.push_back(static_cast<double>(row.comparison_pool));
    // +0.0 flushes the negative zero the product yields for pool-0 rows.
    values.push_back(row.length_z * static_cast<double>(row.comparison_pool) + 0.0);
    for (const std::string& run : dummy_runs)
      values.push_back(row.run_id == run ? 1.0 : 0.0);
    matrix.rows.push_back(std::move(values));
    matrix.outcomes.push_back(row.severity);
  }
  return matrix;
}

void write_design_matrix_csv(const DesignMatrix& matrix, std::ostream& out) {
  for (std::size_t i = 0; i < matrix.column_names.size(); ++i) {
    out << matrix.column_names[i] << ",";
  }
  out << "severity\n";
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (double value : matrix.rows[r]) out << format_double(value) << ",";
    out << matrix.outcomes[r] << "\n";
  }
}

CrossRunSummary cross_run_summary(const std::vector<double>& values) {
  if (values.empty()) throw EmptySample("cross-run summary of zero values");
  CrossRunSummary summary;
  summary.min = values.front();
  summary.max = values.front();
  for (double value : values) {
    summary.mean += value;
    summary.min = std::min(summary.min, value);
    summary.max = std::max(summary.max, value);
  }
  summary.mean /= static_cast<double>(values.size());
  return summary;
}

ComparisonReport compare_pools(const RunTrace& trace, const std::string& pool_a,
                               const std::string& pool_b) {
  auto pool_present = [&](const std::string& pool_id) {
    for (const TaskRecord& record : trace.tasks) {
      if (record.results.count(pool_id)) return true;
    }
    return false;
  };
  if (!pool_present(pool_a)) throw MissingPool(pool_a);
  if (!pool_present(pool_b)) throw MissingPool(pool_b);

  ComparisonReport report;
  report.run_id = trace.run_id;
  report.pool_a = pool_a;
  report.pool_b = pool_b;

  const std::vector<CriterionInstance> instances = collect_instances(trace);
  report.n_instances = instances.size();
  report.agreement = majority_agreement(instances, pool_a, pool_b);
  for (const std::string& pool_id : {pool_a, pool_b}) {
    try {
      report.pattern_rates[pool_id] = dissent_rates(instances, pool_id);
    } catch (const EmptySample&) {
      report.pattern_rates[pool_id] = PatternRates{};
    }
  }

  std::vector<double> scores_a;
  std::vector<double> scores_b;
  std::vector<double> thresholds;
  for (const TaskRecord& record : trace.tasks) {
    if (record.errored()) continue;
    auto a = record.results.find(pool_a);
    auto b = record.results.find(pool_b);
    if (a == record.results.end() || b == record.results.end()) continue;
    report.scores[pool_a][record.task_id] = a->second.score;
    report.scores[pool_b][record.task_id] = b->second.score;
    scores_a.push_back(a->second.score);
    scores_b.push_back(b->second.score);
    thresholds.push_back(record.contract.pass_threshold);
  }
  report.graded_tasks = scores_a.size();
  report.stability = score_stability(scores_a, scores_b);
  if (!scores_a.empty()) {
    report.benchmark[pool_a] = benchmark_aggregate(scores_a);
    report.benchmark[pool_b] = benchmark_aggregate(scores_b);
    report.task_pass_rate[pool_a] = pass_rate(scores_a, thresholds);
    report.task_pass_rate[pool_b] = pass_rate(scores_b, thresholds);
  }
  report.economics = economics_summary(instances, pool_a, pool_b);
  return report;
}

nlohmann::json report_to_json(const ComparisonReport& report) {
  json doc;
  doc["run_id"] = report.run_id;
  doc["pool_a"] = report.pool_a;
  doc["pool_b"] = report.pool_b;
  doc["n_instances"] = report.n_instances;
  doc["majority_agreement"] = {{"rate", optional_to_json(report.agreement.rate)},
                               {"n", report.agreement.n}};
  json patterns = json::object();
  for (const auto& [pool_id, rates] : report.pattern_rates) {
    patterns[pool_id] = {{"total", rates.total},
                         {"full_panels", rates.full_panels},
                         {"reduced", rates.reduced},
                         {"unanimous", optional_to_json(rates.unanimous)},
                         {"one_dissenter", optional_to_json(rates.one_dissenter)},
                         {"split", optional_to_json(rates.split)},
                         {"reduced_share", rates.reduced_share}};
  }
  doc["pattern_rates"] = std::move(patterns);
  doc["graded_tasks"] = report.graded_tasks;
  doc["scores"] = report.scores;
  doc["score_stability"] = {{"n", report.stability.n},
                            {"pearson_r", optional_to_json(report.stability.pearson_r)},
                            {"median_delta", report.stability.median_delta},
                            {"mean_abs_delta", report.stability.mean_abs_delta},
                            {"sd_delta", report.stability.sd_delta},
                            {"max_abs_delta", report.stability.max_abs_delta},
                            {"frac_zero", report.stability.frac_zero}};
  doc["benchmark_aggregate"] = report.benchmark;
  doc["pass_rate"] = report.task_pass_rate;
  auto econ_json = [](const PoolEconomics& econ) {
    return json{{"n", econ.n},
                {"mean_cost_usd", econ.mean_cost_usd},
                {"mean_latency_ms_sum", econ.mean_latency_ms_sum},
                {"mean_latency_ms_max", econ.mean_latency_ms_max},
                {"mean_output_tokens", econ.mean_output_tokens},
                {"mean_total_tokens", econ.mean_total_tokens}};
  };
  doc["economics"] = {
      {report.pool_a, econ_json(report.economics.pool_a)},
      {report.pool_b, econ_json(report.economics.pool_b)},
      {"reductions",
       {{"cost_usd", optional_to_json(report.economics.reduction_cost)},
        {"latency_ms_sum", optional_to_json(report.economics.reduction_latency)},
        {"output_tokens", optional_to_json(report.economics.reduction_output_tokens)},
        {"total_tokens", optional_to_json(report.economics.reduction_total_tokens)}}}};
  return doc;
}

std::string render_report_text(const ComparisonReport& report) {
  std::ostringstream out;
  out << "run: " << report.run_id << "    pools: " << report.pool_a << " vs "
      << report.pool_b << "\n";
  out << "llm-judge criterion instances: " << report.n_instances << "\n\n";

  out << "-- criterion agreement --\n";
  out << "majority agreement: " << percent_or_dash(report.agreement.rate)
      << " (n=" << report.agreement.n << ")\n\n";

  out << "-- within-jury disagreement --\n";
  out << std::left << std::setw(12) << "pool" << std::setw(7) << "n" << std::setw(11)
      << "unanimous" << std::setw(11) << "4:1" << std::setw(11) << "3:2"
      << "reduced share\n";
  for (const auto& [pool_id, rates] : report.pattern_rates) {
    out << std::left << std::setw(12) << pool_id << std::setw(7) << rates.total
        << std::setw(11) << percent_or_dash(rates.unanimous) << std::setw(11)
        << percent_or_dash(rates.one_dissenter) << std::setw(11)
        << percent_or_dash(rates.split) << percent(rates.reduced_share) << "\n";
  }
  out << "\n";

  out << "-- task-level raw-score stability (" << report.pool_a << " - "
      << report.pool_b << ") --\n";
  out << "graded tasks: " << report.graded_tasks << "\n";
  out << "pearson r: "
      << (report.stability.pearson_r ? fixed(*report.stability.pearson_r, 4)
                                     : std::string("-"))
      << "   median delta: " << fixed(report.stability.median_delta, 2)
      << "   mean |delta|: " << fixed(report.stability.mean_abs_delta, 2)
      << "   sd: " << fixed(report.stability.sd_delta, 2)
      << "   max |delta|: " << fixed(report.stability.max_abs_delta, 2)
      << "   no-change: " << percent(report.stability.frac_zero) << "\n\n";

  out << "-- benchmark aggregate + pass rate --\n";
  out << std::left << std::setw(12) << "pool" << std::setw(12) << "benchmark"
      << "pass rate\n";
  for (const std::string& pool_id : {report.pool_a, report.pool_b}) {
    out << std::left << std::setw(12) << pool_id << std::setw(12)
        << (report.benchmark.count(pool_id) ? percent(report.benchmark.at(pool_id))
                                            : std::string("-"))
        << (report.task_pass_rate.count(pool_id)
                ? percent(report.task_pass_rate.at(pool_id))
                : std::string("-"))
        << "\n";
  }
  out << "\n";

  out << "-- judge economics (pooled totals per criterion, mean over " <<
      report.economics.pool_a.n << " instances) --\n";
  out << std::left << std::setw(22) << "metric" << std::setw(14) << report.pool_a
      << std::setw(14) << report.pool_b << "reduction\n";
  auto econ_row = [&](const std::string& name, double a, double b,
                      const std::optional<double>& reduction, int decimals) {
    out << std::left << std::setw(22) << name << std::setw(14) << fixed(a, decimals)
        << std::setw(14) << fixed(b, decimals) << percent_or_dash(reduction) << "\n";
  };
  econ_row("cost (USD)", report.economics.pool_a.mean_cost_usd,
           report.economics.pool_b.mean_cost_usd, report.economics.reduction_cost, 4);
  econ_row("latency sum (ms)", report.economics.pool_a.mean_latency_ms_sum,
           report.economics.pool_b.mean_latency_ms_sum,
           report.economics.reduction_latency, 1);
  out << std::left << std::setw(22) << "latency max (ms)" << std::setw(14)
      << fixed(report.economics.pool_a.mean_latency_ms_max, 1) << std::setw(14)
      << fixed(report.economics.pool_b.mean_latency_ms_max, 1)
      << "(alternative accounting)\n";
  econ_row("output tokens", report.economics.pool_a.mean_output_tokens,
           report.economics.pool_b.mean_output_tokens,
           report.economics.reduction_output_tokens, 1);
  econ_row("total tokens", report.economics.pool_a.mean_total_tokens,
           report.economics.pool_b.mean_total_tokens,
           report.economics.reduction_total_tokens, 1);
  return out.str();
}

CrossRunReport summarize_runs(const std::vector<ComparisonReport>& reports,
                              const std::vector<std::vector<CriterionInstance>>& runs,
                              const std::string& pool_a, const std::string& pool_b) {
  CrossRunReport cross;
  std::map<std::string, std::vector<double>> values;
  for (const ComparisonReport& report : reports) {
    cross.run_ids.push_back(report.run_id);
    if (report.agreement.rate) values["majority_agreement"].push_back(*report.agreement.rate);
    for (const auto& [pool_id, rates] : report.pattern_rates) {
      if (rates.unanimous) values["unanimous." + pool_id].push_back(*rates.unanimous);
      if (rates.one_dissenter)
        values["one_dissenter." + pool_id].push_back(*rates.one_dissenter);
      if (rates.split) values["split." + pool_id].push_back(*rates.split);
    }
    if (report.stability.pearson_r)
      values["pearson_r"].push_back(*report.stability.pearson_r);
    values["median_delta"].push_back(report.stability.median_delta);
    values["mean_abs_delta"].push_back(report.stability.mean_abs_delta);
    values["frac_zero"].push_back(report.stability.frac_zero);
    for (const auto& [pool_id, aggregate] : report.benchmark)
      values["benchmark." + pool_id].push_back(aggregate);
    for (const auto& [pool_id, rate] : report.task_pass_rate)
      values["pass_rate." + pool_id].push_back(rate);
  }
  for (const auto& [name, series] : values) {
    if (!series.empty()) cross.metrics[name] = cross_run_summary(series);
  }
  if (runs.size() >= 2) {
    try {
      cross.common_subset = common_subset_agreement(runs, pool_a, pool_b);
    } catch (const EmptyIntersection&) {
      cross.common_subset = std::nullopt;
    }
  }
  return cross;
}

nlohmann::json cross_run_report_to_json(const CrossRunReport& report) {
  json doc;
  doc["run_ids"] = report.run_ids;
  json metrics = json::object();
  for (const auto& [name, summary] : report.metrics) {
    metrics[name] = {{"mean", summary.mean}, {"min", summary.min}, {"max", summary.max}};
  }
  doc["metrics"] = std::move(metrics);
  if (report.common_subset) {
    json per_run = json::array();
    for (const AgreementResult& rate : report.common_subset->per_run) {
      per_run.push_back(
          json{{"rate", optional_to_json(rate.rate)}, {"n", rate.n}});
    }
    doc["common_subset"] = {{"subset_size", report.common_subset->subset_size},
                            {"mean_rate", report.common_subset->mean_rate},
                            {"per_run", std::move(per_run)}};
  } else {
    doc["common_subset"] = nullptr;
  }
  return doc;
}

std::string render_cross_run_text(const CrossRunReport& report) {
  std::ostringstream out;
  out << "cross-run summary over " << report.run_ids.size() << " runs (";
  for (std::size_t i = 0; i < report.run_ids.size(); ++i) {
    if (i > 0) out << ", ";
    out << report.run_ids[i];
  }
  out << ")\n";
  out << std::left << std::setw(28) << "metric" << std::setw(10) << "mean"
      << std::setw(10) << "min" << "max\n";
  for (const auto& [name, summary] : report.metrics) {
    out << std::left << std::setw(28) << name << std::setw(10) << fixed(summary.mean, 4)
        << std::setw(10) << fixed(summary.min, 4) << fixed(summary.max, 4) << "\n";
  }
  if (report.common_subset) {
    out << "common-subset agreement (n=" << report.common_subset->subset_size
        << "): mean " << percent(report.common_subset->mean_rate) << ", per-run";
    for (const AgreementResult& rate : report.common_subset->per_run) {
      out << " " << percent_or_dash(rate.rate);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace jurykit::analytics
