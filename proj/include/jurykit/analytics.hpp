#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jurykit/grading.hpp"
#include "jurykit/trace_store.hpp"

namespace jurykit::analytics {

/// One llm-judge criterion graded under one or two pools; the unit of every
/// jury comparison.
struct PoolVotes {
  std::vector<JudgeVote> votes;
  Decision decision = Decision::Fail;

  std::size_t usable() const;
  std::size_t pass_votes() const;
  bool full_panel() const;  // 5 usable votes, no failures
  bool tie() const;

  friend bool operator==(const PoolVotes&, const PoolVotes&) = default;
};

struct CriterionInstance {
  std::string run_id;
  std::string task_id;
  std::string criterion_id;
  double weight = 0.0;
  std::map<std::string, PoolVotes> pools;  // keyed by pool_id
  std::int64_t char_count = 0;
  bool submission_present = false;
  bool extracted_text_present = false;
  std::vector<std::string> task_flags;

  std::pair<std::string, std::string> key() const { return {task_id, criterion_id}; }
};

/// Collects one instance per llm-judge criterion of every graded task.
std::vector<CriterionInstance> collect_instances(const RunTrace& trace);

struct AgreementResult {
  std::optional<double> rate;  // absent when n == 0, never reported as 0
  std::size_t n = 0;
};

/// Fraction of instances where both pools reach the same consensus decision.
/// Symmetric in pool order.
AgreementResult majority_agreement(const std::vector<CriterionInstance>& instances,
                                   const std::string& pool_a, const std::string& pool_b);

struct CommonSubsetResult {
  std::size_t subset_size = 0;
  std::vector<AgreementResult> per_run;
  double mean_rate = 0.0;
};

/// Agreement restricted to criterion keys present in every run.
/// Throws EmptyIntersection.
CommonSubsetResult common_subset_agreement(
    const std::vector<std::vector<CriterionInstance>>& runs,
    const std::string& pool_a, const std::string& pool_b);

struct PatternRates {
  std::size_t total = 0;        // instances with votes for the pool
  std::size_t full_panels = 0;  // exactly 5 usable votes
  std::size_t reduced = 0;
  // Rates over full-panel instances; they sum to 1 when full_panels > 0.
  std::optional<double> unanimous;
  std::optional<double> one_dissenter;
  std::optional<double> split;
  // Reduced share is reported over all instances with votes.
  double reduced_share = 0.0;
};

PatternRates dissent_rates(const std::vector<CriterionInstance>& instances,
                           const std::string& pool_id);  // throws EmptySample

struct ScoreStability {
  std::size_t n = 0;
  std::optional<double> pearson_r;  // absent for constant vectors or n < 2
  double median_delta = 0.0;
  double mean_abs_delta = 0.0;
  double sd_delta = 0.0;  // sample standard deviation of the deltas
  double max_abs_delta = 0.0;
  double frac_zero = 0.0;
};

/// Statistics of the paired deltas a - b. Throws LengthMismatch.
ScoreStability score_stability(const std::vector<double>& a,
                               const std::vector<double>& b);

/// Normalized run-level score: sum(scores) / (100 * n). Throws EmptySample.
double benchmark_aggregate(const std::vector<double>& scores);

/// Fraction of tasks with score >= threshold (inclusive).
/// Throws EmptySample / LengthMismatch.
double pass_rate(const std::vector<double>& scores,
                 const std::vector<double>& thresholds);

struct PoolEconomics {
  std::size_t n = 0;  // criterion instances with telemetry
  // Means over instances of the pooled totals across the 5 calls of a panel.
  double mean_cost_usd = 0.0;
  double mean_latency_ms_sum = 0.0;
  double mean_latency_ms_max = 0.0;  // max-over-panel alternative, labeled
  double mean_output_tokens = 0.0;
  double mean_total_tokens = 0.0;
};

struct EconomicsComparison {
  PoolEconomics pool_a;
  PoolEconomics pool_b;
  // 1 - b/a per metric; absent when the pool_a metric is zero.
  std::optional<double> reduction_cost;
  std::optional<double> reduction_latency;
  std::optional<double> reduction_output_tokens;
  std::optional<double> reduction_total_tokens;
};

EconomicsComparison economics_summary(const std::vector<CriterionInstance>& instances,
                                      const std::string& pool_a,
                                      const std::string& pool_b);

/// Helper for the reduction columns: 1 - b/a, absent when a == 0.
std::optional<double> metric_reduction(double a, double b);

/// Keeps instances where: both pools produced a non-tie decision, both
/// panels are full with no judge failure, the task carries no error flag,
/// and the submission is present with extracted text.
std::vector<CriterionInstance> comparable_row_filter(
    const std::vector<CriterionInstance>& instances, const std::string& pool_a,
    const std::string& pool_b);

/// Ordinal disagreement coding for a full 5-vote panel:
/// 0 unanimous (5:0), 1 one dissenter (4:1), 2 high split (3:2).
/// Throws ReducedPanel for anything but 5 usable votes.
int disagreement_severity(const std::vector<JudgeVote>& votes);

enum class StdDevMode { kSample, kPopulation };

/// z-scored log(1 + chars) over the provided sample. Sample size must be
/// >= 2 and non-constant. Mode selects the n-1 (default) or n denominator.
std::vector<double> length_feature(const std::vector<std::int64_t>& char_counts,
                                   StdDevMode mode = StdDevMode::kSample);

/// One long-format analysis row: criterion instance x pool.
struct OrdinalRow {
  std::string run_id;
  std::string task_id;
  std::string criterion_id;
  int comparison_pool = 0;  // 1 when the row belongs to pool_b
  int severity = 0;
  double length_z = 0.0;
  std::int64_t char_count = 0;
};

/// Expands filtered instances into two rows each (pool_a then pool_b) with
/// the length feature z-scored across the unique instances and shared by
/// both rows of an instance.
std::vector<OrdinalRow> build_ordinal_rows(
    const std::vector<CriterionInstance>& filtered, const std::string& pool_a,
    const std::string& pool_b, StdDevMode mode = StdDevMode::kSample);

struct OrdinalModelCoefficients {
  double intercept = 0.0;
  double beta_length = 0.0;
  double beta_compact = 0.0;
  double beta_interaction = 0.0;
  std::map<std::string, double> run_effects;  // missing run -> reference (0)
  double cutpoint_low = 0.0;
  double cutpoint_high = 1.0;  // must exceed cutpoint_low
  double random_intercept = 0.0;
};

struct CategoryProbabilities {
  double unanimous = 0.0;
  double one_dissenter = 0.0;
  double split = 0.0;
};

/// Cumulative-logit link: P(D<=k) = sigmoid(cutpoint_k - eta) with
/// eta = intercept + beta_length*L + beta_compact*C + beta_interaction*L*C
///       + run effect + random intercept. Throws InvalidCutpoints.
CategoryProbabilities ordinal_predict(const OrdinalModelCoefficients& coeffs,
                                      double length_z, int comparison_pool,
                                      const std::string& run_id = {});

/// Category probabilities averaged equally over every run-effect profile.
CategoryProbabilities ordinal_predict_run_averaged(
    const OrdinalModelCoefficients& coeffs, double length_z, int comparison_pool);

struct DesignMatrix {
  std::vector<std::string> column_names;  // intercept, length_z, pool, ...
  std::vector<std::vector<double>> rows;
  std::vector<int> outcomes;  // severity per row
};

/// Columns: intercept, length feature, pool indicator, their product, then
/// reference-coded run dummies (lexicographically first run is the
/// reference). Deterministic order.
DesignMatrix design_matrix(const std::vector<OrdinalRow>& rows);

void write_design_matrix_csv(const DesignMatrix& matrix, std::ostream& out);

struct CrossRunSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

CrossRunSummary cross_run_summary(const std::vector<double>& values);  // EmptySample

/// The full paired-pool analytics for one run.
struct ComparisonReport {
  std::string run_id;
  std::string pool_a;
  std::string pool_b;
  std::size_t n_instances = 0;
  AgreementResult agreement;
  std::map<std::string, PatternRates> pattern_rates;            // per pool
  std::map<std::string, std::map<std::string, double>> scores;  // pool -> task -> S
  ScoreStability stability;
  std::map<std::string, double> benchmark;  // pool -> aggregate in [0,1]
  std::map<std::string, double> task_pass_rate;
  std::size_t graded_tasks = 0;
  EconomicsComparison economics;
};

/// Throws MissingPool when the trace lacks results for a pool.
ComparisonReport compare_pools(const RunTrace& trace, const std::string& pool_a,
                               const std::string& pool_b);

nlohmann::json report_to_json(const ComparisonReport& report);
std::string render_report_text(const ComparisonReport& report);

/// Mean and run-wise range for the headline metrics of several reports,
/// plus common-subset agreement over the same runs.
struct CrossRunReport {
  std::vector<std::string> run_ids;
  std::map<std::string, CrossRunSummary> metrics;
  std::optional<CommonSubsetResult> common_subset;
};

CrossRunReport summarize_runs(const std::vector<ComparisonReport>& reports,
                              const std::vector<std::vector<CriterionInstance>>& runs,
                              const std::string& pool_a, const std::string& pool_b);

nlohmann::json cross_run_report_to_json(const CrossRunReport& report);
std::string render_cross_run_text(const CrossRunReport& report);

}  // namespace jurykit::analytics
