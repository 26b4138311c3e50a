// jurykit: grade submissions against weighted rubric contracts with
// deterministic checks and five-judge juries, then analyze the traces.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "jurykit/analytics.hpp"
#include "jurykit/contract.hpp"
#include "jurykit/grading.hpp"
#include "jurykit/judge_gateway.hpp"
#include "jurykit/trace_store.hpp"

namespace fs = std::filesystem;
using namespace jurykit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

void print_report(const std::string& task_id, const ValidationReport& report) {
  if (report.runnable()) {
    std::cout << task_id << ": ok\n";
    return;
  }
  std::cout << task_id << ": " << report.violations.size() << " violation(s)\n";
  for (const Violation& violation : report.violations) {
    std::cout << "  " << violation.path << ": " << violation.message << "\n";
  }
}

int cmd_validate(const std::string& bundle_path) {
  std::vector<EvaluationContract> contracts;
  try {
    contracts = load_bundle(bundle_path);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  bool all_runnable = true;
  for (const EvaluationContract& contract : contracts) {
    const ValidationReport report = validate_contract(contract);
    print_report(contract.task_id, report);
    all_runnable = all_runnable && report.runnable();
  }
  const ValidationReport set_report = validate_bundle_set(contracts);
  if (!set_report.runnable()) {
    print_report("(bundle set)", set_report);
    all_runnable = false;
  }
  return all_runnable ? kExitOk : kExitValidation;
}

struct RunConfig {
  std::string bundle_path;
  std::string submissions_path;
  std::vector<std::string> pool_paths;
  std::string out_root;
  std::string run_id;
  std::string solver_id = "solver";
  std::size_t concurrency = 10;
  std::string script_path;
};

std::optional<Submission> load_submission(const fs::path& dir,
                                          const std::string& task_id,
                                          const std::string& solver_id) {
  for (const fs::path& candidate : {dir / (task_id + ".txt"), dir / task_id}) {
    std::ifstream in(candidate);
    if (!in) continue;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return Submission::make(task_id, solver_id, buffer.str());
  }
  return std::nullopt;
}

void resolve_reference_paths(EvaluationContract& contract, const fs::path& base) {
  for (ReferenceFile& ref : contract.reference_files) {
    if (!ref.path.empty() && !fs::path(ref.path).is_absolute())
      ref.path = (base / ref.path).string();
  }
}

std::string pattern_counts(const TaskResult& result) {
  int unanimous = 0, dissenter = 0, split = 0, reduced = 0;
  for (const CriterionResult& entry : result.criterion_results) {
    switch (entry.vote_pattern) {
      case VotePattern::Unanimous: ++unanimous; break;
      case VotePattern::OneDissenter: ++dissenter; break;
      case VotePattern::Split: ++split; break;
      case VotePattern::Reduced: ++reduced; break;
      case VotePattern::NotApplicable: break;
    }
  }
  std::ostringstream out;
  out << "5:0=" << unanimous << " 4:1=" << dissenter << " 3:2=" << split;
  if (reduced > 0) out << " reduced=" << reduced;
  return out.str();
}

int cmd_run(const RunConfig& config) {
  std::vector<EvaluationContract> contracts;
  std::vector<JuryPool> pools;
  std::shared_ptr<ScriptedBackend> script;
  try {
    contracts = load_bundle(config.bundle_path);

    bool runnable = validate_bundle_set(contracts).runnable();
    for (const EvaluationContract& contract : contracts) {
      const ValidationReport report = validate_contract(contract);
      if (!report.runnable()) {
        print_report(contract.task_id, report);
        runnable = false;
      }
    }
    if (!runnable) {
      std::cerr << "error: bundle is not runnable\n";
      return kExitConfig;
    }

    const fs::path bundle_base = fs::is_directory(config.bundle_path)
                                     ? fs::path(config.bundle_path)
                                     : fs::path(config.bundle_path).parent_path();
    for (EvaluationContract& contract : contracts) {
      contract = normalize_weights(contract);
      resolve_reference_paths(contract, bundle_base);
    }

    for (const std::string& pool_path : config.pool_paths)
      pools.push_back(load_pool(pool_path));
    if (pools.size() == 2 && pools[0].pool_id == pools[1].pool_id)
      throw MalformedDocument("the two pools must have distinct pool ids");

    if (!config.script_path.empty())
      script = ScriptedBackend::from_file(config.script_path);
    if (!fs::is_directory(config.submissions_path))
      throw IoError("submissions path is not a directory: " + config.submissions_path);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  // One client per pool; a scripted backend overrides HTTP for offline runs.
  std::vector<std::unique_ptr<JudgeClient>> clients;
  for (const JuryPool& pool : pools) {
    std::shared_ptr<JudgeBackend> backend = script;
    if (!backend) {
      HttpBackendConfig http;
      http.endpoint = pool.endpoint;
      http.auth_env = pool.auth_env;
      http.concurrency_cap = static_cast<int>(config.concurrency);
      backend = std::make_shared<HttpJudgeBackend>(http);
    }
    clients.push_back(std::make_unique<JudgeClient>(std::move(backend)));
  }

  const std::string run_id =
      config.run_id.empty() ? "run-" + config.solver_id : config.run_id;
  RunTrace trace;
  trace.run_id = run_id;
  trace.solver_id = config.solver_id;
  trace.pools = pools;

  GradeOptions options;
  options.concurrency = config.concurrency;

  for (const EvaluationContract& contract : contracts) {
    TaskRecord record;
    record.task_id = contract.task_id;
    record.contract = contract;
    record.submission =
        load_submission(config.submissions_path, contract.task_id, config.solver_id);
    if (!record.submission) {
      record.flags.push_back(kFlagMissingSubmission);
      std::cout << contract.task_id << ": flagged (" << kFlagMissingSubmission
                << "), excluded from grading\n";
      trace.tasks.push_back(std::move(record));
      continue;
    }

    try {
      for (std::size_t p = 0; p < pools.size(); ++p) {
        TaskResult result =
            grade_task(contract, *record.submission, pools[p], *clients[p], options);
        if (result.criterion_results.empty())
          record.flags.push_back(kFlagEmptyResults);
        for (const std::string& flag : result.flags) record.flags.push_back(flag);
        std::cout << contract.task_id << " [" << pools[p].pool_id
                  << "]: S=" << result.score << " "
                  << (result.passed ? "pass" : "fail") << " (" << pattern_counts(result)
                  << ")\n";
        record.results[pools[p].pool_id] = std::move(result);
      }
    } catch (const AuthError& ex) {
      std::cerr << "error: " << ex.what() << "\n";
      return kExitConfig;
    } catch (const MissingScriptEntry& ex) {
      std::cerr << "error: " << ex.what() << "\n";
      return kExitConfig;
    } catch (const Error& ex) {
      record.flags.push_back(std::string(kFlagVerifierError) + ":" + ex.what());
      record.results.clear();
      std::cout << contract.task_id << ": flagged (" << kFlagVerifierError << ")\n";
    }
    trace.tasks.push_back(std::move(record));
  }

  try {
    write_trace(trace, config.out_root);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  std::cout << "trace written to " << (fs::path(config.out_root) / run_id).string()
            << "\n";
  return kExitOk;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

int cmd_compare(const std::string& trace_root, const std::vector<std::string>& run_ids,
                const std::string& pool_a, const std::string& pool_b,
                const std::string& out_dir) {
  std::vector<analytics::ComparisonReport> reports;
  std::vector<std::vector<analytics::CriterionInstance>> run_instances;
  try {
    for (const std::string& run_id : run_ids) {
      const RunTrace trace = read_trace(trace_root, run_id);
      reports.push_back(analytics::compare_pools(trace, pool_a, pool_b));
      run_instances.push_back(analytics::collect_instances(trace));
    }
  } catch (const MissingPool& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  try {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    for (const analytics::ComparisonReport& report : reports) {
      const std::string text = analytics::render_report_text(report);
      std::cout << text << "\n";
      if (!out_dir.empty()) {
        write_text_file(fs::path(out_dir) / (report.run_id + "_comparison.json"),
                        analytics::report_to_json(report).dump(2));
        write_text_file(fs::path(out_dir) / (report.run_id + "_comparison.txt"), text);
      }
    }
    if (reports.size() > 1) {
      const analytics::CrossRunReport cross =
          analytics::summarize_runs(reports, run_instances, pool_a, pool_b);
      const std::string text = analytics::render_cross_run_text(cross);
      std::cout << text;
      if (!out_dir.empty()) {
        write_text_file(fs::path(out_dir) / "cross_run_summary.json",
                        analytics::cross_run_report_to_json(cross).dump(2));
        write_text_file(fs::path(out_dir) / "cross_run_summary.txt", text);
      }
    }
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_export_matrix(const std::string& trace_root,
                      const std::vector<std::string>& run_ids,
                      const std::string& pool_a, const std::string& pool_b,
                      const std::string& out_path, const std::string& sd_mode) {
  std::vector<analytics::CriterionInstance> filtered;
  try {
    for (const std::string& run_id : run_ids) {
      const RunTrace trace = read_trace(trace_root, run_id);
      const std::vector<analytics::CriterionInstance> instances =
          analytics::collect_instances(trace);
      for (analytics::CriterionInstance& instance :
           analytics::comparable_row_filter(instances, pool_a, pool_b)) {
        filtered.push_back(std::move(instance));
      }
    }
    if (filtered.empty()) throw EmptyAfterFilter();

    const analytics::StdDevMode mode = sd_mode == "population"
                                           ? analytics::StdDevMode::kPopulation
                                           : analytics::StdDevMode::kSample;
    const std::vector<analytics::OrdinalRow> rows =
        analytics::build_ordinal_rows(filtered, pool_a, pool_b, mode);
    const analytics::DesignMatrix matrix = analytics::design_matrix(rows);

    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    analytics::write_design_matrix_csv(matrix, out);
    std::cout << "wrote " << matrix.rows.size() << " rows x "
              << matrix.column_names.size() << " columns (+ severity) to " << out_path
              << "\n";
  } catch (const EmptyAfterFilter& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_report(const std::string& trace_root, const std::string& run_id) {
  RunTrace trace;
  try {
    trace = read_trace(trace_root, run_id);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  std::cout << "run: " << trace.run_id << "   solver: " << trace.solver_id
            << "   pools:";
  for (const JuryPool& pool : trace.pools) std::cout << " " << pool.pool_id;
  std::cout << "\n\n";
  for (const TaskRecord& record : trace.tasks) {
    std::cout << record.task_id << ":";
    if (record.errored()) {
      std::cout << " flagged";
      for (const std::string& flag : record.flags) std::cout << " [" << flag << "]";
      std::cout << "\n";
      continue;
    }
    for (const auto& [pool_id, result] : record.results) {
      std::cout << "  " << pool_id << " S=" << result.score << " "
                << (result.passed ? "pass" : "fail");
    }
    for (const std::string& flag : record.flags) std::cout << " [" << flag << "]";
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jurykit: rubric- and jury-based evaluation engine"};
  app.require_subcommand(1);

  // validate
  std::string bundle_path;
  CLI::App* validate = app.add_subcommand("validate", "check contracts in a bundle");
  validate->add_option("--bundle", bundle_path, "bundle file or directory")->required();

  // run
  RunConfig run_config;
  CLI::App* run = app.add_subcommand("run", "grade submissions under 1 or 2 pools");
  run->add_option("--bundle", run_config.bundle_path, "bundle file or directory")
      ->required();
  run->add_option("--submissions", run_config.submissions_path,
                  "directory of <task_id>.txt files")
      ->required();
  run->add_option("--pool", run_config.pool_paths, "pool config file (repeat for two)")
      ->required()
      ->expected(1, 2);
  run->add_option("--out", run_config.out_root, "trace output root")->required();
  run->add_option("--run-id", run_config.run_id, "run identifier");
  run->add_option("--solver-id", run_config.solver_id, "solver label");
  run->add_option("--concurrency", run_config.concurrency, "max concurrent judge calls");
  run->add_option("--script", run_config.script_path,
                  "scripted-judge file (overrides HTTP)");

  // compare
  std::string trace_root;
  std::vector<std::string> run_ids;
  std::string pool_a;
  std::string pool_b;
  std::string out_dir;
  CLI::App* compare = app.add_subcommand("compare", "paired-pool analytics for runs");
  compare->add_option("--trace", trace_root, "trace root directory")->required();
  compare->add_option("--run", run_ids, "run id (repeatable)")->required();
  compare->add_option("--pool-a", pool_a, "baseline pool id")->required();
  compare->add_option("--pool-b", pool_b, "comparison pool id")->required();
  compare->add_option("--out", out_dir, "directory for report files");

  // export-matrix
  std::string matrix_out;
  std::string sd_mode = "sample";
  CLI::App* export_matrix =
      app.add_subcommand("export-matrix", "filtered long-format design matrix");
  export_matrix->add_option("--trace", trace_root, "trace root directory")->required();
  export_matrix->add_option("--run", run_ids, "run id (repeatable)")->required();
  export_matrix->add_option("--pool-a", pool_a, "baseline pool id")->required();
  export_matrix->add_option("--pool-b", pool_b, "comparison pool id")->required();
  export_matrix->add_option("--out", matrix_out, "output csv path")->required();
  export_matrix->add_option("--sd", sd_mode, "z-score denominator: sample|population")
      ->check(CLI::IsMember({"sample", "population"}));

  // report
  std::string report_run_id;
  CLI::App* report = app.add_subcommand("report", "render a stored run trace");
  report->add_option("--trace", trace_root, "trace root directory")->required();
  report->add_option("--run", report_run_id, "run id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex) == 0 ? kExitOk : kExitConfig;
  }

  if (*validate) return cmd_validate(bundle_path);
  if (*run) return cmd_run(run_config);
  if (*compare) return cmd_compare(trace_root, run_ids, pool_a, pool_b, out_dir);
  if (*export_matrix)
    return cmd_export_matrix(trace_root, run_ids, pool_a, pool_b, matrix_out, sd_mode);
  if (*report) return cmd_report(trace_root, report_run_id);
  return kExitConfig;
}
