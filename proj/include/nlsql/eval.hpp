#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsql/executor.hpp"
#include "nlsql/pipeline.hpp"

namespace nlsql {

enum class DatasetFormat { Bird, Spider };

std::optional<DatasetFormat> dataset_format_from_name(const std::string& name);

struct DatasetExample {
    std::string question_id;
    std::string db_id;
    std::string question;
    std::string hint;  // BIRD "evidence"; empty when absent
    std::string gold_sql;
    std::string difficulty;  // optional label
};

/// Reads a benchmark JSON file in the published BIRD or Spider field layout.
/// Throws MalformedDatasetError naming the offending entry and field.
std::vector<DatasetExample> load_dataset(const std::string& path, DatasetFormat format);

struct CandidateOutcome {
    std::string sql;
    PathKind path = PathKind::FullOnly;
    bool executable = false;
    bool correct = false;
};

struct EvalRecord {
    std::string question_id;
    std::optional<std::string> predicted_sql;
    std::string gold_sql;
    bool executable = false;
    bool correct = false;
    std::optional<PathKind> selected_path;
    std::vector<CandidateOutcome> candidate_outcomes;  // candidate-id order
    std::string difficulty;
};

struct DifficultyStats {
    int total = 0;
    double ex_percent = 0.0;
    double ep_percent = 0.0;
};

struct Report {
    int total = 0;  // N, gold-failures excluded
    int excluded_gold = 0;
    double ex_percent = 0.0;
    double ep_percent = 0.0;
    std::map<std::string, DifficultyStats> per_difficulty;  // empty when unlabeled
    std::map<std::string, int> path_distribution;           // over correct records
    std::map<int, double> top_n;                            // empty without candidate outcomes
    nlohmann::ordered_json config_echo;                     // resolved run configuration
};

/// executable = predicted executes; correct = executable and the result sets
/// match the gold result. Gold must execute successfully (validated by the
/// caller); a failing gold throws.
std::pair<bool, bool> judge(const std::optional<std::string>& predicted_sql,
                            const std::string& gold_sql, const std::string& db_path,
                            std::chrono::milliseconds timeout = kDefaultExecTimeout,
                            int row_limit = kDefaultRowLimit);

Report compute_report(const std::vector<EvalRecord>& records);

/// Percentage of questions whose first n candidates include a correct one.
double top_n(const std::vector<EvalRecord>& records, int n);

nlohmann::ordered_json report_to_json(const Report& report);

struct SweepRow {
    std::string axis;
    std::string setting;
    double ex_percent = 0.0;
    double ep_percent = 0.0;
};

enum class SweepAxis { Candidates, Rounds };

/// One full run per setting, everything else fixed. Candidates covers
/// per-path sizes 1..6 (pools 4..24); rounds covers {1, 3, 5, 7}.
std::vector<SweepRow> sweep(SweepAxis axis, const PipelineConfig& base,
                            const std::function<Report(const PipelineConfig&)>& run_with);

/// The component-toggle matrix: the full pipeline plus the five single
/// component knockouts, in a fixed order.
std::vector<std::pair<std::string, StageToggles>> component_toggle_matrix();

}  // namespace nlsql
