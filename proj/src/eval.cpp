#include "nlsql/eval.hpp"

#include <algorithm>
#include <fstream>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

std::string require_string(const nlohmann::json& entry, const char* field, size_t index) {
    if (!entry.contains(field) || !entry[field].is_string()) {
        throw MalformedDatasetError("dataset entry " + std::to_string(index) +
                                    " is missing field '" + field + "'");
    }
    return entry[field].get<std::string>();
}

double percent(int part, int total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

}  // namespace

std::optional<DatasetFormat> dataset_format_from_name(const std::string& name) {
    if (name == "bird") return DatasetFormat::Bird;
    if (name == "spider") return DatasetFormat::Spider;
    return std::nullopt;
}

std::vector<DatasetExample> load_dataset(const std::string& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("dataset file not found: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDatasetError(std::string("dataset is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw MalformedDatasetError("dataset root must be a JSON array");

    std::vector<DatasetExample> examples;
    examples.reserve(doc.size());
    for (size_t i = 0; i < doc.size(); ++i) {
        const auto& entry = doc[i];
        DatasetExample ex;
        ex.db_id = require_string(entry, "db_id", i);
        ex.question = require_string(entry, "question", i);
        if (format == DatasetFormat::Bird) {
            ex.gold_sql = require_string(entry, "SQL", i);
            if (entry.contains("question_id")) {
                const auto& qid = entry["question_id"];
                ex.question_id = qid.is_string() ? qid.get<std::string>()
                                                 : std::to_string(qid.get<long long>());
            } else {
                ex.question_id = std::to_string(i);
            }
            if (entry.contains("evidence") && entry["evidence"].is_string()) {
                ex.hint = entry["evidence"].get<std::string>();
            }
            if (entry.contains("difficulty") && entry["difficulty"].is_string()) {
                ex.difficulty = entry["difficulty"].get<std::string>();
            }
        } else {
            ex.gold_sql = require_string(entry, "query", i);
            ex.question_id = std::to_string(i);
        }
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::pair<bool, bool> judge(const std::optional<std::string>& predicted_sql,
                            const std::string& gold_sql, const std::string& db_path,
                            std::chrono::milliseconds timeout, int row_limit) {
    ExecutionOutcome gold = execute(db_path, gold_sql, timeout, row_limit);
    if (!gold.ok()) {
        throw Error("gold query failed to execute: " + gold.error_message);
    }
    if (!predicted_sql) return {false, false};
    ExecutionOutcome pred = execute(db_path, *predicted_sql, timeout, row_limit);
    if (!pred.ok()) return {false, false};
    if (pred.truncated || gold.truncated) return {true, false};
    bool correct = false;
    try {
        correct = results_match({pred.columns, pred.rows}, {gold.columns, gold.rows});
    } catch (const IncomparableShapesError&) {
        correct = false;
    }
    return {true, correct};
}

Report compute_report(const std::vector<EvalRecord>& records) {
    Report report;
    report.total = static_cast<int>(records.size());

    int correct = 0;
    int executable = 0;
    std::map<std::string, std::array<int, 3>> by_difficulty;  // total, correct, executable
    bool any_candidates = false;
    size_t max_candidates = 0;

    for (const auto& record : records) {
        if (record.correct && !record.executable) {
            throw Error("record " + record.question_id + " is correct but not executable");
        }
        correct += record.correct ? 1 : 0;
        executable += record.executable ? 1 : 0;
        if (!record.difficulty.empty()) {
            auto& bucket = by_difficulty[record.difficulty];
            bucket[0] += 1;
            bucket[1] += record.correct ? 1 : 0;
            bucket[2] += record.executable ? 1 : 0;
        }
        if (record.correct && record.selected_path) {
            report.path_distribution[path_name(*record.selected_path)] += 1;
        }
        if (!record.candidate_outcomes.empty()) {
            any_candidates = true;
            max_candidates = std::max(max_candidates, record.candidate_outcomes.size());
        }
    }

    report.ex_percent = percent(correct, report.total);
    report.ep_percent = percent(executable, report.total);
    for (const auto& [label, bucket] : by_difficulty) {
        report.per_difficulty[label] = {bucket[0], percent(bucket[1], bucket[0]),
                                        percent(bucket[2], bucket[0])};
    }
    if (any_candidates) {
        for (size_t n = 1; n <= max_candidates; ++n) {
            report.top_n[static_cast<int>(n)] = top_n(records, static_cast<int>(n));
        }
    }
    return report;
}

double top_n(const std::vector<EvalRecord>& records, int n) {
    if (records.empty()) return 0.0;
    int hits = 0;
    for (const auto& record : records) {
        size_t limit = std::min(record.candidate_outcomes.size(), static_cast<size_t>(n));
        for (size_t i = 0; i < limit; ++i) {
            if (record.candidate_outcomes[i].correct) {
                ++hits;
                break;
            }
        }
    }
    return percent(hits, static_cast<int>(records.size()));
}

nlohmann::ordered_json report_to_json(const Report& report) {
    nlohmann::ordered_json doc;
    doc["total"] = report.total;
    doc["excluded_gold"] = report.excluded_gold;
    doc["ex_percent"] = report.ex_percent;
    doc["ep_percent"] = report.ep_percent;
    if (!report.per_difficulty.empty()) {
        nlohmann::ordered_json breakdown;
        for (const auto& [label, stats] : report.per_difficulty) {
            breakdown[label] = {{"total", stats.total},
                                {"ex_percent", stats.ex_percent},
                                {"ep_percent", stats.ep_percent}};
        }
        doc["per_difficulty"] = std::move(breakdown);
    }
    nlohmann::ordered_json paths;
    for (PathKind path : kAllPaths) {
        auto it = report.path_distribution.find(path_name(path));
        paths[path_name(path)] = it == report.path_distribution.end() ? 0 : it->second;
    }
    doc["path_distribution"] = std::move(paths);
    if (!report.top_n.empty()) {
        nlohmann::ordered_json tn;
        for (const auto& [n, value] : report.top_n) tn[std::to_string(n)] = value;
        doc["top_n"] = std::move(tn);
    }
    if (!report.config_echo.is_null()) doc["config"] = report.config_echo;
    return doc;
}

std::vector<SweepRow> sweep(SweepAxis axis, const PipelineConfig& base,
                            const std::function<Report(const PipelineConfig&)>& run_with) {
    std::vector<SweepRow> rows;
    if (axis == SweepAxis::Candidates) {
        for (int per_path = 1; per_path <= 6; ++per_path) {
            PipelineConfig config = base;
            config.candidates_per_path = per_path;
            config.toggles.multi_candidate = true;
            Report report = run_with(config);
            rows.push_back({"candidates", "pool_" + std::to_string(4 * per_path),
                            report.ex_percent, report.ep_percent});
        }
    } else {
        for (int rounds : {1, 3, 5, 7}) {
            PipelineConfig config = base;
            config.selection_rounds = rounds;
            Report report = run_with(config);
            rows.push_back({"rounds", "rounds_" + std::to_string(rounds), report.ex_percent,
                            report.ep_percent});
        }
    }
    return rows;
}

std::vector<std::pair<std::string, StageToggles>> component_toggle_matrix() {
    std::vector<std::pair<std::string, StageToggles>> matrix;
    StageToggles full;
    matrix.emplace_back("full", full);
    StageToggles t = full;
    t.pruning = false;
    matrix.emplace_back("no_pruning", t);
    t = full;
    t.linking = false;
    matrix.emplace_back("no_linking", t);
    t = full;
    t.multi_candidate = false;
    matrix.emplace_back("no_multi_candidate", t);
    t = full;
    t.correction = false;
    matrix.emplace_back("no_correction", t);
    t = full;
    t.selection = false;
    matrix.emplace_back("no_selection", t);
    return matrix;
}

}  // namespace nlsql
