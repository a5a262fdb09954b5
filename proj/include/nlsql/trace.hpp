#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsql/eval.hpp"
#include "nlsql/pipeline.hpp"

namespace nlsql {

/// Flat per-question provenance record. Everything any report prints is
/// recomputable from these alone.
struct TraceCandidate {
    int id = 0;
    std::string sql;
    std::string path;
    bool corrected = false;
    int parent_id = -1;
    int attempt = 0;
    std::string status;  // success | error | timeout
    std::string error_message;
    bool correct = false;
};

struct TraceRecord {
    std::string question_id;
    std::string db_id;
    std::string question;
    std::string hint;
    std::string gold_sql;
    std::string difficulty;
    bool gold_failed = false;
    std::string gold_error;
    std::vector<std::string> pruned_tables;
    std::vector<std::pair<std::string, std::string>> linked_columns;
    bool pruning_fallback = false;
    bool linking_empty = false;
    std::vector<TraceCandidate> candidates;
    std::vector<int> selection_votes;
    std::optional<int> selected_id;
    std::map<std::string, double> timings_ms;
    std::vector<std::string> stage_errors;
    std::string pipeline_error;  // whole-question failure, stage-attributed
};

/// Builds the trace for a finished pipeline run. `correct_ids` carries the
/// candidate ids whose results matched the gold query.
TraceRecord make_trace(const QuestionTask& task, const PipelineResult& result,
                       const std::string& gold_sql, const std::string& difficulty,
                       const std::vector<int>& correct_ids);

nlohmann::ordered_json trace_to_json(const TraceRecord& record);
TraceRecord trace_from_json(const nlohmann::json& doc);

/// Loads one record per *.json file under `dir`, ordered by file name.
/// Throws CorruptTraceError naming the offending file.
std::vector<TraceRecord> load_traces(const std::string& dir);

EvalRecord eval_record_from_trace(const TraceRecord& record);

/// Filesystem-safe name for a question id.
std::string trace_file_name(const std::string& question_id);

}  // namespace nlsql
