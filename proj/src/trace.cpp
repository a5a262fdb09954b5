#include "nlsql/trace.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include "nlsql/errors.hpp"

namespace nlsql {

TraceRecord make_trace(const QuestionTask& task, const PipelineResult& result,
                       const std::string& gold_sql, const std::string& difficulty,
                       const std::vector<int>& correct_ids) {
    TraceRecord record;
    record.question_id = task.question_id;
    record.db_id = task.db_id;
    record.question = task.question;
    record.hint = task.hint;
    record.gold_sql = gold_sql;
    record.difficulty = difficulty;
    record.pruned_tables = result.pruned_tables;
    record.linked_columns = result.linked_columns;
    record.pruning_fallback = result.pruning_fallback;
    record.linking_empty = result.linking_empty;
    record.selection_votes = result.selection_votes;
    record.selected_id = result.selected_id;
    record.timings_ms = result.stage_timings_ms;
    record.stage_errors = result.stage_errors;

    for (const auto& candidate : result.candidates) {
        TraceCandidate tc;
        tc.id = candidate.id;
        tc.sql = candidate.sql;
        tc.path = path_name(candidate.path);
        tc.corrected = !candidate.origin.is_initial();
        tc.parent_id = candidate.origin.parent_id;
        tc.attempt = candidate.origin.attempt;
        tc.status = exec_status_name(candidate.outcome.status);
        tc.error_message = candidate.outcome.error_message;
        tc.correct = std::find(correct_ids.begin(), correct_ids.end(), candidate.id) !=
                     correct_ids.end();
        record.candidates.push_back(std::move(tc));
    }
    return record;
}

nlohmann::ordered_json trace_to_json(const TraceRecord& record) {
    nlohmann::ordered_json doc;
    doc["question_id"] = record.question_id;
    doc["db_id"] = record.db_id;
    doc["question"] = record.question;
    doc["hint"] = record.hint;
    doc["gold_sql"] = record.gold_sql;
    doc["difficulty"] = record.difficulty;
    doc["gold_failed"] = record.gold_failed;
    if (record.gold_failed) doc["gold_error"] = record.gold_error;
    doc["pruned_tables"] = record.pruned_tables;
    nlohmann::ordered_json linked = nlohmann::ordered_json::array();
    for (const auto& [table, column] : record.linked_columns) {
        linked.push_back({table, column});
    }
    doc["linked_columns"] = std::move(linked);
    doc["pruning_fallback"] = record.pruning_fallback;
    doc["linking_empty"] = record.linking_empty;

    nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
    for (const auto& c : record.candidates) {
        nlohmann::ordered_json entry;
        entry["id"] = c.id;
        entry["sql"] = c.sql;
        entry["path"] = c.path;
        if (c.corrected) {
            entry["origin"] = {{"parent", c.parent_id}, {"attempt", c.attempt}};
        } else {
            entry["origin"] = "initial";
        }
        entry["status"] = c.status;
        if (!c.error_message.empty()) entry["error_message"] = c.error_message;
        entry["correct"] = c.correct;
        candidates.push_back(std::move(entry));
    }
    doc["candidates"] = std::move(candidates);

    nlohmann::ordered_json votes = nlohmann::ordered_json::array();
    for (int vote : record.selection_votes) {
        if (vote < 0) {
            votes.push_back(nullptr);
        } else {
            votes.push_back(vote);
        }
    }
    doc["selection_votes"] = std::move(votes);
    if (record.selected_id) {
        doc["selected_id"] = *record.selected_id;
    } else {
        doc["selected_id"] = nullptr;
    }
    doc["timings_ms"] = record.timings_ms;
    if (!record.stage_errors.empty()) doc["stage_errors"] = record.stage_errors;
    if (!record.pipeline_error.empty()) doc["error"] = record.pipeline_error;
    return doc;
}

TraceRecord trace_from_json(const nlohmann::json& doc) {
    TraceRecord record;
    record.question_id = doc.value("question_id", std::string());
    record.db_id = doc.value("db_id", std::string());
    record.question = doc.value("question", std::string());
    record.hint = doc.value("hint", std::string());
    record.gold_sql = doc.value("gold_sql", std::string());
    record.difficulty = doc.value("difficulty", std::string());
    record.gold_failed = doc.value("gold_failed", false);
    record.gold_error = doc.value("gold_error", std::string());
    if (doc.contains("pruned_tables")) {
        record.pruned_tables = doc["pruned_tables"].get<std::vector<std::string>>();
    }
    for (const auto& pair : doc.value("linked_columns", nlohmann::json::array())) {
        record.linked_columns.emplace_back(pair.at(0).get<std::string>(),
                                           pair.at(1).get<std::string>());
    }
    record.pruning_fallback = doc.value("pruning_fallback", false);
    record.linking_empty = doc.value("linking_empty", false);
    for (const auto& entry : doc.value("candidates", nlohmann::json::array())) {
        TraceCandidate c;
        c.id = entry.at("id").get<int>();
        c.sql = entry.value("sql", std::string());
        c.path = entry.value("path", std::string("full_only"));
        if (entry.contains("origin") && entry["origin"].is_object()) {
            c.corrected = true;
            c.parent_id = entry["origin"].value("parent", -1);
            c.attempt = entry["origin"].value("attempt", 0);
        }
        c.status = entry.value("status", std::string("error"));
        c.error_message = entry.value("error_message", std::string());
        c.correct = entry.value("correct", false);
        record.candidates.push_back(std::move(c));
    }
    for (const auto& vote : doc.value("selection_votes", nlohmann::json::array())) {
        record.selection_votes.push_back(vote.is_null() ? -1 : vote.get<int>());
    }
    if (doc.contains("selected_id") && !doc["selected_id"].is_null()) {
        record.selected_id = doc["selected_id"].get<int>();
    }
    if (doc.contains("timings_ms")) {
        record.timings_ms = doc["timings_ms"].get<std::map<std::string, double>>();
    }
    if (doc.contains("stage_errors")) {
        record.stage_errors = doc["stage_errors"].get<std::vector<std::string>>();
    }
    record.pipeline_error = doc.value("error", std::string());
    return record;
}

std::vector<TraceRecord> load_traces(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw FileNotFoundError("trace directory not found: " + dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<TraceRecord> records;
    for (const auto& file : files) {
        std::ifstream in(file);
        nlohmann::json doc;
        try {
            in >> doc;
            records.push_back(trace_from_json(doc));
        } catch (const std::exception& e) {
            throw CorruptTraceError("corrupt trace " + file.string() + ": " + e.what());
        }
    }
    return records;
}

EvalRecord eval_record_from_trace(const TraceRecord& record) {
    EvalRecord eval;
    eval.question_id = record.question_id;
    eval.gold_sql = record.gold_sql;
    eval.difficulty = record.difficulty;
    for (const auto& c : record.candidates) {
        CandidateOutcome outcome;
        outcome.sql = c.sql;
        outcome.path = path_from_name(c.path).value_or(PathKind::FullOnly);
        outcome.executable = c.status == "success";
        outcome.correct = c.correct;
        eval.candidate_outcomes.push_back(std::move(outcome));

        if (record.selected_id && c.id == *record.selected_id) {
            eval.predicted_sql = c.sql;
            eval.executable = c.status == "success";
            eval.correct = c.correct;
            eval.selected_path = path_from_name(c.path);
        }
    }
    return eval;
}

std::string trace_file_name(const std::string& question_id) {
    std::string name;
    for (char c : question_id) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') {
            name += c;
        } else {
            name += '_';
        }
    }
    if (name.empty()) name = "q";
    return name + ".json";
}

}  // namespace nlsql
