#include <pybind11/chrono.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlsql/bench.hpp"
#include "nlsql/errors.hpp"

namespace py = pybind11;
using namespace nlsql;

namespace {

py::object value_to_py(const Value& value) {
    if (std::holds_alternative<std::monostate>(value)) return py::none();
    if (const auto* i = std::get_if<std::int64_t>(&value)) return py::int_(*i);
    if (const auto* d = std::get_if<double>(&value)) return py::float_(*d);
    if (const auto* s = std::get_if<std::string>(&value)) return py::str(*s);
    const auto& blob = std::get<Blob>(value).bytes;
    return py::bytes(blob.data(), blob.size());
}

Value value_from_py(const py::handle& obj) {
    if (obj.is_none()) return std::monostate{};
    if (py::isinstance<py::bool_>(obj)) return static_cast<std::int64_t>(obj.cast<bool>());
    if (py::isinstance<py::int_>(obj)) return obj.cast<std::int64_t>();
    if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
    if (py::isinstance<py::bytes>(obj)) return Blob{obj.cast<std::string>()};
    return obj.cast<std::string>();
}

py::list rows_to_py(const std::vector<Row>& rows) {
    py::list out;
    for (const auto& row : rows) {
        py::tuple t(row.size());
        for (size_t i = 0; i < row.size(); ++i) t[i] = value_to_py(row[i]);
        out.append(t);
    }
    return out;
}

ResultTable table_from_py(const std::vector<std::string>& columns, const py::list& rows) {
    ResultTable table;
    table.columns = columns;
    for (const auto& row : rows) {
        Row r;
        for (const auto& value : row.cast<py::sequence>()) r.push_back(value_from_py(value));
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "NL2SQL pipeline engine for small language models";

    py::register_exception<Error>(m, "NlsqlError");

    // schema catalog
    py::class_<ColumnInfo>(m, "ColumnInfo")
        .def_readonly("name", &ColumnInfo::name)
        .def_readonly("declared_type", &ColumnInfo::declared_type)
        .def_readonly("is_primary_key", &ColumnInfo::is_primary_key)
        .def_readonly("is_not_null", &ColumnInfo::is_not_null);
    py::class_<ForeignKeyInfo>(m, "ForeignKeyInfo")
        .def_readonly("from_table", &ForeignKeyInfo::from_table)
        .def_readonly("from_column", &ForeignKeyInfo::from_column)
        .def_readonly("to_table", &ForeignKeyInfo::to_table)
        .def_readonly("to_column", &ForeignKeyInfo::to_column);
    py::class_<TableInfo>(m, "TableInfo")
        .def_readonly("name", &TableInfo::name)
        .def_readonly("columns", &TableInfo::columns)
        .def_readonly("foreign_keys", &TableInfo::foreign_keys);
    py::class_<DatabaseSchema>(m, "DatabaseSchema")
        .def_readonly("db_id", &DatabaseSchema::db_id)
        .def_readonly("tables", &DatabaseSchema::tables)
        .def("table_names", &DatabaseSchema::table_names);

    m.def("load_schema", &load_schema, py::arg("db_path"));
    m.def(
        "render_ddl",
        [](const DatabaseSchema& schema, std::optional<std::set<std::string>> keep) {
            return keep ? render_ddl(schema, *keep) : render_ddl(schema);
        },
        py::arg("schema"), py::arg("keep") = std::nullopt);
    m.def(
        "resolve_identifier",
        [](const DatabaseSchema& schema, const std::string& token) -> py::object {
            auto resolved = resolve_identifier(schema, token);
            if (!resolved) return py::none();
            return py::make_tuple(resolved->table, resolved->column
                                                       ? py::object(py::str(*resolved->column))
                                                       : py::object(py::none()));
        },
        py::arg("schema"), py::arg("token"));
    m.def("resolve_db_path", &resolve_db_path, py::arg("database_root"), py::arg("db_id"));

    // extraction
    m.def("extract_tables", &extract_tables, py::arg("text"), py::arg("schema"));
    m.def("extract_columns", &extract_columns, py::arg("text"), py::arg("schema"));
    m.def("extract_sql", &extract_sql, py::arg("text"));
    m.def("extract_answer", &extract_answer, py::arg("text"),
          py::arg("patterns") = kDefaultAnswerPatterns);
    m.def("extract_index", &extract_index, py::arg("text"), py::arg("max_index"));

    // prompts
    py::enum_<StageKind>(m, "StageKind")
        .value("PRUNING", StageKind::Pruning)
        .value("LINKING", StageKind::Linking)
        .value("GENERATION_WITH_LINKING", StageKind::GenerationWithLinking)
        .value("GENERATION_WITHOUT_LINKING", StageKind::GenerationWithoutLinking)
        .value("CORRECTION", StageKind::Correction)
        .value("SELECTION_QUERY_ONLY", StageKind::SelectionQueryOnly)
        .value("SELECTION_WITH_RESULTS", StageKind::SelectionWithResults);
    m.def("stage_name", &stage_name);

    py::class_<RenderedPrompt>(m, "RenderedPrompt")
        .def_readonly("stage", &RenderedPrompt::stage)
        .def_readonly("system", &RenderedPrompt::system)
        .def_readonly("user", &RenderedPrompt::user)
        .def_readonly("word_count", &RenderedPrompt::word_count);
    py::class_<PromptSet>(m, "PromptSet")
        .def(py::init<>())
        .def("render", &PromptSet::render, py::arg("stage"), py::arg("vars"))
        .def("static_word_count", &PromptSet::static_word_count, py::arg("stage"))
        .def("load_overrides", &PromptSet::load_overrides, py::arg("dir"));

    // backends
    py::enum_<ModelRole>(m, "ModelRole")
        .value("CHAT", ModelRole::Chat)
        .value("SQL", ModelRole::Sql);
    py::class_<SamplingParams>(m, "SamplingParams")
        .def(py::init<>())
        .def_readwrite("temperature", &SamplingParams::temperature)
        .def_readwrite("top_p", &SamplingParams::top_p)
        .def_readwrite("greedy", &SamplingParams::greedy)
        .def_readwrite("num_candidates", &SamplingParams::num_candidates)
        .def_readwrite("max_tokens", &SamplingParams::max_tokens);
    py::class_<Backend, std::shared_ptr<Backend>>(m, "Backend");
    py::class_<ScriptedBackend, Backend, std::shared_ptr<ScriptedBackend>>(m, "ScriptedBackend")
        .def(py::init<>())
        .def_static("from_file", &ScriptedBackend::from_file, py::arg("path"))
        .def("add", &ScriptedBackend::add, py::arg("key"), py::arg("call_texts"));
    py::class_<HttpBackendConfig>(m, "HttpBackendConfig")
        .def(py::init<>())
        .def_readwrite("base_url", &HttpBackendConfig::base_url)
        .def_readwrite("model", &HttpBackendConfig::model)
        .def_readwrite("api_key_env", &HttpBackendConfig::api_key_env)
        .def_readwrite("max_retries", &HttpBackendConfig::max_retries)
        .def_readwrite("max_in_flight", &HttpBackendConfig::max_in_flight)
        .def_readwrite("supports_n", &HttpBackendConfig::supports_n)
        .def_readwrite("use_beam_search", &HttpBackendConfig::use_beam_search);
    py::class_<HttpBackend, Backend, std::shared_ptr<HttpBackend>>(m, "HttpBackend")
        .def(py::init<HttpBackendConfig>(), py::arg("config"));
    py::class_<CallRecord>(m, "CallRecord")
        .def_readonly("role", &CallRecord::role)
        .def_readonly("stage", &CallRecord::stage)
        .def_readonly("requested", &CallRecord::requested)
        .def_readonly("returned", &CallRecord::returned)
        .def_readonly("attempts", &CallRecord::attempts);
    py::class_<BackendRouter>(m, "BackendRouter")
        .def(py::init<>())
        .def("bind", &BackendRouter::bind, py::arg("role"), py::arg("backend"))
        .def("bound", &BackendRouter::bound, py::arg("role"))
        .def("calls", &BackendRouter::calls)
        .def("clear_calls", &BackendRouter::clear_calls);

    // executor
    py::enum_<ExecStatus>(m, "ExecStatus")
        .value("SUCCESS", ExecStatus::Success)
        .value("ERROR", ExecStatus::Error)
        .value("TIMEOUT", ExecStatus::Timeout);
    py::class_<ExecutionOutcome>(m, "ExecutionOutcome")
        .def_readonly("status", &ExecutionOutcome::status)
        .def_readonly("columns", &ExecutionOutcome::columns)
        .def_property_readonly("rows",
                               [](const ExecutionOutcome& o) { return rows_to_py(o.rows); })
        .def_readonly("truncated", &ExecutionOutcome::truncated)
        .def_readonly("error_message", &ExecutionOutcome::error_message)
        .def("ok", &ExecutionOutcome::ok);
    m.def(
        "execute",
        [](const std::string& db_path, const std::string& sql, int timeout_ms, int row_limit) {
            return execute(db_path, sql, std::chrono::milliseconds(timeout_ms), row_limit);
        },
        py::arg("db_path"), py::arg("sql"), py::arg("timeout_ms") = 30000,
        py::arg("row_limit") = kDefaultRowLimit);
    m.def(
        "results_match",
        [](const ExecutionOutcome& a, const ExecutionOutcome& b) {
            return results_match({a.columns, a.rows}, {b.columns, b.rows});
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "results_match_rows",
        [](const std::vector<std::string>& a_columns, const py::list& a_rows,
           const std::vector<std::string>& b_columns, const py::list& b_rows) {
            return results_match(table_from_py(a_columns, a_rows),
                                 table_from_py(b_columns, b_rows));
        },
        py::arg("a_columns"), py::arg("a_rows"), py::arg("b_columns"), py::arg("b_rows"));

    // pipeline
    py::enum_<PathKind>(m, "PathKind")
        .value("PRUNED_LINKED", PathKind::PrunedLinked)
        .value("FULL_LINKED", PathKind::FullLinked)
        .value("PRUNED_ONLY", PathKind::PrunedOnly)
        .value("FULL_ONLY", PathKind::FullOnly);
    m.def("path_name", &path_name);

    py::class_<CandidateOrigin>(m, "CandidateOrigin")
        .def_property_readonly("is_initial", &CandidateOrigin::is_initial)
        .def_readonly("parent_id", &CandidateOrigin::parent_id)
        .def_readonly("attempt", &CandidateOrigin::attempt);
    py::class_<Candidate>(m, "Candidate")
        .def_readonly("id", &Candidate::id)
        .def_readonly("sql", &Candidate::sql)
        .def_readonly("path", &Candidate::path)
        .def_readonly("origin", &Candidate::origin)
        .def_readonly("outcome", &Candidate::outcome)
        .def_readonly("extracted", &Candidate::extracted);
    py::class_<StageToggles>(m, "StageToggles")
        .def(py::init<>())
        .def_readwrite("pruning", &StageToggles::pruning)
        .def_readwrite("linking", &StageToggles::linking)
        .def_readwrite("multi_candidate", &StageToggles::multi_candidate)
        .def_readwrite("correction", &StageToggles::correction)
        .def_readwrite("selection", &StageToggles::selection);
    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("candidates_per_path", &PipelineConfig::candidates_per_path)
        .def_readwrite("correction_candidates", &PipelineConfig::correction_candidates)
        .def_readwrite("selection_rounds", &PipelineConfig::selection_rounds)
        .def_readwrite("temperature", &PipelineConfig::temperature)
        .def_readwrite("top_p", &PipelineConfig::top_p)
        .def_readwrite("result_preview_rows", &PipelineConfig::result_preview_rows)
        .def_readwrite("result_preview_chars", &PipelineConfig::result_preview_chars)
        .def_readwrite("answer_patterns", &PipelineConfig::answer_patterns)
        .def_readwrite("toggles", &PipelineConfig::toggles);
    py::class_<QuestionTask>(m, "QuestionTask")
        .def(py::init([](std::string question, std::string hint, std::string db_id,
                         std::string question_id) {
                 return QuestionTask{std::move(question), std::move(hint), std::move(db_id),
                                     std::move(question_id)};
             }),
             py::arg("question"), py::arg("hint") = "", py::arg("db_id") = "",
             py::arg("question_id") = "")
        .def_readwrite("question", &QuestionTask::question)
        .def_readwrite("hint", &QuestionTask::hint)
        .def_readwrite("db_id", &QuestionTask::db_id)
        .def_readwrite("question_id", &QuestionTask::question_id);
    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("selected_id", &PipelineResult::selected_id)
        .def_readonly("candidates", &PipelineResult::candidates)
        .def_readonly("executable_ids", &PipelineResult::executable_ids)
        .def_readonly("pruned_tables", &PipelineResult::pruned_tables)
        .def_readonly("linked_columns", &PipelineResult::linked_columns)
        .def_readonly("pruning_fallback", &PipelineResult::pruning_fallback)
        .def_readonly("linking_empty", &PipelineResult::linking_empty)
        .def_readonly("selection_votes", &PipelineResult::selection_votes)
        .def("selected_sql", &PipelineResult::selected_sql);
    py::class_<Pipeline>(m, "Pipeline")
        .def(py::init<BackendRouter&, const PromptSet&, PipelineConfig>(), py::arg("router"),
             py::arg("prompts"), py::arg("config"), py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
        .def("run", &Pipeline::run, py::arg("task"), py::arg("schema"), py::arg("db_path"),
             py::call_guard<py::gil_scoped_release>());

    // evaluation
    py::enum_<DatasetFormat>(m, "DatasetFormat")
        .value("BIRD", DatasetFormat::Bird)
        .value("SPIDER", DatasetFormat::Spider);
    py::class_<DatasetExample>(m, "DatasetExample")
        .def_readonly("question_id", &DatasetExample::question_id)
        .def_readonly("db_id", &DatasetExample::db_id)
        .def_readonly("question", &DatasetExample::question)
        .def_readonly("hint", &DatasetExample::hint)
        .def_readonly("gold_sql", &DatasetExample::gold_sql)
        .def_readonly("difficulty", &DatasetExample::difficulty);
    m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("format"));
    m.def(
        "judge",
        [](const std::optional<std::string>& predicted, const std::string& gold,
           const std::string& db_path, int timeout_ms) {
            return judge(predicted, gold, db_path, std::chrono::milliseconds(timeout_ms));
        },
        py::arg("predicted_sql"), py::arg("gold_sql"), py::arg("db_path"),
        py::arg("timeout_ms") = 30000);

    py::class_<Report>(m, "Report")
        .def_readonly("total", &Report::total)
        .def_readonly("excluded_gold", &Report::excluded_gold)
        .def_readonly("ex_percent", &Report::ex_percent)
        .def_readonly("ep_percent", &Report::ep_percent)
        .def_readonly("path_distribution", &Report::path_distribution)
        .def_readonly("top_n", &Report::top_n)
        .def("to_json", [](const Report& r) { return report_to_json(r).dump(2); });

    m.def("load_run_config", &load_run_config, py::arg("path"));
    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("pipeline", &RunConfig::pipeline)
        .def_readwrite("dataset_path", &RunConfig::dataset_path)
        .def_readwrite("database_root", &RunConfig::database_root)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def_readwrite("workers", &RunConfig::workers);
    py::class_<BenchOutcome>(m, "BenchOutcome")
        .def_readonly("report", &BenchOutcome::report)
        .def_readonly("output_dir", &BenchOutcome::output_dir)
        .def_readonly("ran", &BenchOutcome::ran)
        .def_readonly("resumed", &BenchOutcome::resumed);
    m.def("run_bench", &run_bench, py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("report_from_traces", &report_from_traces, py::arg("output_dir"));
}
