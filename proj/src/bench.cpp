#include "nlsql/bench.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace fs = std::filesystem;

namespace {

void write_file_atomic(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << content;
    }
    fs::rename(tmp, target);
}

class SchemaCache {
public:
    const DatabaseSchema& get(const std::string& db_path) {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(db_path);
        if (it == cache_.end()) {
            it = cache_.emplace(db_path, load_schema(db_path)).first;
        }
        return it->second;
    }

private:
    std::mutex mutex_;
    std::map<std::string, DatabaseSchema> cache_;
};

/// Candidates whose result sets match the gold result.
std::vector<int> judge_candidates(const PipelineResult& result, const ExecutionOutcome& gold) {
    std::vector<int> correct_ids;
    for (const auto& candidate : result.candidates) {
        if (!candidate.outcome.ok()) continue;
        if (candidate.outcome.truncated || gold.truncated) continue;
        try {
            if (results_match({candidate.outcome.columns, candidate.outcome.rows},
                              {gold.columns, gold.rows})) {
                correct_ids.push_back(candidate.id);
            }
        } catch (const IncomparableShapesError&) {
        }
    }
    return correct_ids;
}

TraceRecord run_one(const DatasetExample& example, const Pipeline& pipeline,
                    SchemaCache& schemas, const std::string& database_root) {
    QuestionTask task{example.question, example.hint, example.db_id, example.question_id};

    std::string db_path;
    try {
        db_path = resolve_db_path(database_root, example.db_id);
    } catch (const Error& e) {
        TraceRecord record;
        record.question_id = example.question_id;
        record.db_id = example.db_id;
        record.question = example.question;
        record.hint = example.hint;
        record.gold_sql = example.gold_sql;
        record.difficulty = example.difficulty;
        record.gold_failed = true;
        record.gold_error = e.what();
        return record;
    }

    ExecutionOutcome gold = execute(db_path, example.gold_sql, pipeline.config().exec_timeout,
                                    pipeline.config().exec_row_limit);
    if (!gold.ok()) {
        TraceRecord record;
        record.question_id = example.question_id;
        record.db_id = example.db_id;
        record.question = example.question;
        record.hint = example.hint;
        record.gold_sql = example.gold_sql;
        record.difficulty = example.difficulty;
        record.gold_failed = true;
        record.gold_error = gold.error_message;
        return record;
    }

    try {
        const DatabaseSchema& schema = schemas.get(db_path);
        PipelineResult result = pipeline.run(task, schema, db_path);
        std::vector<int> correct_ids = judge_candidates(result, gold);
        return make_trace(task, result, example.gold_sql, example.difficulty, correct_ids);
    } catch (const Error& e) {
        TraceRecord record;
        record.question_id = example.question_id;
        record.db_id = example.db_id;
        record.question = example.question;
        record.hint = example.hint;
        record.gold_sql = example.gold_sql;
        record.difficulty = example.difficulty;
        record.pipeline_error = e.what();
        return record;
    }
}

Report aggregate(const std::string& traces_dir, const nlohmann::ordered_json& config_echo) {
    std::vector<TraceRecord> traces = load_traces(traces_dir);
    std::vector<EvalRecord> records;
    int excluded = 0;
    for (const auto& trace : traces) {
        if (trace.gold_failed) {
            ++excluded;
            continue;
        }
        records.push_back(eval_record_from_trace(trace));
    }
    Report report = compute_report(records);
    report.excluded_gold = excluded;
    report.config_echo = config_echo;
    return report;
}

}  // namespace

BenchOutcome run_bench(const RunConfig& config) {
    if (config.dataset_path.empty()) {
        throw InvalidConfigError("bench requires dataset.path in the config");
    }
    std::vector<DatasetExample> examples = load_dataset(config.dataset_path,
                                                        config.dataset_format);

    fs::path out_dir(config.output_dir);
    fs::path traces_dir = out_dir / "traces";
    fs::create_directories(traces_dir);

    BackendRouter router;
    bind_backends(router, config);
    PromptSet prompts = load_prompts(config);
    Pipeline pipeline(router, prompts, config.pipeline);
    SchemaCache schemas;

    BenchOutcome outcome;
    outcome.output_dir = config.output_dir;

    std::vector<const DatasetExample*> pending;
    for (const auto& example : examples) {
        fs::path trace_path = traces_dir / trace_file_name(example.question_id);
        bool reusable = false;
        if (fs::exists(trace_path)) {
            try {
                std::ifstream in(trace_path);
                nlohmann::json doc;
                in >> doc;
                trace_from_json(doc);
                reusable = true;
            } catch (const std::exception&) {
                fs::remove(trace_path);  // half-written leftover, redo it
            }
        }
        if (reusable) {
            ++outcome.resumed;
        } else {
            pending.push_back(&example);
        }
    }

    std::atomic<size_t> next{0};
    std::mutex io_mutex;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const DatasetExample& example = *pending[i];
            TraceRecord record = run_one(example, pipeline, schemas, config.database_root);
            std::string payload = trace_to_json(record).dump();
            payload += '\n';
            std::lock_guard lock(io_mutex);
            write_file_atomic(traces_dir / trace_file_name(example.question_id), payload);
        }
    };

    int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(pending.size())));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    outcome.ran = static_cast<int>(pending.size());

    nlohmann::ordered_json config_echo = config.echo();
    write_file_atomic(out_dir / "config.json", config_echo.dump(2) + "\n");

    outcome.report = aggregate(traces_dir.string(), config_echo);
    write_file_atomic(out_dir / "report.json", report_to_json(outcome.report).dump(2) + "\n");
    return outcome;
}

Report report_from_traces(const std::string& output_dir) {
    fs::path out_dir(output_dir);
    fs::path traces_dir = out_dir / "traces";
    if (!fs::is_directory(traces_dir)) {
        // accept being pointed directly at the traces directory
        traces_dir = out_dir;
        out_dir = traces_dir.parent_path();
    }
    nlohmann::ordered_json config_echo;
    fs::path config_path = out_dir / "config.json";
    if (fs::exists(config_path)) {
        std::ifstream in(config_path);
        try {
            in >> config_echo;
        } catch (const std::exception& e) {
            throw CorruptTraceError("corrupt config echo " + config_path.string() + ": " +
                                    e.what());
        }
    }
    return aggregate(traces_dir.string(), config_echo);
}

std::vector<SweepRow> run_ablation(const RunConfig& config, const std::string& axis) {
    fs::path out_dir(config.output_dir);
    std::vector<SweepRow> rows;

    if (axis == "components") {
        for (const auto& [label, toggles] : component_toggle_matrix()) {
            RunConfig variant = config;
            variant.pipeline.toggles = toggles;
            variant.output_dir = (out_dir / ("ablate_components") / label).string();
            Report report = run_bench(variant).report;
            rows.push_back({"components", label, report.ex_percent, report.ep_percent});
        }
    } else if (axis == "candidates") {
        rows = sweep(SweepAxis::Candidates, config.pipeline, [&](const PipelineConfig& p) {
            RunConfig variant = config;
            variant.pipeline = p;
            variant.output_dir =
                (out_dir / "ablate_candidates" /
                 ("pool_" + std::to_string(4 * p.candidates_per_path)))
                    .string();
            return run_bench(variant).report;
        });
    } else if (axis == "rounds") {
        rows = sweep(SweepAxis::Rounds, config.pipeline, [&](const PipelineConfig& p) {
            RunConfig variant = config;
            variant.pipeline = p;
            variant.output_dir =
                (out_dir / "ablate_rounds" / ("rounds_" + std::to_string(p.selection_rounds)))
                    .string();
            return run_bench(variant).report;
        });
    } else {
        throw InvalidConfigError("unknown ablation axis: " + axis +
                                 " (expected components, candidates or rounds)");
    }

    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        table.push_back({{"axis", row.axis},
                         {"setting", row.setting},
                         {"ex_percent", row.ex_percent},
                         {"ep_percent", row.ep_percent}});
    }
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / ("ablate_" + axis + ".json"), table.dump(2) + "\n");
    return rows;
}

}  // namespace nlsql
