#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nlsql/bench.hpp"
#include "nlsql/errors.hpp"

namespace {

using namespace nlsql;

void print_report_summary(const Report& report) {
    std::cout << "questions: " << report.total;
    if (report.excluded_gold > 0) {
        std::cout << " (+" << report.excluded_gold << " excluded, gold query failed)";
    }
    std::cout << "\n";
    std::cout << "EX: " << report.ex_percent << "%\n";
    std::cout << "EP: " << report.ep_percent << "%\n";
    if (!report.path_distribution.empty()) {
        std::cout << "correct answers by path:";
        for (const auto& [path, count] : report.path_distribution) {
            std::cout << " " << path << "=" << count;
        }
        std::cout << "\n";
    }
    if (!report.top_n.empty()) {
        std::cout << "top-N:";
        for (const auto& [n, value] : report.top_n) {
            std::cout << " top-" << n << "=" << value << "%";
        }
        std::cout << "\n";
    }
}

int cmd_ask(const std::string& config_path, const std::string& db_id, const std::string& question,
            const std::string& hint) {
    RunConfig config = load_run_config(config_path);
    std::string db_path = resolve_db_path(config.database_root, db_id);
    DatabaseSchema schema = load_schema(db_path);

    BackendRouter router;
    bind_backends(router, config);
    PromptSet prompts = load_prompts(config);
    Pipeline pipeline(router, prompts, config.pipeline);

    auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    QuestionTask task{question, hint, db_id, db_id + "_" + std::to_string(now)};
    PipelineResult result = pipeline.run(task, schema, db_path);

    std::filesystem::path trace_dir = std::filesystem::path(config.output_dir) / "ask";
    std::filesystem::create_directories(trace_dir);
    std::filesystem::path trace_path = trace_dir / trace_file_name(task.question_id);
    {
        std::ofstream out(trace_path);
        out << trace_to_json(make_trace(task, result, "", "", {})).dump() << "\n";
    }

    if (const Candidate* selected = result.selected()) {
        std::cout << selected->sql << "\n";
        size_t preview = static_cast<size_t>(config.pipeline.result_preview_rows);
        if (!selected->outcome.rows.empty()) {
            std::cout << "rows: " << render_rows(selected->outcome.rows, preview) << "\n";
        } else {
            std::cout << "rows: (empty result)\n";
        }
    } else {
        std::cout << "no executable candidate\n";
    }
    std::cout << "trace: " << trace_path.string() << "\n";
    return 0;
}

int cmd_bench(const std::string& config_path, const StageToggles& disabled,
              const std::string& output_override, int workers_override) {
    RunConfig config = load_run_config(config_path);
    config.pipeline.toggles.pruning &= disabled.pruning;
    config.pipeline.toggles.linking &= disabled.linking;
    config.pipeline.toggles.multi_candidate &= disabled.multi_candidate;
    config.pipeline.toggles.correction &= disabled.correction;
    config.pipeline.toggles.selection &= disabled.selection;
    if (!output_override.empty()) config.output_dir = output_override;
    if (workers_override > 0) config.workers = workers_override;

    BenchOutcome outcome = run_bench(config);
    std::cout << "ran " << outcome.ran << " question(s), reused " << outcome.resumed
              << " existing trace(s)\n";
    print_report_summary(outcome.report);
    std::cout << "report: " << (std::filesystem::path(outcome.output_dir) / "report.json").string()
              << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& axis,
               const std::string& output_override) {
    RunConfig config = load_run_config(config_path);
    if (!output_override.empty()) config.output_dir = output_override;
    std::vector<SweepRow> rows = run_ablation(config, axis);
    std::cout << "setting\tEX(%)\tEP(%)\n";
    for (const auto& row : rows) {
        std::cout << row.setting << "\t" << row.ex_percent << "\t" << row.ep_percent << "\n";
    }
    std::cout << "table: "
              << (std::filesystem::path(config.output_dir) / ("ablate_" + axis + ".json")).string()
              << "\n";
    return 0;
}

int cmd_report(const std::string& traces_dir) {
    Report report = report_from_traces(traces_dir);
    print_report_summary(report);
    std::cout << report_to_json(report).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NL2SQL pipeline runner for small language models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string db_id;
    std::string question;
    std::string hint;
    std::string output_override;
    std::string axis;
    std::string traces_dir;
    int workers_override = 0;
    StageToggles enabled;  // flags below clear individual stages

    auto* ask = app.add_subcommand("ask", "Answer one question against a database");
    ask->add_option("--config", config_path, "config file")->required();
    ask->add_option("--db", db_id, "database id under database_root")->required();
    ask->add_option("question", question, "natural-language question")->required();
    ask->add_option("--hint", hint, "optional hint/evidence text");

    auto* bench = app.add_subcommand("bench", "Run the configured dataset and write a report");
    bench->add_option("--config", config_path, "config file")->required();
    bench->add_option("--output", output_override, "override output directory");
    bench->add_option("--workers", workers_override, "override worker count");
    bench->add_flag_callback("--no-pruning", [&] { enabled.pruning = false; });
    bench->add_flag_callback("--no-linking", [&] { enabled.linking = false; });
    bench->add_flag_callback("--no-multi-candidate", [&] { enabled.multi_candidate = false; });
    bench->add_flag_callback("--no-correction", [&] { enabled.correction = false; });
    bench->add_flag_callback("--no-selection", [&] { enabled.selection = false; });

    auto* ablate = app.add_subcommand("ablate", "Component, candidate-size or rounds sweep");
    ablate->add_option("--config", config_path, "config file")->required();
    ablate->add_option("--axis", axis, "components | candidates | rounds")->required();
    ablate->add_option("--output", output_override, "override output directory");

    auto* report = app.add_subcommand("report", "Recompute a report from trace records");
    report->add_option("--traces", traces_dir, "bench output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ask)) return cmd_ask(config_path, db_id, question, hint);
        if (app.got_subcommand(bench)) {
            return cmd_bench(config_path, enabled, output_override, workers_override);
        }
        if (app.got_subcommand(ablate)) return cmd_ablate(config_path, axis, output_override);
        if (app.got_subcommand(report)) return cmd_report(traces_dir);
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage << ": " << e.what() << "\n";
        return 2;
    } catch (const BackendUnavailableError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 2;
    } catch (const BackendRejectedError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
