#include "nlsql/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <sstream>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string format_linked_columns(
    const std::vector<std::pair<std::string, std::string>>& columns) {
    std::vector<std::string> qualified;
    qualified.reserve(columns.size());
    for (const auto& [table, column] : columns) qualified.push_back(table + "." + column);
    return join(qualified, ", ");
}

ExecutionOutcome synthetic_no_sql_error() {
    ExecutionOutcome outcome;
    outcome.status = ExecStatus::Error;
    outcome.error_message = "no SQL found in model output";
    return outcome;
}

}  // namespace

std::string path_name(PathKind path) {
    switch (path) {
        case PathKind::PrunedLinked: return "pruned_linked";
        case PathKind::FullLinked: return "full_linked";
        case PathKind::PrunedOnly: return "pruned_only";
        case PathKind::FullOnly: return "full_only";
    }
    return "full_only";
}

std::optional<PathKind> path_from_name(const std::string& name) {
    for (PathKind p : kAllPaths) {
        if (path_name(p) == name) return p;
    }
    return std::nullopt;
}

std::map<StageKind, ModelRole> default_stage_role_map() {
    return {
        {StageKind::Pruning, ModelRole::Chat},
        {StageKind::Linking, ModelRole::Chat},
        {StageKind::GenerationWithLinking, ModelRole::Sql},
        {StageKind::GenerationWithoutLinking, ModelRole::Sql},
        {StageKind::Correction, ModelRole::Sql},
        {StageKind::SelectionQueryOnly, ModelRole::Chat},
        {StageKind::SelectionWithResults, ModelRole::Chat},
    };
}

SamplingParams PipelineConfig::sampling_for(StageKind stage, int num_candidates) const {
    SamplingParams params;
    params.temperature = temperature;
    params.top_p = top_p;
    params.num_candidates = num_candidates;
    switch (stage) {
        case StageKind::Pruning:
        case StageKind::Linking:
            params.greedy = true;
            params.num_candidates = 1;
            params.max_tokens = max_tokens_reasoning;
            break;
        case StageKind::SelectionQueryOnly:
        case StageKind::SelectionWithResults:
            params.max_tokens = max_tokens_reasoning;
            break;
        default:
            params.max_tokens = max_tokens_generation;
            break;
    }
    return params;
}

std::string normalize_sql(const std::string& sql) {
    std::string out;
    bool in_space = true;
    for (char c : sql) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

const Candidate* PipelineResult::selected() const {
    if (!selected_id) return nullptr;
    return by_id(*selected_id);
}

const Candidate* PipelineResult::by_id(int id) const {
    for (const auto& c : candidates) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

std::optional<std::string> PipelineResult::selected_sql() const {
    const Candidate* c = selected();
    if (!c) return std::nullopt;
    return c->sql;
}

Pipeline::Pipeline(BackendRouter& router, const PromptSet& prompts, PipelineConfig config)
    : router_(router), prompts_(prompts), config_(std::move(config)) {}

std::vector<Completion> Pipeline::call(StageKind stage,
                                       const std::map<std::string, std::string>& vars,
                                       int num_candidates, const std::string& tag) const {
    RenderedPrompt prompt = prompts_.render(stage, vars);
    GenerationRequest request;
    request.role = config_.stage_role_map.at(stage);
    request.system = prompt.system;
    request.user = prompt.user;
    request.sampling = config_.sampling_for(stage, num_candidates);
    request.stage = stage_name(stage);
    request.tag = tag;
    return router_.generate(request);
}

PruningOutcome Pipeline::run_pruning(const QuestionTask& task,
                                     const DatabaseSchema& schema) const {
    std::map<std::string, std::string> vars = {
        {"database_name", task.db_id},
        {"database_schema", render_ddl(schema)},
        {"question", task.question},
        {"hint", task.hint},
        {"tables", join(schema.table_names(), ", ")},
    };
    auto completions = call(StageKind::Pruning, vars, 1, task.question_id);

    PruningOutcome outcome;
    outcome.raw_reply = completions.front().text;
    outcome.tables = extract_tables(outcome.raw_reply, schema);
    if (outcome.tables.empty()) {
        outcome.tables = schema.table_names();
        outcome.fallback = true;
    }
    return outcome;
}

LinkingOutcome Pipeline::run_linking(const QuestionTask& task,
                                     const DatabaseSchema& schema) const {
    std::map<std::string, std::string> vars = {
        {"database_name", task.db_id},
        {"schema", render_ddl(schema)},
        {"question", task.question},
        {"hint", task.hint},
    };
    auto completions = call(StageKind::Linking, vars, 1, task.question_id);

    LinkingOutcome outcome;
    outcome.raw_reply = completions.front().text;
    outcome.columns = extract_columns(outcome.raw_reply, schema);
    outcome.nothing_linked = outcome.columns.empty();
    return outcome;
}

std::vector<Candidate> Pipeline::generate_candidates(
    const QuestionTask& task, const DatabaseSchema& schema,
    const std::vector<std::string>& pruned_tables,
    const std::vector<std::pair<std::string, std::string>>& linked_columns,
    std::vector<std::string>* stage_errors) const {
    std::string full_ddl = render_ddl(schema);
    std::set<std::string> pruned_set(pruned_tables.begin(), pruned_tables.end());
    std::string pruned_ddl = render_ddl(schema, pruned_set);
    std::string linking_text = format_linked_columns(linked_columns);
    int per_path = config_.effective_candidates_per_path();

    std::vector<Candidate> candidates;
    std::string last_error;
    for (PathKind path : kAllPaths) {
        bool uses_pruning = path == PathKind::PrunedLinked || path == PathKind::PrunedOnly;
        bool uses_linking = path == PathKind::PrunedLinked || path == PathKind::FullLinked;
        StageKind stage = uses_linking ? StageKind::GenerationWithLinking
                                       : StageKind::GenerationWithoutLinking;
        std::map<std::string, std::string> vars = {
            {"database_name", task.db_id},
            {"database_schema", uses_pruning ? pruned_ddl : full_ddl},
            {"question", task.question},
            {"hint", task.hint},
        };
        if (uses_linking) vars["schema_linking"] = linking_text;

        std::vector<Completion> completions;
        try {
            completions = call(stage, vars, per_path, task.question_id);
        } catch (const Error& e) {
            last_error = e.what();
            if (stage_errors) {
                stage_errors->push_back("generation[" + path_name(path) + "]: " + e.what());
            }
            continue;
        }
        for (const auto& completion : completions) {
            Candidate candidate;
            candidate.id = static_cast<int>(candidates.size());
            candidate.path = path;
            candidate.origin = CandidateOrigin::initial();
            if (auto sql = extract_sql(completion.text)) {
                candidate.sql = *sql;
            } else {
                candidate.sql = normalize_sql(completion.text);
                candidate.extracted = false;
                candidate.outcome = synthetic_no_sql_error();
            }
            candidates.push_back(std::move(candidate));
        }
    }
    if (candidates.empty() && !last_error.empty()) {
        throw StageError("generation", last_error);
    }
    return candidates;
}

std::vector<Candidate> Pipeline::correct(const Candidate& failed, const QuestionTask& task,
                                         const DatabaseSchema& schema, const std::string& db_path,
                                         int first_child_id) const {
    std::map<std::string, std::string> vars = {
        {"schema", render_ddl(schema)},
        {"question", task.question},
        {"hint", task.hint},
        {"prev_ans", failed.sql},
        {"errorMsg", failed.outcome.error_message},
    };
    auto completions =
        call(StageKind::Correction, vars, config_.correction_candidates, task.question_id);

    std::vector<Candidate> children;
    for (size_t i = 0; i < completions.size(); ++i) {
        Candidate child;
        child.id = first_child_id + static_cast<int>(i);
        child.path = failed.path;
        child.origin = CandidateOrigin::corrected(failed.id, static_cast<int>(i) + 1);
        if (auto sql = extract_sql(completions[i].text)) {
            child.sql = *sql;
            child.outcome = execute(db_path, child.sql, config_.exec_timeout,
                                    config_.exec_row_limit);
        } else {
            child.sql = normalize_sql(completions[i].text);
            child.extracted = false;
            child.outcome = synthetic_no_sql_error();
        }
        children.push_back(std::move(child));
    }
    return children;
}

SelectionOutcome Pipeline::select(const QuestionTask& task, const DatabaseSchema& schema,
                                  const std::vector<Candidate>& candidates,
                                  const std::vector<int>& executable_ids) const {
    SelectionOutcome outcome;
    if (executable_ids.empty()) {
        throw Error("select requires a non-empty executable set");
    }
    if (executable_ids.size() == 1) {
        outcome.selected_id = executable_ids.front();
        return outcome;
    }

    auto candidate_by_id = [&](int id) -> const Candidate& {
        for (const auto& c : candidates) {
            if (c.id == id) return c;
        }
        throw Error("executable id not in candidate list");
    };

    // dedupe by whitespace-normalized SQL, keeping the earliest candidate
    std::vector<const Candidate*> survivors;
    std::set<std::string> seen;
    for (int id : executable_ids) {
        const Candidate& c = candidate_by_id(id);
        if (seen.insert(normalize_sql(c.sql)).second) survivors.push_back(&c);
    }

    // the with-results template applies only when every survivor's full
    // result fits the preview budget
    bool previews_fit = true;
    for (const Candidate* c : survivors) {
        if (c->outcome.truncated ||
            c->outcome.rows.size() > static_cast<size_t>(config_.result_preview_rows)) {
            previews_fit = false;
            break;
        }
        std::string preview =
            render_rows(c->outcome.rows, static_cast<size_t>(config_.result_preview_rows));
        if (preview.size() > static_cast<size_t>(config_.result_preview_chars)) {
            previews_fit = false;
            break;
        }
    }
    StageKind stage =
        previews_fit ? StageKind::SelectionWithResults : StageKind::SelectionQueryOnly;
    outcome.used_results_template = previews_fit;

    std::ostringstream listing;
    for (size_t i = 0; i < survivors.size(); ++i) {
        listing << (i + 1) << ". " << normalize_sql(survivors[i]->sql) << "\n";
        if (previews_fit) {
            listing << "   Result: "
                    << render_rows(survivors[i]->outcome.rows,
                                   static_cast<size_t>(config_.result_preview_rows))
                    << "\n";
        }
    }

    std::map<std::string, std::string> vars = {
        {"database_name", task.db_id},
        {"database_schema", render_ddl(schema)},
        {"question", task.question},
        {"hint", task.hint},
        {"queries", listing.str()},
    };

    for (int round = 0; round < config_.selection_rounds; ++round) {
        auto completions = call(stage, vars, 1, task.question_id);
        auto index = extract_index(completions.front().text, static_cast<int>(survivors.size()));
        outcome.votes.push_back(index ? survivors[static_cast<size_t>(*index - 1)]->id : -1);
    }

    // mode of the parsed votes; ties break toward the earliest round
    int best_id = -1;
    int best_count = 0;
    for (size_t i = 0; i < outcome.votes.size(); ++i) {
        int id = outcome.votes[i];
        if (id < 0) continue;
        int count = 0;
        for (int other : outcome.votes) {
            if (other == id) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_id = id;
        }
    }
    if (best_id < 0) {
        outcome.feq_fallback = true;  // every round discarded: first executable query
        best_id = executable_ids.front();
    }
    outcome.selected_id = best_id;
    return outcome;
}

PipelineResult Pipeline::run(const QuestionTask& task, const DatabaseSchema& schema,
                             const std::string& db_path) const {
    PipelineResult result;

    auto t0 = Clock::now();
    if (config_.toggles.pruning && !schema.tables.empty()) {
        try {
            PruningOutcome pruning = run_pruning(task, schema);
            result.pruned_tables = std::move(pruning.tables);
            result.pruning_fallback = pruning.fallback;
        } catch (const Error& e) {
            throw StageError("pruning", e.what());
        }
    } else {
        result.pruned_tables = schema.table_names();
    }
    result.stage_timings_ms["pruning"] = ms_since(t0);

    t0 = Clock::now();
    if (config_.toggles.linking) {
        try {
            LinkingOutcome linking = run_linking(task, schema);
            result.linked_columns = std::move(linking.columns);
            result.linking_empty = linking.nothing_linked;
        } catch (const Error& e) {
            throw StageError("linking", e.what());
        }
    }
    result.stage_timings_ms["linking"] = ms_since(t0);

    t0 = Clock::now();
    result.candidates = generate_candidates(task, schema, result.pruned_tables,
                                            result.linked_columns, &result.stage_errors);
    result.stage_timings_ms["generation"] = ms_since(t0);

    t0 = Clock::now();
    for (auto& candidate : result.candidates) {
        if (!candidate.extracted) continue;  // synthetic error, nothing to run
        candidate.outcome =
            execute(db_path, candidate.sql, config_.exec_timeout, config_.exec_row_limit);
    }
    result.stage_timings_ms["execution"] = ms_since(t0);

    t0 = Clock::now();
    if (config_.toggles.correction) {
        size_t initial_count = result.candidates.size();
        for (size_t i = 0; i < initial_count; ++i) {
            if (result.candidates[i].outcome.ok()) continue;
            std::vector<Candidate> children;
            try {
                children = correct(result.candidates[i], task, schema, db_path,
                                   static_cast<int>(result.candidates.size()));
            } catch (const Error& e) {
                throw StageError("correction", e.what());
            }
            for (auto& child : children) result.candidates.push_back(std::move(child));
        }
    }
    result.stage_timings_ms["correction"] = ms_since(t0);

    for (const auto& candidate : result.candidates) {
        if (candidate.outcome.ok()) result.executable_ids.push_back(candidate.id);
    }

    t0 = Clock::now();
    if (!result.executable_ids.empty()) {
        if (config_.toggles.selection) {
            SelectionOutcome selection;
            try {
                selection = select(task, schema, result.candidates, result.executable_ids);
            } catch (const Error& e) {
                throw StageError("selection", e.what());
            }
            result.selected_id = selection.selected_id;
            result.selection_votes = std::move(selection.votes);
        } else {
            result.selected_id = result.executable_ids.front();  // FEQ
        }
    }
    result.stage_timings_ms["selection"] = ms_since(t0);

    return result;
}

}  // namespace nlsql
