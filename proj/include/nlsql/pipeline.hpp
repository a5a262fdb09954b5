#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlsql/backend.hpp"
#include "nlsql/executor.hpp"
#include "nlsql/extract.hpp"
#include "nlsql/prompts.hpp"
#include "nlsql/schema.hpp"

namespace nlsql {

enum class PathKind { PrunedLinked, FullLinked, PrunedOnly, FullOnly };

inline constexpr std::array<PathKind, 4> kAllPaths = {
    PathKind::PrunedLinked, PathKind::FullLinked, PathKind::PrunedOnly, PathKind::FullOnly};

std::string path_name(PathKind path);
std::optional<PathKind> path_from_name(const std::string& name);

struct CandidateOrigin {
    enum class Kind { Initial, Corrected };
    Kind kind = Kind::Initial;
    int parent_id = -1;  // Corrected only
    int attempt = 0;     // 1..correction_candidates

    static CandidateOrigin initial() { return {}; }
    static CandidateOrigin corrected(int parent, int attempt) {
        return {Kind::Corrected, parent, attempt};
    }
    bool is_initial() const { return kind == Kind::Initial; }
};

struct Candidate {
    int id = 0;
    std::string sql;  // extracted SQL, or the raw reply when nothing was extractable
    PathKind path = PathKind::FullOnly;
    CandidateOrigin origin;
    ExecutionOutcome outcome;
    bool extracted = true;  // false marks the synthetic "no SQL found" case
};

struct StageToggles {
    bool pruning = true;
    bool linking = true;
    bool multi_candidate = true;
    bool correction = true;
    bool selection = true;
};

std::map<StageKind, ModelRole> default_stage_role_map();

struct PipelineConfig {
    int candidates_per_path = 4;
    int correction_candidates = 2;
    int selection_rounds = 3;
    double temperature = 0.2;
    double top_p = 0.8;
    int max_tokens_generation = 512;
    int max_tokens_reasoning = 768;
    int result_preview_rows = 5;
    int result_preview_chars = 512;
    std::vector<std::string> answer_patterns = kDefaultAnswerPatterns;
    std::map<StageKind, ModelRole> stage_role_map = default_stage_role_map();
    StageToggles toggles;
    std::chrono::milliseconds exec_timeout = kDefaultExecTimeout;
    int exec_row_limit = kDefaultRowLimit;

    /// Disabling multi-candidate generation forces one candidate per path.
    int effective_candidates_per_path() const {
        return toggles.multi_candidate ? candidates_per_path : 1;
    }

    /// Greedy decoding for pruning/linking, sampling elsewhere.
    SamplingParams sampling_for(StageKind stage, int num_candidates) const;
};

struct QuestionTask {
    std::string question;
    std::string hint;  // empty renders as "None"
    std::string db_id;
    std::string question_id;  // optional; scopes scripted backends and traces
};

struct PruningOutcome {
    std::vector<std::string> tables;  // schema order
    bool fallback = false;            // model output yielded no resolvable table
    std::string raw_reply;
};

struct LinkingOutcome {
    std::vector<std::pair<std::string, std::string>> columns;  // schema order
    bool nothing_linked = false;
    std::string raw_reply;
};

struct SelectionOutcome {
    int selected_id = -1;
    std::vector<int> votes;  // candidate id per round, -1 for discarded rounds
    bool used_results_template = false;
    bool feq_fallback = false;  // every round unparsable
};

struct PipelineResult {
    std::optional<int> selected_id;
    std::vector<Candidate> candidates;  // id order; initial ones first
    std::vector<int> executable_ids;    // id order, outcome Success
    std::vector<std::string> pruned_tables;
    std::vector<std::pair<std::string, std::string>> linked_columns;
    bool pruning_fallback = false;
    bool linking_empty = false;
    std::vector<int> selection_votes;
    std::vector<std::string> stage_errors;  // degraded-path diagnostics
    std::map<std::string, double> stage_timings_ms;

    const Candidate* selected() const;
    const Candidate* by_id(int id) const;
    /// Best-effort answer for reporting: the selected SQL, else nothing.
    std::optional<std::string> selected_sql() const;
};

/// Six-stage orchestration with 1+1 role routing. Immutable configuration;
/// const methods are safe to call from several threads.
class Pipeline {
public:
    Pipeline(BackendRouter& router, const PromptSet& prompts, PipelineConfig config);

    const PipelineConfig& config() const { return config_; }

    PruningOutcome run_pruning(const QuestionTask& task, const DatabaseSchema& schema) const;
    LinkingOutcome run_linking(const QuestionTask& task, const DatabaseSchema& schema) const;

    /// All four paths, candidates_per_path completions each. Completions with
    /// no extractable SQL become candidates with a synthetic "no SQL found"
    /// error outcome. Candidates come back unexecuted.
    std::vector<Candidate> generate_candidates(
        const QuestionTask& task, const DatabaseSchema& schema,
        const std::vector<std::string>& pruned_tables,
        const std::vector<std::pair<std::string, std::string>>& linked_columns,
        std::vector<std::string>* stage_errors = nullptr) const;

    /// Correction children for one failed candidate, extracted and executed.
    /// Children are never corrected again.
    std::vector<Candidate> correct(const Candidate& failed, const QuestionTask& task,
                                   const DatabaseSchema& schema, const std::string& db_path,
                                   int first_child_id) const;

    /// Model-judged selection over the executable set (ids into candidates).
    SelectionOutcome select(const QuestionTask& task, const DatabaseSchema& schema,
                            const std::vector<Candidate>& candidates,
                            const std::vector<int>& executable_ids) const;

    PipelineResult run(const QuestionTask& task, const DatabaseSchema& schema,
                       const std::string& db_path) const;

private:
    BackendRouter& router_;
    const PromptSet& prompts_;
    PipelineConfig config_;

    std::vector<Completion> call(StageKind stage, const std::map<std::string, std::string>& vars,
                                 int num_candidates, const std::string& tag) const;
};

/// Whitespace-normalized form used for candidate dedup and prompt listings.
std::string normalize_sql(const std::string& sql);

}  // namespace nlsql
