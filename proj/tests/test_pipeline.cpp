#include <doctest.h>

#include <memory>

#include "nlsql/errors.hpp"
#include "nlsql/pipeline.hpp"
#include "nlsql/trace.hpp"
#include "support/fixtures.hpp"
#include "support/property.hpp"

using namespace nlsql;
using namespace nlsql::testing;

namespace {

struct Harness {
    TempDir dir;
    std::string db_path;
    DatabaseSchema schema;
    std::shared_ptr<ScriptedBackend> chat_script = std::make_shared<ScriptedBackend>();
    std::shared_ptr<ScriptedBackend> sql_script = std::make_shared<ScriptedBackend>();
    std::shared_ptr<RecordingBackend> chat = std::make_shared<RecordingBackend>(chat_script);
    std::shared_ptr<RecordingBackend> sql = std::make_shared<RecordingBackend>(sql_script);
    BackendRouter router;
    PromptSet prompts;
    QuestionTask task{"What is the salary of the employee named 'Alice'?", "", "hr", ""};

    Harness() {
        db_path = make_hr_db(dir.path());
        schema = load_schema(db_path);
        router.bind(ModelRole::Chat, chat);
        router.bind(ModelRole::Sql, sql);
    }

    Pipeline pipeline(PipelineConfig config = {}) { return Pipeline(router, prompts, config); }

    std::vector<GenerationRequest> requests_for(const std::string& stage) const {
        std::vector<GenerationRequest> out;
        for (const auto& r : chat->requests()) {
            if (r.stage == stage) out.push_back(r);
        }
        for (const auto& r : sql->requests()) {
            if (r.stage == stage) out.push_back(r);
        }
        return out;
    }
};

const std::string kGold = "SELECT salary FROM Employees WHERE name = 'Alice'";

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("pruning extracts tables, with full-set fallback") {
    Harness h;
    h.chat_script->add("pruning", {"The relevant table is Employees."});
    auto pruning = h.pipeline().run_pruning(h.task, h.schema);
    CHECK(pruning.tables == std::vector<std::string>{"Employees"});
    CHECK_FALSE(pruning.fallback);

    Harness fallback;
    fallback.chat_script->add("pruning", {"I don't know"});
    pruning = fallback.pipeline().run_pruning(fallback.task, fallback.schema);
    CHECK(pruning.tables == fallback.schema.table_names());
    CHECK(pruning.fallback);

    // a reply that is itself a SQL query still yields table names
    TempDir shop_dir;
    DatabaseSchema shop = load_schema(make_shop_db(shop_dir.path()));
    Harness sql_reply;
    sql_reply.chat_script->add("pruning", {"SELECT * FROM orders WHERE total > 10"});
    pruning = sql_reply.pipeline().run_pruning({"q", "", "shop", ""}, shop);
    CHECK(pruning.tables == std::vector<std::string>{"orders"});
}

TEST_CASE("pruning requests are greedy and routed to the chat role") {
    Harness h;
    h.chat_script->add("pruning", {"The relevant table is Employees."});
    h.pipeline().run_pruning(h.task, h.schema);
    auto requests = h.chat->requests();
    REQUIRE(requests.size() == 1);
    CHECK(requests[0].sampling.greedy);
    CHECK(requests[0].stage == "pruning");
    CHECK(requests[0].user.find("Among the following tables: Employees, Departments") !=
          std::string::npos);
    CHECK(h.sql->requests().empty());

    // issuing the same greedy request twice yields identical outputs
    auto again = h.pipeline().run_pruning(h.task, h.schema);
    CHECK(again.tables == std::vector<std::string>{"Employees"});
}

TEST_CASE("linking extracts columns against the full schema") {
    Harness h;
    h.chat_script->add("linking",
                       {"The related columns are Employees.name and Employees.salary."});
    auto linking = h.pipeline().run_linking(h.task, h.schema);
    REQUIRE(linking.columns.size() == 2);
    CHECK(linking.columns[0] == std::pair<std::string, std::string>{"Employees", "name"});
    CHECK(linking.columns[1] == std::pair<std::string, std::string>{"Employees", "salary"});
    CHECK_FALSE(linking.nothing_linked);

    Harness garbage;
    garbage.chat_script->add("linking", {"absolutely nothing useful"});
    linking = garbage.pipeline().run_linking(garbage.task, garbage.schema);
    CHECK(linking.columns.empty());
    CHECK(linking.nothing_linked);

    // mentions of non-existent columns are dropped, valid ones kept
    Harness partial;
    partial.chat_script->add("linking", {"Employees.salary plus Employees.wage_grade"});
    linking = partial.pipeline().run_linking(partial.task, partial.schema);
    REQUIRE(linking.columns.size() == 1);
    CHECK(linking.columns[0].second == "salary");
}

TEST_CASE("generation produces four paths times candidates_per_path") {
    Harness h;
    h.sql_script->add("generation_with_linking", {fenced(kGold), fenced("SELECT 1"),
                                                  fenced("SELECT 2"), fenced("SELECT 3")});
    h.sql_script->add("generation_with_linking", {fenced("SELECT 4"), fenced("SELECT 5"),
                                                  fenced("SELECT 6"), fenced("SELECT 7")});
    h.sql_script->add("generation_without_linking", {fenced("SELECT 8"), fenced("SELECT 9"),
                                                     fenced("SELECT 10"), fenced("SELECT 11")});
    h.sql_script->add("generation_without_linking", {fenced("SELECT 12"), fenced("SELECT 13"),
                                                     fenced("SELECT 14"), fenced("SELECT 15")});

    auto candidates = h.pipeline().generate_candidates(
        h.task, h.schema, {"Employees"}, {{"Employees", "salary"}}, nullptr);
    REQUIRE(candidates.size() == 16);
    std::map<PathKind, int> per_path;
    for (const auto& c : candidates) {
        per_path[c.path] += 1;
        CHECK(c.origin.is_initial());
    }
    for (PathKind path : kAllPaths) CHECK(per_path[path] == 4);
    CHECK(candidates[0].sql == kGold);

    // one candidate per path when multi-candidate generation is disabled
    Harness single;
    single.sql_script->add("generation_with_linking", {fenced("SELECT 1")});
    single.sql_script->add("generation_with_linking", {fenced("SELECT 2")});
    single.sql_script->add("generation_without_linking", {fenced("SELECT 3")});
    single.sql_script->add("generation_without_linking", {fenced("SELECT 4")});
    PipelineConfig config;
    config.toggles.multi_candidate = false;
    auto few = single.pipeline(config).generate_candidates(single.task, single.schema,
                                                           {"Employees"}, {}, nullptr);
    CHECK(few.size() == 4);
}

TEST_CASE("degenerate pruning still runs all four paths with identical prompts") {
    Harness h;
    h.sql_script->add("*", {fenced("SELECT 1"), fenced("SELECT 2")});
    PipelineConfig config;
    config.candidates_per_path = 2;
    auto candidates = h.pipeline(config).generate_candidates(
        h.task, h.schema, h.schema.table_names(), {{"Employees", "salary"}}, nullptr);
    CHECK(candidates.size() == 8);

    auto with_linking = h.requests_for("generation_with_linking");
    REQUIRE(with_linking.size() == 2);
    CHECK(with_linking[0].user == with_linking[1].user);  // pruned == full, both still issued
    CHECK(with_linking[0].system == with_linking[1].system);
}

TEST_CASE("completions without extractable SQL become synthetic error candidates") {
    Harness h;
    h.sql_script->add("*", {"I refuse to answer"});
    PipelineConfig config;
    config.candidates_per_path = 1;
    auto candidates =
        h.pipeline(config).generate_candidates(h.task, h.schema, {"Employees"}, {}, nullptr);
    REQUIRE(candidates.size() == 4);
    for (const auto& c : candidates) {
        CHECK_FALSE(c.extracted);
        CHECK(c.outcome.status == ExecStatus::Error);
        CHECK(c.outcome.error_message == "no SQL found in model output");
        CHECK(c.sql == "I refuse to answer");
    }
}

TEST_CASE("partial path failure degrades instead of aborting") {
    Harness h;
    h.sql_script->add("generation_with_linking", {"!fail:unavailable"});
    h.sql_script->add("generation_with_linking", {"!fail:unavailable"});
    h.sql_script->add("generation_without_linking", {fenced("SELECT 1")});
    h.sql_script->add("generation_without_linking", {fenced("SELECT 2")});
    PipelineConfig config;
    config.candidates_per_path = 1;
    std::vector<std::string> errors;
    auto candidates =
        h.pipeline(config).generate_candidates(h.task, h.schema, {"Employees"}, {}, &errors);
    CHECK(candidates.size() == 2);
    REQUIRE(errors.size() == 2);
    CHECK(errors[0].find("pruned_linked") != std::string::npos);

    // when every path fails the error propagates
    Harness dead;
    dead.sql_script->add("*", {"!fail:unavailable"});
    CHECK_THROWS_AS(
        dead.pipeline(config).generate_candidates(dead.task, dead.schema, {"Employees"}, {}, nullptr),
        StageError);
}

TEST_CASE("correction spawns bounded children that join the executable set") {
    Harness h;
    h.sql_script->add("correction", {fenced(kGold), fenced("SELECT broken FROM Employees")});
    Candidate failed;
    failed.id = 3;
    failed.sql = "SELECT bogus FROM Employees";
    failed.path = PathKind::FullLinked;
    failed.outcome = execute(h.db_path, failed.sql);
    REQUIRE(failed.outcome.status == ExecStatus::Error);

    auto children = h.pipeline().correct(failed, h.task, h.schema, h.db_path, 16);
    REQUIRE(children.size() == 2);
    CHECK(children[0].id == 16);
    CHECK(children[1].id == 17);
    for (const auto& child : children) {
        CHECK_FALSE(child.origin.is_initial());
        CHECK(child.origin.parent_id == 3);
        CHECK(child.path == PathKind::FullLinked);
    }
    CHECK(children[0].origin.attempt == 1);
    CHECK(children[1].origin.attempt == 2);
    CHECK(children[0].outcome.ok());
    CHECK_FALSE(children[1].outcome.ok());

    // the correction prompt carries the previous answer and error verbatim
    auto requests = h.requests_for("correction");
    REQUIRE(requests.size() == 1);
    CHECK(requests[0].user.find("SELECT bogus FROM Employees") != std::string::npos);
    CHECK(requests[0].user.find(failed.outcome.error_message) != std::string::npos);
}

TEST_CASE("selection returns the mode with earliest-round tie-breaking") {
    Harness h;
    auto make_candidates = [&](const std::vector<std::string>& sqls) {
        std::vector<Candidate> candidates;
        std::vector<int> executables;
        for (size_t i = 0; i < sqls.size(); ++i) {
            Candidate c;
            c.id = static_cast<int>(i);
            c.sql = sqls[i];
            c.outcome = execute(h.db_path, c.sql);
            REQUIRE(c.outcome.ok());
            candidates.push_back(c);
            executables.push_back(c.id);
        }
        return std::pair(candidates, executables);
    };

    SUBCASE("votes [2,3,2] pick survivor 2") {
        auto [candidates, executables] =
            make_candidates({"SELECT 1", "SELECT 2", "SELECT 3"});
        h.chat_script->add("selection_with_results", {"Index: 2"});
        h.chat_script->add("selection_with_results", {"Index: 3"});
        h.chat_script->add("selection_with_results", {"Index: 2"});
        auto outcome = h.pipeline().select(h.task, h.schema, candidates, executables);
        CHECK(outcome.selected_id == 1);
        CHECK(outcome.votes == std::vector<int>{1, 2, 1});
    }

    SUBCASE("full tie resolves to the first round's vote") {
        auto [candidates, executables] =
            make_candidates({"SELECT 1", "SELECT 2", "SELECT 3"});
        h.chat_script->add("selection_with_results", {"Index: 1"});
        h.chat_script->add("selection_with_results", {"Index: 2"});
        h.chat_script->add("selection_with_results", {"Index: 3"});
        auto outcome = h.pipeline().select(h.task, h.schema, candidates, executables);
        CHECK(outcome.selected_id == 0);
    }

    SUBCASE("single executable short-circuits without model calls") {
        auto [candidates, executables] = make_candidates({"SELECT 1"});
        auto outcome = h.pipeline().select(h.task, h.schema, candidates, executables);
        CHECK(outcome.selected_id == 0);
        CHECK(outcome.votes.empty());
        CHECK(h.chat->requests().empty());
    }

    SUBCASE("unparsable rounds are discarded; all-unparsable falls back to FEQ") {
        auto [candidates, executables] = make_candidates({"SELECT 1", "SELECT 2"});
        h.chat_script->add("selection_with_results", {"no idea"});
        h.chat_script->add("selection_with_results", {"Index: 2"});
        h.chat_script->add("selection_with_results", {"hmm"});
        auto outcome = h.pipeline().select(h.task, h.schema, candidates, executables);
        CHECK(outcome.selected_id == 1);
        CHECK(outcome.votes == std::vector<int>{-1, 1, -1});

        Harness feq;
        feq.chat_script->add("selection_with_results", {"nope"});
        auto [c2, e2] = make_candidates({"SELECT 1", "SELECT 2"});
        auto fallback = feq.pipeline().select(feq.task, feq.schema, c2, e2);
        CHECK(fallback.selected_id == 0);  // first executable query
        CHECK(fallback.feq_fallback);
    }

    SUBCASE("duplicate SQL is deduped before ranking") {
        auto [candidates, executables] =
            make_candidates({"SELECT 1", "SELECT   1", "SELECT 2"});
        h.chat_script->add("selection_with_results", {"Index: 2"});
        auto outcome = h.pipeline().select(h.task, h.schema, candidates, executables);
        // survivors are [SELECT 1 (id 0), SELECT 2 (id 2)]; index 2 is id 2
        CHECK(outcome.selected_id == 2);
    }

    SUBCASE("oversized previews switch to the query-only template") {
        auto [candidates, executables] = make_candidates(
            {"SELECT name FROM Employees", "SELECT e1.name FROM Employees e1, Employees e2"});
        h.chat_script->add("selection_query_only", {"Index: 1"});
        h.chat_script->add("selection_query_only", {"Index: 1"});
        h.chat_script->add("selection_query_only", {"Index: 1"});
        PipelineConfig config;
        config.result_preview_rows = 5;  // the self-join yields 16 rows
        auto outcome = h.pipeline(config).select(h.task, h.schema, candidates, executables);
        CHECK_FALSE(outcome.used_results_template);
        CHECK(outcome.selected_id == 0);
        CHECK(h.requests_for("selection_query_only").size() == 3);
        CHECK(h.requests_for("selection_with_results").empty());
    }
}

TEST_CASE("full run composes the six stages") {
    Harness h;
    h.chat_script->add("pruning", {"The relevant table is Employees."});
    h.chat_script->add("linking", {"The related columns are Employees.name and Employees.salary."});
    // path 3 (pruned only) candidate 1 carries the only executable query
    h.sql_script->add("generation_with_linking", {fenced("SELECT oops1 FROM Employees"),
                                                  fenced("SELECT oops2 FROM Employees")});
    h.sql_script->add("generation_with_linking", {fenced("SELECT oops3 FROM Employees"),
                                                  fenced("SELECT oops4 FROM Employees")});
    h.sql_script->add("generation_without_linking", {fenced(kGold),
                                                     fenced("SELECT oops5 FROM Employees")});
    h.sql_script->add("generation_without_linking", {fenced("SELECT oops6 FROM Employees"),
                                                     fenced("SELECT oops7 FROM Employees")});
    h.sql_script->add("correction", {fenced("SELECT nope1 FROM Employees"),
                                     fenced("SELECT nope2 FROM Employees")});

    PipelineConfig config;
    config.candidates_per_path = 2;
    PipelineResult result = h.pipeline(config).run(h.task, h.schema, h.db_path);

    CHECK(result.pruned_tables == std::vector<std::string>{"Employees"});
    REQUIRE(result.selected_id.has_value());
    const Candidate* selected = result.selected();
    REQUIRE(selected != nullptr);
    CHECK(selected->sql == kGold);
    CHECK(selected->path == PathKind::PrunedOnly);
    CHECK(result.executable_ids == std::vector<int>{4});
    CHECK(result.selection_votes.empty());  // single executable short-circuits

    int initial = 0, corrected = 0;
    for (const auto& c : result.candidates) {
        (c.origin.is_initial() ? initial : corrected) += 1;
    }
    CHECK(initial == 8);
    CHECK(corrected == 14);  // seven failed initial candidates, two children each

    // role isolation across the whole run
    for (const auto& request : h.chat->requests()) {
        CHECK((request.stage == "pruning" || request.stage == "linking" ||
               request.stage == "selection_query_only" ||
               request.stage == "selection_with_results"));
    }
    for (const auto& request : h.sql->requests()) {
        CHECK((request.stage == "generation_with_linking" ||
               request.stage == "generation_without_linking" || request.stage == "correction"));
    }

    // timings exist for every stage
    for (const char* stage : {"pruning", "linking", "generation", "execution", "correction",
                              "selection"}) {
        CHECK(result.stage_timings_ms.count(stage) == 1);
    }
}

TEST_CASE("total failure leaves selection empty") {
    Harness h;
    h.chat_script->add("pruning", {"The relevant table is Employees."});
    h.chat_script->add("linking", {"salary"});
    h.sql_script->add("*", {fenced("SELECT broken FROM Employees")});
    PipelineConfig config;
    config.candidates_per_path = 1;
    PipelineResult result = h.pipeline(config).run(h.task, h.schema, h.db_path);
    CHECK_FALSE(result.selected_id.has_value());
    CHECK(result.executable_ids.empty());
    CHECK(result.candidates.size() == 4 + 8);
}

TEST_CASE("toggles switch stages off") {
    auto scripted_harness = [](PipelineConfig config) {
        auto h = std::make_unique<Harness>();
        h->chat_script->add("pruning", {"The relevant table is Employees."});
        h->chat_script->add("linking",
                            {"The related columns are Employees.name and Employees.salary."});
        h->chat_script->add("selection_with_results", {"Index: 2"});
        h->sql_script->add("generation_with_linking", {fenced("SELECT 1")});
        h->sql_script->add("generation_with_linking", {fenced("SELECT 2")});
        h->sql_script->add("generation_without_linking", {fenced("SELECT broken FROM Employees")});
        h->sql_script->add("generation_without_linking", {fenced("SELECT 4")});
        h->sql_script->add("correction", {fenced("SELECT 9"), fenced("SELECT 10")});
        config.candidates_per_path = 1;
        return std::pair(std::move(h), config);
    };

    SUBCASE("no pruning: no call, full table set") {
        PipelineConfig config;
        config.toggles.pruning = false;
        auto [h, cfg] = scripted_harness(config);
        PipelineResult result = h->pipeline(cfg).run(h->task, h->schema, h->db_path);
        CHECK(result.pruned_tables == h->schema.table_names());
        CHECK(h->requests_for("pruning").empty());
    }
    SUBCASE("no linking: empty linked set, no call") {
        PipelineConfig config;
        config.toggles.linking = false;
        auto [h, cfg] = scripted_harness(config);
        PipelineResult result = h->pipeline(cfg).run(h->task, h->schema, h->db_path);
        CHECK(result.linked_columns.empty());
        CHECK(h->requests_for("linking").empty());
    }
    SUBCASE("no correction: failed candidates stay childless") {
        PipelineConfig config;
        config.toggles.correction = false;
        auto [h, cfg] = scripted_harness(config);
        PipelineResult result = h->pipeline(cfg).run(h->task, h->schema, h->db_path);
        for (const auto& c : result.candidates) CHECK(c.origin.is_initial());
        CHECK(h->requests_for("correction").empty());
    }
    SUBCASE("no selection: FEQ, zero selection calls") {
        PipelineConfig config;
        config.toggles.selection = false;
        auto [h, cfg] = scripted_harness(config);
        PipelineResult result = h->pipeline(cfg).run(h->task, h->schema, h->db_path);
        REQUIRE(result.selected_id.has_value());
        CHECK(*result.selected_id == result.executable_ids.front());
        CHECK(h->requests_for("selection_with_results").empty());
        CHECK(h->requests_for("selection_query_only").empty());
    }
}

TEST_CASE("structural invariants hold across randomized scripted runs") {
    TempDir dir;
    std::string db_path = make_hr_db(dir.path());
    DatabaseSchema schema = load_schema(db_path);
    for (std::uint32_t seed = 0; seed < 25; ++seed) {
        auto failure = random_pipeline_trial(seed, db_path, schema);
        if (failure) {
            CAPTURE(seed);
            FAIL_CHECK(*failure);
        }
    }
}

}  // TEST_SUITE
