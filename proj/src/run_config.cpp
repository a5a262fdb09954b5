#include "nlsql/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

std::string interpolate_env(const std::string& value) {
    std::string out;
    size_t i = 0;
    while (i < value.size()) {
        if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
            size_t close = value.find('}', i + 2);
            if (close == std::string::npos) {
                throw InvalidConfigError("unterminated ${ in config value: " + value);
            }
            std::string name = value.substr(i + 2, close - i - 2);
            const char* env = std::getenv(name.c_str());
            if (!env) {
                throw InvalidConfigError("environment variable not set: " + name);
            }
            out += env;
            i = close + 1;
        } else {
            out += value[i++];
        }
    }
    return out;
}

void interpolate_tree(nlohmann::json& node) {
    if (node.is_string()) {
        node = interpolate_env(node.get<std::string>());
    } else if (node.is_object() || node.is_array()) {
        for (auto& child : node) interpolate_tree(child);
    }
}

BackendEndpoint parse_endpoint(const nlohmann::json& node) {
    BackendEndpoint endpoint;
    if (node.contains("script")) {
        endpoint.kind = "script";
        endpoint.script_path = node["script"].get<std::string>();
        return endpoint;
    }
    endpoint.kind = "http";
    if (!node.contains("base_url")) {
        throw InvalidConfigError("backend endpoint needs either 'script' or 'base_url'");
    }
    endpoint.http.base_url = node["base_url"].get<std::string>();
    endpoint.http.model = node.value("model", std::string());
    endpoint.http.api_key_env = node.value("api_key_env", endpoint.http.api_key_env);
    endpoint.http.max_retries = node.value("max_retries", endpoint.http.max_retries);
    endpoint.http.max_in_flight = node.value("max_in_flight", endpoint.http.max_in_flight);
    endpoint.http.supports_n = node.value("supports_n", endpoint.http.supports_n);
    endpoint.http.use_beam_search = node.value("use_beam_search", endpoint.http.use_beam_search);
    if (node.contains("timeout_ms")) {
        endpoint.http.timeout = std::chrono::milliseconds(node["timeout_ms"].get<long>());
    }
    return endpoint;
}

void parse_pipeline(const nlohmann::json& node, PipelineConfig& pipeline) {
    pipeline.candidates_per_path = node.value("candidates_per_path", pipeline.candidates_per_path);
    pipeline.correction_candidates =
        node.value("correction_candidates", pipeline.correction_candidates);
    pipeline.selection_rounds = node.value("selection_rounds", pipeline.selection_rounds);
    pipeline.temperature = node.value("temperature", pipeline.temperature);
    pipeline.top_p = node.value("top_p", pipeline.top_p);
    pipeline.max_tokens_generation =
        node.value("max_tokens_generation", pipeline.max_tokens_generation);
    pipeline.max_tokens_reasoning =
        node.value("max_tokens_reasoning", pipeline.max_tokens_reasoning);
    pipeline.result_preview_rows = node.value("result_preview_rows", pipeline.result_preview_rows);
    pipeline.result_preview_chars =
        node.value("result_preview_chars", pipeline.result_preview_chars);
    if (node.contains("answer_patterns")) {
        pipeline.answer_patterns = node["answer_patterns"].get<std::vector<std::string>>();
        if (pipeline.answer_patterns.empty()) {
            throw InvalidConfigError("answer_patterns must not be empty");
        }
    }
    if (node.contains("exec_timeout_ms")) {
        pipeline.exec_timeout = std::chrono::milliseconds(node["exec_timeout_ms"].get<long>());
    }
    pipeline.exec_row_limit = node.value("exec_row_limit", pipeline.exec_row_limit);
    if (node.contains("stage_roles")) {
        for (const auto& [name, role] : node["stage_roles"].items()) {
            auto stage = stage_from_name(name);
            auto model_role = role_from_name(role.get<std::string>());
            if (!stage || !model_role) {
                throw InvalidConfigError("bad stage_roles entry: " + name);
            }
            pipeline.stage_role_map[*stage] = *model_role;
        }
    }
}

}  // namespace

nlohmann::ordered_json RunConfig::echo() const {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json backend_echo;
    for (const auto& [role, endpoint] : backends) {
        nlohmann::ordered_json e;
        e["kind"] = endpoint.kind;
        if (endpoint.kind == "http") {
            e["base_url"] = endpoint.http.base_url;
            e["model"] = endpoint.http.model;
            e["supports_n"] = endpoint.http.supports_n;
            e["use_beam_search"] = endpoint.http.use_beam_search;
        } else {
            e["script"] = endpoint.script_path;
        }
        backend_echo[role_name(role)] = std::move(e);
    }
    doc["backends"] = std::move(backend_echo);

    nlohmann::ordered_json p;
    p["candidates_per_path"] = pipeline.candidates_per_path;
    p["correction_candidates"] = pipeline.correction_candidates;
    p["selection_rounds"] = pipeline.selection_rounds;
    p["temperature"] = pipeline.temperature;
    p["top_p"] = pipeline.top_p;
    p["max_tokens_generation"] = pipeline.max_tokens_generation;
    p["max_tokens_reasoning"] = pipeline.max_tokens_reasoning;
    p["result_preview_rows"] = pipeline.result_preview_rows;
    p["result_preview_chars"] = pipeline.result_preview_chars;
    p["answer_patterns"] = pipeline.answer_patterns;
    p["exec_timeout_ms"] = static_cast<long>(pipeline.exec_timeout.count());
    p["exec_row_limit"] = pipeline.exec_row_limit;
    nlohmann::ordered_json roles;
    for (StageKind stage : kAllStages) {
        roles[stage_name(stage)] = role_name(pipeline.stage_role_map.at(stage));
    }
    p["stage_roles"] = std::move(roles);
    doc["pipeline"] = std::move(p);

    doc["toggles"] = {{"pruning", pipeline.toggles.pruning},
                      {"linking", pipeline.toggles.linking},
                      {"multi_candidate", pipeline.toggles.multi_candidate},
                      {"correction", pipeline.toggles.correction},
                      {"selection", pipeline.toggles.selection}};
    doc["dataset"] = {{"path", dataset_path},
                      {"format", dataset_format == DatasetFormat::Bird ? "bird" : "spider"}};
    doc["database_root"] = database_root;
    doc["workers"] = workers;
    if (!prompt_dir.empty()) doc["prompt_dir"] = prompt_dir;
    return doc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot read config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    interpolate_tree(doc);

    RunConfig config;
    if (doc.contains("backends")) {
        for (const auto& [name, node] : doc["backends"].items()) {
            auto role = role_from_name(name);
            if (!role) throw InvalidConfigError("unknown backend role: " + name);
            config.backends[*role] = parse_endpoint(node);
        }
    }
    if (config.backends.empty()) {
        throw InvalidConfigError("config names no backends");
    }
    if (doc.contains("pipeline")) parse_pipeline(doc["pipeline"], config.pipeline);
    if (doc.contains("toggles")) {
        const auto& t = doc["toggles"];
        config.pipeline.toggles.pruning = t.value("pruning", true);
        config.pipeline.toggles.linking = t.value("linking", true);
        config.pipeline.toggles.multi_candidate = t.value("multi_candidate", true);
        config.pipeline.toggles.correction = t.value("correction", true);
        config.pipeline.toggles.selection = t.value("selection", true);
    }
    if (doc.contains("dataset")) {
        config.dataset_path = doc["dataset"].value("path", std::string());
        std::string format = doc["dataset"].value("format", std::string("bird"));
        auto parsed = dataset_format_from_name(format);
        if (!parsed) throw InvalidConfigError("unknown dataset format: " + format);
        config.dataset_format = *parsed;
    }
    config.database_root = doc.value("database_root", config.database_root);
    config.output_dir = doc.value("output_dir", config.output_dir);
    config.workers = doc.value("workers", config.workers);
    if (config.workers < 1) throw InvalidConfigError("workers must be >= 1");
    config.prompt_dir = doc.value("prompt_dir", config.prompt_dir);
    return config;
}

void bind_backends(BackendRouter& router, const RunConfig& config) {
    auto build = [](const BackendEndpoint& endpoint) -> std::shared_ptr<Backend> {
        if (endpoint.kind == "script") {
            return ScriptedBackend::from_file(endpoint.script_path);
        }
        return std::make_shared<HttpBackend>(endpoint.http);
    };

    if (config.backends.size() == 1) {
        // unified model: the single backend serves both roles
        auto backend = build(config.backends.begin()->second);
        router.bind(ModelRole::Chat, backend);
        router.bind(ModelRole::Sql, backend);
        return;
    }
    for (const auto& [role, endpoint] : config.backends) {
        router.bind(role, build(endpoint));
    }
}

PromptSet load_prompts(const RunConfig& config) {
    PromptSet prompts;
    if (!config.prompt_dir.empty()) prompts.load_overrides(config.prompt_dir);
    return prompts;
}

}  // namespace nlsql
