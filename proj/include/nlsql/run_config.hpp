#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "nlsql/backend.hpp"
#include "nlsql/eval.hpp"
#include "nlsql/pipeline.hpp"
#include "nlsql/prompts.hpp"

namespace nlsql {

struct BackendEndpoint {
    std::string kind;  // "http" | "script"
    HttpBackendConfig http;
    std::string script_path;
};

struct RunConfig {
    std::map<ModelRole, BackendEndpoint> backends;
    PipelineConfig pipeline;
    std::string dataset_path;
    DatasetFormat dataset_format = DatasetFormat::Bird;
    std::string database_root = "databases";
    std::string output_dir = "out";
    int workers = 4;
    std::string prompt_dir;

    /// Resolved settings embedded into every report (secrets excluded).
    nlohmann::ordered_json echo() const;
};

/// Parses the JSON config file. `${VAR}` spans in string values are replaced
/// from the environment; unset variables are a config error.
RunConfig load_run_config(const std::string& path);

/// Builds backends and binds them. A config naming a single endpoint binds
/// it to both roles (unified-model setting).
void bind_backends(BackendRouter& router, const RunConfig& config);

/// Embedded templates plus any overrides from config.prompt_dir.
PromptSet load_prompts(const RunConfig& config);

}  // namespace nlsql
