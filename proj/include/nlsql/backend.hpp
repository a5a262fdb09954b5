#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace nlsql {

enum class ModelRole { Chat, Sql };

std::string role_name(ModelRole role);
std::optional<ModelRole> role_from_name(const std::string& name);

struct SamplingParams {
    double temperature = 0.2;
    double top_p = 0.8;
    bool greedy = false;
    int num_candidates = 1;
    int max_tokens = 512;
};

struct GenerationRequest {
    ModelRole role = ModelRole::Chat;
    std::string system;
    std::string user;
    SamplingParams sampling;
    std::string stage;  // stage tag embedded by the pipeline
    std::string tag;    // optional scope (question id) for scripted lookups
};

enum class FinishReason { Stop, Length, Error };

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::chrono::milliseconds latency{0};
};

struct GenerationResult {
    std::vector<Completion> completions;
    int attempts = 1;  // transport attempts, observable in the call trace
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

/// Canned responses keyed by (stage tag, call ordinal). Greedy requests
/// always replay the first entry; sampling requests advance the ordinal and
/// stick to the last entry once the script is exhausted. A key of
/// `<stage>#<tag>` takes precedence over the bare stage, and `*` catches
/// anything unscripted. An entry text of "!fail:unavailable" or
/// "!fail:rejected" raises the corresponding backend error.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;

    /// Loads a JSON script: {"<key>": [["reply", ...], ...], ...}.
    static std::shared_ptr<ScriptedBackend> from_file(const std::string& path);

    void add(const std::string& key, std::vector<std::string> call_texts);
    GenerationResult generate(const GenerationRequest& request) override;

private:
    std::mutex mutex_;
    std::map<std::string, std::vector<std::vector<std::string>>> script_;
    std::map<std::string, size_t> ordinals_;
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://localhost:8000
    std::string model;
    std::string api_key_env = "NLSQL_API_KEY";
    int max_retries = 3;  // transport retries after the first attempt
    int max_in_flight = 8;
    bool supports_n = true;       // fall back to repeated calls when false
    bool use_beam_search = false;  // forwarded for servers with native beam decoding
    std::chrono::milliseconds timeout{120000};
};

/// OpenAI-compatible /v1/chat/completions client.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    GenerationResult generate(const GenerationRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct CallRecord {
    ModelRole role;
    std::string stage;
    int requested = 0;
    int returned = 0;
    int attempts = 0;
};

/// Role-to-backend binding for the 1+1 paradigm. Binding one backend to both
/// roles yields the unified-model setting.
class BackendRouter {
public:
    void bind(ModelRole role, std::shared_ptr<Backend> backend);
    bool bound(ModelRole role) const;

    /// Routes to the bound backend. Greedy requests return exactly one
    /// completion; sampling requests return exactly num_candidates.
    /// Throws BackendUnavailableError when the role has no binding.
    std::vector<Completion> generate(const GenerationRequest& request);

    std::vector<CallRecord> calls() const;
    void clear_calls();

private:
    mutable std::mutex mutex_;
    std::map<ModelRole, std::shared_ptr<Backend>> backends_;
    std::vector<CallRecord> calls_;
};

}  // namespace nlsql
