#include "nlsql/backend.hpp"

#include <fstream>

#include <json.hpp>

#include "nlsql/errors.hpp"

namespace nlsql {

std::string role_name(ModelRole role) {
    return role == ModelRole::Chat ? "chat" : "sql";
}

std::optional<ModelRole> role_from_name(const std::string& name) {
    if (name == "chat") return ModelRole::Chat;
    if (name == "sql") return ModelRole::Sql;
    return std::nullopt;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot read backend script: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfigError("malformed backend script " + path + ": " + e.what());
    }
    auto backend = std::make_shared<ScriptedBackend>();
    for (auto& [key, calls] : doc.items()) {
        if (!calls.is_array()) {
            throw InvalidConfigError("script key '" + key + "' must map to an array of calls");
        }
        for (const auto& call : calls) {
            std::vector<std::string> texts;
            if (call.is_string()) {
                texts.push_back(call.get<std::string>());
            } else if (call.is_array()) {
                for (const auto& t : call) texts.push_back(t.get<std::string>());
            } else {
                throw InvalidConfigError("script call entries must be strings or string arrays");
            }
            backend->add(key, std::move(texts));
        }
    }
    return backend;
}

void ScriptedBackend::add(const std::string& key, std::vector<std::string> call_texts) {
    std::lock_guard lock(mutex_);
    script_[key].push_back(std::move(call_texts));
}

GenerationResult ScriptedBackend::generate(const GenerationRequest& request) {
    std::vector<std::string> texts;
    {
        std::lock_guard lock(mutex_);
        const std::vector<std::vector<std::string>>* calls = nullptr;
        std::string key;
        if (!request.tag.empty()) {
            auto scoped = script_.find(request.stage + "#" + request.tag);
            if (scoped != script_.end()) {
                calls = &scoped->second;
                key = request.stage + "#" + request.tag;
            }
        }
        if (!calls) {
            auto it = script_.find(request.stage);
            if (it != script_.end()) {
                calls = &it->second;
                key = request.stage;
            }
        }
        if (!calls) {
            auto any = script_.find("*");
            if (any != script_.end()) {
                calls = &any->second;
                key = "*";
            }
        }
        if (!calls || calls->empty()) {
            throw BackendRejectedError("no scripted response for stage '" + request.stage + "'");
        }
        size_t ordinal = 0;
        if (!request.sampling.greedy) {
            size_t& counter = ordinals_[key];
            ordinal = counter < calls->size() ? counter : calls->size() - 1;
            ++counter;
        }
        texts = (*calls)[std::min(ordinal, calls->size() - 1)];
    }

    if (texts.size() == 1 && texts[0].rfind("!fail:", 0) == 0) {
        std::string kind = texts[0].substr(6);
        if (kind == "unavailable") throw BackendUnavailableError("scripted transport failure");
        throw BackendRejectedError("scripted rejection");
    }

    GenerationResult result;
    size_t want = request.sampling.greedy ? 1 : static_cast<size_t>(request.sampling.num_candidates);
    for (size_t i = 0; i < want; ++i) {
        const std::string& text = i < texts.size() ? texts[i] : texts.back();
        result.completions.push_back({text, FinishReason::Stop, std::chrono::milliseconds{0}});
    }
    return result;
}

void BackendRouter::bind(ModelRole role, std::shared_ptr<Backend> backend) {
    std::lock_guard lock(mutex_);
    backends_[role] = std::move(backend);
}

bool BackendRouter::bound(ModelRole role) const {
    std::lock_guard lock(mutex_);
    return backends_.count(role) > 0;
}

std::vector<Completion> BackendRouter::generate(const GenerationRequest& request) {
    std::shared_ptr<Backend> backend;
    {
        std::lock_guard lock(mutex_);
        auto it = backends_.find(request.role);
        if (it != backends_.end()) backend = it->second;
    }
    if (!backend) {
        throw BackendUnavailableError("no backend bound for role '" + role_name(request.role) +
                                      "'");
    }
    GenerationResult result = backend->generate(request);
    {
        std::lock_guard lock(mutex_);
        calls_.push_back({request.role, request.stage,
                          request.sampling.greedy ? 1 : request.sampling.num_candidates,
                          static_cast<int>(result.completions.size()), result.attempts});
    }
    return std::move(result.completions);
}

std::vector<CallRecord> BackendRouter::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

void BackendRouter::clear_calls() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

}  // namespace nlsql
