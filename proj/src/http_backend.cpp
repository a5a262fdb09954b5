#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nlsql/backend.hpp"
#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

bool retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

class Semaphore {
public:
    explicit Semaphore(int slots) : slots_(slots) {}
    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

struct SlotGuard {
    Semaphore& sem;
    explicit SlotGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

}  // namespace

struct HttpBackend::Impl {
    HttpBackendConfig config;
    std::string path;
    std::string api_key;
    Semaphore in_flight;
    std::atomic<bool> n_unsupported{false};

    explicit Impl(HttpBackendConfig cfg)
        : config(std::move(cfg)), in_flight(std::max(1, config.max_in_flight)) {
        if (config.base_url.empty()) throw InvalidConfigError("http backend needs a base_url");
        while (!config.base_url.empty() && config.base_url.back() == '/') {
            config.base_url.pop_back();
        }
        if (config.base_url.size() >= 3 &&
            config.base_url.compare(config.base_url.size() - 3, 3, "/v1") == 0) {
            path = "/chat/completions";
        } else {
            path = "/v1/chat/completions";
        }
        // keep host part only in base_url for httplib; the /v1 suffix moves
        // into the request path
        if (path == "/chat/completions") {
            std::string host = config.base_url.substr(0, config.base_url.size() - 3);
            config.base_url = host;
            path = "/v1/chat/completions";
        }
        if (const char* key = std::getenv(config.api_key_env.c_str())) api_key = key;
    }

    nlohmann::json build_body(const GenerationRequest& request, int n) const {
        nlohmann::json body = {
            {"model", config.model},
            {"messages",
             {{{"role", "system"}, {"content", request.system}},
              {{"role", "user"}, {"content", request.user}}}},
            {"max_tokens", request.sampling.max_tokens},
            {"n", n},
        };
        if (request.sampling.greedy) {
            body["temperature"] = 0.0;
            body["top_p"] = 1.0;
        } else {
            body["temperature"] = request.sampling.temperature;
            body["top_p"] = request.sampling.top_p;
        }
        if (config.use_beam_search) body["use_beam_search"] = true;
        return body;
    }

    // One POST with bounded transport retries. Returns the parsed choices.
    std::vector<Completion> post(const nlohmann::json& body, int& attempts) {
        httplib::Client client(config.base_url);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
            config.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config.timeout));
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        std::string last_error;
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(250) * (1 << (attempt - 1)));
            }
            ++attempts;
            auto t0 = std::chrono::steady_clock::now();
            httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0);

            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                if (retryable_status(res->status)) {
                    last_error = "status " + std::to_string(res->status);
                    continue;
                }
                throw BackendRejectedError("server returned status " +
                                           std::to_string(res->status) + ": " +
                                           res->body.substr(0, 512));
            }

            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw BackendRejectedError(std::string("unparsable completion response: ") +
                                           e.what());
            }
            std::vector<Completion> completions;
            for (const auto& choice : doc.value("choices", nlohmann::json::array())) {
                Completion c;
                c.text = choice.contains("message")
                             ? choice["message"].value("content", std::string())
                             : choice.value("text", std::string());
                std::string reason = choice.value("finish_reason", "stop");
                c.finish_reason = reason == "length" ? FinishReason::Length : FinishReason::Stop;
                c.latency = elapsed;
                completions.push_back(std::move(c));
            }
            if (completions.empty()) {
                throw BackendRejectedError("completion response carried no choices");
            }
            return completions;
        }
        throw BackendUnavailableError("transport failed after " +
                                      std::to_string(config.max_retries + 1) + " attempts: " +
                                      last_error);
    }
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
    SlotGuard slot(impl_->in_flight);
    GenerationResult result;
    result.attempts = 0;

    int want = request.sampling.greedy ? 1 : request.sampling.num_candidates;
    bool single_shot = want == 1 || (impl_->config.supports_n && !impl_->n_unsupported);

    if (single_shot) {
        try {
            result.completions = impl_->post(impl_->build_body(request, want), result.attempts);
            if (static_cast<int>(result.completions.size()) > want) {
                result.completions.resize(want);
            }
            if (static_cast<int>(result.completions.size()) == want) return result;
            // fewer choices than requested: top up with repeated calls below
        } catch (const BackendRejectedError&) {
            if (want == 1) throw;
            impl_->n_unsupported = true;  // server rejected n>1, fall back
            result.completions.clear();
        }
    }

    while (static_cast<int>(result.completions.size()) < want) {
        auto batch = impl_->post(impl_->build_body(request, 1), result.attempts);
        result.completions.push_back(std::move(batch.front()));
    }
    return result;
}

}  // namespace nlsql
