#pragma once

#include "mtqe/prompting.hpp"
#include "mtqe/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtqe {

struct ClientConfig {
    std::string endpoint_url;  // base URL, e.g. "http://127.0.0.1:8000/v1"
    std::string model_name;
    double temperature = 0.0;  // greedy decoding unless overridden
    int max_output_tokens = 8192;
    double request_timeout_s = 120.0;
    int max_retries = 3;
    int parallelism = 4;
    double backoff_initial_s = 1.0;  // doubled per retry, full jitter
    std::optional<std::filesystem::path> cache_dir;
    std::string api_token;  // sent as a bearer header, never logged
    // Endpoint-specific extras merged verbatim into the request body
    // (reasoning/thinking controls and the like).
    nlohmann::json extra_body = nlohmann::json::object();

    void validate() const;  // throws Error on nonsense values
};

struct RawCompletion {
    std::string item_id;
    std::string system_id;
    std::string model_name;
    std::string raw_text;  // assistant content, possibly malformed JSON
    double latency_s = 0.0;
    bool from_cache = false;
    std::optional<std::string> error;  // set on per-segment failure
    std::vector<std::string> warnings;  // e.g. truncated output

    bool ok() const { return !error.has_value(); }
};

// Content hash of (model, system text, user text, temperature). Not tied
// to the endpoint, so cached completions survive moving a model between
// hosts.
std::string completion_cache_key(const ClientConfig& config,
                                 const PromptPair& prompts);

class LlmClient {
public:
    explicit LlmClient(ClientConfig config);

    // One chat completion, with retries on 408/429/5xx and timeouts, and a
    // read-through cache when cache_dir is set. Throws TransportError when
    // retries are exhausted, Error on terminal protocol failures.
    RawCompletion complete(const PromptPair& prompts, const std::string& item_id,
                           const std::string& system_id);

    // One completion per segment, input order preserved, at most
    // `parallelism` requests in flight. Failures become error records
    // instead of aborting the batch.
    std::vector<RawCompletion> run_batch(const std::vector<Segment>& segments);

    const ClientConfig& config() const { return config_; }

private:
    ClientConfig config_;
    std::string host_;       // scheme://authority
    std::string path_base_;  // base path, no trailing slash
};

nlohmann::ordered_json raw_completion_to_json(const RawCompletion& c);

}  // namespace mtqe
