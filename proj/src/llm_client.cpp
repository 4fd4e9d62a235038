#include "mtqe/llm_client.hpp"

#include "mtqe/error.hpp"
#include "mtqe/jsonl.hpp"
#include "mtqe/log.hpp"
#include "mtqe/parallel.hpp"
#include "mtqe/sha256.hpp"

#include <httplib.h>

#include <chrono>
#include <random>
#include <thread>

namespace mtqe {

namespace {

using nlohmann::json;

bool is_transient_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

double jitter() {
    thread_local std::mt19937_64 rng(
        std::random_device{}() ^
        std::hash<std::thread::id>{}(std::this_thread::get_id()));
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

void ClientConfig::validate() const {
    if (endpoint_url.empty() && !cache_dir) {
        throw Error("client config: endpoint_url or cache_dir required");
    }
    if (model_name.empty()) throw Error("client config: model_name required");
    if (parallelism < 1) throw Error("client config: parallelism must be >= 1");
    if (max_retries < 0) throw Error("client config: max_retries must be >= 0");
    if (temperature < 0.0) throw Error("client config: temperature must be >= 0");
    if (max_output_tokens < 1) {
        throw Error("client config: max_output_tokens must be positive");
    }
}

std::string completion_cache_key(const ClientConfig& config,
                                 const PromptPair& prompts) {
    // Length-prefixed fields so no concatenation of distinct inputs can
    // collide.
    auto frame = [](const std::string& s) {
        return std::to_string(s.size()) + ":" + s;
    };
    std::string material = frame(config.model_name) + frame(prompts.system_text) +
                           frame(prompts.user_text) +
                           frame(json(config.temperature).dump());
    return sha256_hex(material);
}

LlmClient::LlmClient(ClientConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::string& url = config_.endpoint_url;
    if (!url.empty()) {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw Error("endpoint_url must include a scheme: " + url);
        }
        auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            host_ = url;
        } else {
            host_ = url.substr(0, path_start);
            path_base_ = url.substr(path_start);
        }
        while (!path_base_.empty() && path_base_.back() == '/') {
            path_base_.pop_back();
        }
    }
}

RawCompletion LlmClient::complete(const PromptPair& prompts,
                                  const std::string& item_id,
                                  const std::string& system_id) {
    RawCompletion result;
    result.item_id = item_id;
    result.system_id = system_id;
    result.model_name = config_.model_name;

    std::filesystem::path cache_file;
    if (config_.cache_dir) {
        cache_file = *config_.cache_dir /
                     (completion_cache_key(config_, prompts) + ".json");
        if (std::filesystem::exists(cache_file)) {
            json cached = json::parse(read_text_file(cache_file));
            result.raw_text = cached.at("raw_text").get<std::string>();
            if (cached.contains("warnings")) {
                result.warnings = cached["warnings"].get<std::vector<std::string>>();
            }
            result.from_cache = true;
            result.latency_s = 0.0;
            return result;
        }
    }
    if (host_.empty()) {
        throw TransportError("cold cache and no endpoint configured");
    }

    json body = {
        {"model", config_.model_name},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_output_tokens},
        {"messages",
         json::array({json{{"role", "system"}, {"content", prompts.system_text}},
                      json{{"role", "user"}, {"content", prompts.user_text}}})},
    };
    for (const auto& [k, v] : config_.extra_body.items()) body[k] = v;
    const std::string payload = body.dump();
    const std::string path = path_base_ + "/chat/completions";

    int last_status = 0;
    std::string last_detail;
    auto start = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay = config_.backoff_initial_s *
                           static_cast<double>(1 << (attempt - 1)) * jitter();
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            log_info("retrying request",
                     {{"attempt", attempt}, {"item_id", item_id},
                      {"system_id", system_id}, {"last_status", last_status}});
        }
        httplib::Client client(host_);
        client.set_connection_timeout(std::chrono::duration<double>(config_.request_timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config_.request_timeout_s));
        if (!config_.api_token.empty()) {
            client.set_bearer_token_auth(config_.api_token);
        }
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_detail = httplib::to_string(res.error());
            continue;  // connection-level failure: transient
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
            json reply = json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("choices") ||
                reply["choices"].empty() ||
                !reply["choices"][0].contains("message")) {
                throw Error("malformed completion response for (" + item_id +
                            ", " + system_id + ")");
            }
            const auto& choice = reply["choices"][0];
            const auto& content = choice["message"]["content"];
            result.raw_text = content.is_string() ? content.get<std::string>() : "";
            if (choice.value("finish_reason", "") == "length") {
                result.warnings.push_back("output truncated (finish_reason=length)");
            }
            result.latency_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
            if (config_.cache_dir) {
                std::filesystem::create_directories(*config_.cache_dir);
                json record = {{"model", config_.model_name},
                               {"raw_text", result.raw_text},
                               {"warnings", result.warnings}};
                // Write-then-rename: concurrent writers of the same key
                // produce the same content, so the race is benign.
                auto tmp = cache_file;
                tmp += "." + std::to_string(std::hash<std::thread::id>{}(
                                  std::this_thread::get_id())) +
                       ".tmp";
                write_text_file(tmp, record.dump());
                std::filesystem::rename(tmp, cache_file);
            }
            return result;
        }
        if (!is_transient_status(res->status)) {
            throw Error("endpoint returned HTTP " + std::to_string(res->status) +
                        " for (" + item_id + ", " + system_id + ")");
        }
        last_detail = "HTTP " + std::to_string(res->status);
    }
    throw TransportError("retries exhausted for (" + item_id + ", " + system_id +
                         "): " + (last_detail.empty() ? "connection failed"
                                                      : last_detail));
}

std::vector<RawCompletion> LlmClient::run_batch(
    const std::vector<Segment>& segments) {
    if (segments.empty()) throw Error("run_batch: no segments");
    std::vector<RawCompletion> results(segments.size());
    parallel_for(segments.size(), static_cast<std::size_t>(config_.parallelism),
                 [&](std::size_t i) {
                     const Segment& seg = segments[i];
                     try {
                         results[i] = complete(build_prompts(seg), seg.item_id,
                                               seg.system_id);
                     } catch (const std::exception& e) {
                         RawCompletion failed;
                         failed.item_id = seg.item_id;
                         failed.system_id = seg.system_id;
                         failed.model_name = config_.model_name;
                         failed.error = e.what();
                         results[i] = std::move(failed);
                         log_error("segment failed",
                                   {{"item_id", seg.item_id},
                                    {"system_id", seg.system_id},
                                    {"error", e.what()}});
                     }
                 });
    return results;
}

nlohmann::ordered_json raw_completion_to_json(const RawCompletion& c) {
    nlohmann::ordered_json row{{"item_id", c.item_id},
                               {"system_id", c.system_id},
                               {"model", c.model_name},
                               {"raw_text", c.raw_text},
                               {"latency_s", c.latency_s},
                               {"from_cache", c.from_cache}};
    if (c.error) row["error"] = *c.error;
    if (!c.warnings.empty()) row["warnings"] = c.warnings;
    return row;
}

}  // namespace mtqe
