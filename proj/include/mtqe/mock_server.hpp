#pragma once

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtqe {

// Hash of model + messages (role/content, length-framed). This is how
// fixtures key their canned responses.
std::string request_fingerprint(
    const std::string& model,
    const std::vector<std::pair<std::string, std::string>>& messages);

struct MockServerOptions {
    // Directory of *.json fixtures, each either
    //   {"fingerprint": "<hex>", "response": "<assistant content>"}
    // or self-describing:
    //   {"model": ..., "messages": [{"role":..., "content":...}, ...],
    //    "response": "<assistant content>"}
    std::optional<std::filesystem::path> fixture_dir;
    // Served (HTTP 200) for unknown fingerprints; without it they get 404.
    std::optional<std::string> fallback_content;
    // Status codes replayed in request arrival order before normal
    // handling resumes; e.g. {429, 429} fails the first two requests.
    std::vector<int> failure_schedule;
};

// Deterministic OpenAI-style chat completions endpoint for tests and
// offline runs. Also serves GET /__health and GET /__stats (hit counters).
class MockServer {
public:
    explicit MockServer(MockServerOptions options);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds 127.0.0.1 (port 0 picks a free one), serves on a background
    // thread and returns the bound port. Throws Error when the port is
    // taken.
    int start(int port);
    void stop();

    int port() const;
    std::size_t hits() const;         // chat/completions requests seen
    std::size_t unknown_hits() const; // ... that missed every fixture

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mtqe
