#include "mtqe/mock_server.hpp"

#include "mtqe/error.hpp"
#include "mtqe/jsonl.hpp"
#include "mtqe/log.hpp"
#include "mtqe/sha256.hpp"

#include <httplib.h>

#include <atomic>
#include <map>
#include <thread>

namespace mtqe {

namespace {

using nlohmann::json;

json completion_body(const std::string& model, const std::string& content) {
    return json{
        {"id", "mock-" + sha256_hex(content).substr(0, 12)},
        {"object", "chat.completion"},
        {"model", model},
        {"choices",
         json::array({json{{"index", 0},
                           {"message", json{{"role", "assistant"},
                                            {"content", content}}},
                           {"finish_reason", "stop"}}})},
    };
}

}  // namespace

std::string request_fingerprint(
    const std::string& model,
    const std::vector<std::pair<std::string, std::string>>& messages) {
    auto frame = [](const std::string& s) {
        return std::to_string(s.size()) + ":" + s;
    };
    std::string material = frame(model);
    for (const auto& [role, content] : messages) {
        material += frame(role) + frame(content);
    }
    return sha256_hex(material);
}

struct MockServer::Impl {
    MockServerOptions options;
    std::map<std::string, std::string> responses;  // fingerprint -> content
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<std::size_t> hits{0};
    std::atomic<std::size_t> unknown{0};
    std::atomic<std::size_t> schedule_cursor{0};

    void load_fixtures() {
        if (!options.fixture_dir) return;
        std::vector<std::filesystem::path> files;
        for (const auto& entry :
             std::filesystem::directory_iterator(*options.fixture_dir)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            json fixture = json::parse(read_text_file(file));
            std::string fingerprint;
            if (fixture.contains("fingerprint")) {
                fingerprint = fixture.at("fingerprint").get<std::string>();
            } else {
                std::vector<std::pair<std::string, std::string>> messages;
                for (const auto& m : fixture.at("messages")) {
                    messages.emplace_back(m.at("role").get<std::string>(),
                                          m.at("content").get<std::string>());
                }
                fingerprint = request_fingerprint(
                    fixture.at("model").get<std::string>(), messages);
            }
            responses[fingerprint] = fixture.at("response").get<std::string>();
        }
        log_info("mock server loaded fixtures",
                 {{"count", responses.size()}});
    }

    void handle_chat(const httplib::Request& req, httplib::Response& res) {
        hits.fetch_add(1);
        std::size_t n = schedule_cursor.fetch_add(1);
        if (n < options.failure_schedule.size()) {
            int status = options.failure_schedule[n];
            if (status < 200 || status >= 300) {
                res.status = status;
                res.set_content(json{{"error", {{"message", "scripted failure"},
                                                {"code", status}}}}
                                    .dump(),
                                "application/json");
                return;
            }
        }
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("messages")) {
            res.status = 400;
            res.set_content(json{{"error", {{"message", "bad request"}}}}.dump(),
                            "application/json");
            return;
        }
        std::string model = body.value("model", "");
        std::vector<std::pair<std::string, std::string>> messages;
        for (const auto& m : body["messages"]) {
            messages.emplace_back(m.value("role", ""), m.value("content", ""));
        }
        std::string fingerprint = request_fingerprint(model, messages);
        auto it = responses.find(fingerprint);
        if (it != responses.end()) {
            res.set_content(completion_body(model, it->second).dump(),
                            "application/json");
            return;
        }
        unknown.fetch_add(1);
        if (options.fallback_content) {
            res.set_content(
                completion_body(model, *options.fallback_content).dump(),
                "application/json");
            return;
        }
        res.status = 404;
        res.set_content(json{{"error",
                              {{"message", "no fixture for fingerprint"},
                               {"fingerprint", fingerprint}}}}
                            .dump(),
                        "application/json");
    }
};

MockServer::MockServer(MockServerOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    impl_->load_fixtures();

    impl_->server.Post(R"(.*/chat/completions)",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           impl_->handle_chat(req, res);
                       });
    impl_->server.Get("/__health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
    impl_->server.Get("/__stats", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"hits", impl_->hits.load()},
                             {"unknown", impl_->unknown.load()}}
                            .dump(),
                        "application/json");
    });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(int port) {
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
        if (impl_->port <= 0) throw Error("mock server: failed to bind");
    } else {
        if (!impl_->server.bind_to_port("127.0.0.1", port)) {
            throw Error("mock server: port " + std::to_string(port) +
                        " is unavailable");
        }
        impl_->port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void MockServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int MockServer::port() const { return impl_->port; }
std::size_t MockServer::hits() const { return impl_->hits.load(); }
std::size_t MockServer::unknown_hits() const { return impl_->unknown.load(); }

}  // namespace mtqe
