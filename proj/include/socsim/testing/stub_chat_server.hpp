#pragma once

// Chat-completion stub for backend tests: serves queued (status, body) pairs in
// order, then a fallback reply. Records every request body it receives.

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace socsim::testing {

class StubChatServer {
public:
    explicit StubChatServer(std::string path = "/v1/chat/completions") : path_(std::move(path)) {
        server_.Post(path_, [this](const httplib::Request& req, httplib::Response& res) {
            std::pair<int, std::string> r;
            {
                std::lock_guard lock(mu_);
                requests_.push_back(req.body);
                if (queue_.empty()) {
                    r = {200, completion(fallback_)};
                } else {
                    r = queue_.front();
                    queue_.pop_front();
                }
            }
            res.status = r.first;
            res.set_content(r.second, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    StubChatServer(const StubChatServer&) = delete;
    StubChatServer& operator=(const StubChatServer&) = delete;

    static std::string completion(const std::string& content) {
        nlohmann::json j = {{"id", "stub"},
                            {"object", "chat.completion"},
                            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
        return j.dump();
    }

    void reply(const std::string& content) { push(200, completion(content)); }
    void push(int status, std::string body) {
        std::lock_guard lock(mu_);
        queue_.emplace_back(status, std::move(body));
    }
    void set_fallback(std::string content) {
        std::lock_guard lock(mu_);
        fallback_ = std::move(content);
    }

    int port() const { return port_; }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + path_; }
    std::vector<std::string> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }
    std::size_t pending() const {
        std::lock_guard lock(mu_);
        return queue_.size();
    }

private:
    std::string path_;
    httplib::Server server_;
    int port_ = -1;
    std::thread thread_;
    mutable std::mutex mu_;
    std::deque<std::pair<int, std::string>> queue_;
    std::vector<std::string> requests_;
    std::string fallback_ = R"({"action":"idle"})";
};

}  // namespace socsim::testing
