#pragma once

// Local HTTP service around one live session. A single run-loop thread owns the
// world; handlers only read snapshots of the log or enqueue commands.
// Endpoint schemas: docs/service_api.md.

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "socsim/simulation.hpp"

namespace httplib {
class Server;
}

namespace socsim {

enum class SessionMode { headless, interactive, replay };
std::string_view to_string(SessionMode m);

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 0;  ///< 0: pick a free port
    SessionMode mode = SessionMode::interactive;
    ExecPolicy exec = ExecPolicy::parallel;
    std::optional<std::string> strategy;  ///< scripted researcher policy (headless mode)
};

class ServiceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Service {
public:
    /// Live session. Throws ServiceError for an interactive session without a
    /// researcher or an unknown strategy.
    Service(ScenarioSpec scenario, std::unique_ptr<Backend> backend, ServiceOptions options);
    /// Read-only session over a recorded log.
    Service(std::vector<Event> log, ServiceOptions options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts serving in the background; returns the bound port.
    /// Throws ServiceError when the address cannot be bound.
    int start();
    void stop();
    /// Blocks until stop() is called from elsewhere (or a signal handler).
    void wait();

    // Direct access used by the HTTP handlers and by tests.
    Json status() const;
    std::vector<Event> events_since(std::uint64_t from) const;
    /// Waits until an event with seq >= from exists, the session ends, or the timeout passes.
    bool wait_for_events(std::uint64_t from, std::chrono::milliseconds timeout) const;

    /// Queues a researcher action for the next step. Returns an error message
    /// (and HTTP-ish status) when rejected.
    struct Rejection {
        int status;
        std::string message;
    };
    std::optional<Rejection> submit_action(Action action);
    std::optional<Rejection> control(const Json& command);
    std::optional<Rejection> trigger_survey(const std::string& survey_id);
    std::optional<Rejection> trigger_injection(const InjectionPayload& injection);
    /// Blocks until every command queued so far has been processed.
    void sync() const;

private:
    void run_loop();
    void post(std::function<void()> fn);
    void advance_one();
    void append(std::vector<Event> events);
    void install_routes();

    ScenarioSpec scenario_;
    std::unique_ptr<Backend> backend_;
    ServiceOptions options_;
    std::unique_ptr<Engine> engine_;
    std::optional<ScriptedResearcherPolicy> policy_;
    std::string run_id_;

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;          ///< new events / state changes
    std::condition_variable cmd_cv_;
    std::deque<std::function<void()>> commands_;
    std::uint64_t commands_posted_ = 0;
    std::uint64_t commands_done_ = 0;
    std::vector<Event> events_;
    WorldState world_;
    std::vector<Action> pending_actions_;
    bool paused_ = true;
    double auto_rate_ = 0.0;  ///< steps per second while auto-running
    bool finished_ = false;
    bool failed_ = false;
    std::string error_;
    int clients_ = 0;
    bool stopping_ = false;

    std::unique_ptr<httplib::Server> server_;
    std::thread loop_thread_;
    std::thread http_thread_;
};

}  // namespace socsim
