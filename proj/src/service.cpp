#include "socsim/service.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <httplib.h>

#include "socsim/boundary.hpp"
#include "socsim/llm_backend.hpp"
#include "socsim/metrics.hpp"

namespace socsim {

std::string_view to_string(SessionMode m) {
    switch (m) {
        case SessionMode::headless: return "headless";
        case SessionMode::interactive: return "interactive";
        case SessionMode::replay: return "replay";
    }
    return "?";
}

Service::Service(ScenarioSpec scenario, std::unique_ptr<Backend> backend, ServiceOptions options)
    : scenario_(std::move(scenario)), backend_(std::move(backend)), options_(std::move(options)) {
    if (options_.mode == SessionMode::replay) throw ServiceError("replay sessions are built from a log");
    if (options_.mode == SessionMode::interactive && !scenario_.researcher) {
        throw ServiceError("interactive mode needs a scenario with a researcher");
    }
    std::string policy_name = "none";
    std::string label = "none";
    if (options_.strategy) {
        const InterventionStrategy* s = scenario_.find_strategy(*options_.strategy);
        if (!s) throw ServiceError("unknown strategy '" + *options_.strategy + "'");
        if (!scenario_.researcher) throw ServiceError("strategy given but the scenario has no researcher");
        policy_.emplace(scenario_, *s);
        policy_name = s->id;
        label = s->label;
    } else if (options_.mode == SessionMode::interactive) {
        policy_name = label = "manual";
    }
    engine_ = std::make_unique<Engine>(scenario_, build_scenario_population(scenario_), options_.exec);
    auto init = engine_->init_world();
    world_ = std::move(init.world);
    events_ = std::move(init.events);
    run_id_ = make_run_id(scenario_, policy_name, backend_->identity());
    events_.push_back(Event{world_.next_seq++, 0,
                            SystemPayload{"run_info", Json{{"run_id", run_id_},
                                                           {"backend", backend_->identity()},
                                                           {"policy", policy_name},
                                                           {"strategy_label", label},
                                                           {"prompt_version", kPromptVersion},
                                                           {"mode", to_string(options_.mode)}}}});
    for (const auto* s : surveys_due(scenario_, 0)) {
        auto round = administer_survey(*s, world_, *engine_, *backend_);
        for (auto& e : round.events) events_.push_back(std::move(e));
    }
}

Service::Service(std::vector<Event> log, ServiceOptions options) : options_(std::move(options)) {
    options_.mode = SessionMode::replay;
    world_ = replay(log);
    events_ = std::move(log);
    finished_ = true;
    for (const auto& e : events_) {
        if (const auto* s = e.system("run_info")) run_id_ = s->data.value("run_id", "");
    }
}

Service::~Service() { stop(); }

Json Service::status() const {
    std::lock_guard lock(mu_);
    return Json{{"run_id", run_id_},
                {"mode", to_string(options_.mode)},
                {"step", world_.step},
                {"total_steps", world_.total_steps},
                {"phase", world_.phase},
                {"researcher_mode", to_string(world_.researcher_mode)},
                {"paused", paused_ || auto_rate_ <= 0.0},
                {"auto_rate", auto_rate_},
                {"finished", finished_},
                {"failed", failed_},
                {"error", error_},
                {"pending_actions", pending_actions_.size()},
                {"events", events_.size()},
                {"clients", clients_}};
}

std::vector<Event> Service::events_since(std::uint64_t from) const {
    std::lock_guard lock(mu_);
    if (from >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

bool Service::wait_for_events(std::uint64_t from, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return events_.size() > from || finished_ || stopping_; }) &&
           events_.size() > from;
}

void Service::append(std::vector<Event> events) {
    {
        std::lock_guard lock(mu_);
        for (auto& e : events) events_.push_back(std::move(e));
    }
    cv_.notify_all();
}

void Service::post(std::function<void()> fn) {
    {
        std::lock_guard lock(mu_);
        commands_.push_back(std::move(fn));
        ++commands_posted_;
    }
    cmd_cv_.notify_all();
}

void Service::sync() const {
    std::unique_lock lock(mu_);
    const auto target = commands_posted_;
    cv_.wait(lock, [&] { return commands_done_ >= target || stopping_; });
}

// Runs on the loop thread only.
void Service::advance_one() {
    WorldState world;
    std::vector<Action> human;
    {
        std::lock_guard lock(mu_);
        if (finished_ || failed_) return;
        world = world_;
        human = std::move(pending_actions_);
        pending_actions_.clear();
    }
    if (policy_) {
        auto scripted = policy_->actions(world);
        human.insert(human.begin(), scripted.begin(), scripted.end());
    }
    std::vector<Event> out;
    bool failed = false;
    std::string error;
    try {
        auto r = engine_->run_step(world, *backend_, human);
        world = std::move(r.world);
        out = std::move(r.events);
        for (const auto* s : surveys_due(scenario_, world.step)) {
            auto round = administer_survey(*s, world, *engine_, *backend_);
            for (auto& e : round.events) out.push_back(std::move(e));
        }
    } catch (const StepError& e) {
        out.push_back(e.error_event());
        world.next_seq = e.error_event().seq + 1;
        failed = true;
        error = e.what();
    } catch (const std::exception& e) {
        failed = true;
        error = e.what();
    }
    {
        std::lock_guard lock(mu_);
        for (auto& e : out) events_.push_back(std::move(e));
        world_ = std::move(world);
        if (failed) {
            failed_ = true;
            error_ = error;
            paused_ = true;
        }
        if (world_.step >= world_.total_steps) finished_ = true;
    }
    cv_.notify_all();
}

void Service::run_loop() {
    using clock = std::chrono::steady_clock;
    auto next_tick = clock::now();
    std::unique_lock lock(mu_);
    while (!stopping_) {
        const bool auto_run = !paused_ && auto_rate_ > 0.0 && !finished_ && !failed_;
        if (commands_.empty()) {
            if (auto_run) {
                cmd_cv_.wait_until(lock, next_tick, [&] { return stopping_ || !commands_.empty(); });
            } else {
                cmd_cv_.wait(lock, [&] {
                    return stopping_ || !commands_.empty() || (!paused_ && auto_rate_ > 0.0 && !finished_ && !failed_);
                });
                next_tick = clock::now();
            }
        }
        if (stopping_) break;
        if (!commands_.empty()) {
            auto fn = std::move(commands_.front());
            commands_.pop_front();
            lock.unlock();
            fn();
            lock.lock();
            ++commands_done_;
            cv_.notify_all();
            continue;
        }
        if (!paused_ && auto_rate_ > 0.0 && clock::now() >= next_tick) {
            lock.unlock();
            advance_one();
            lock.lock();
            next_tick = clock::now() + std::chrono::duration_cast<clock::duration>(
                                           std::chrono::duration<double>(1.0 / auto_rate_));
        }
    }
}

std::optional<Service::Rejection> Service::submit_action(Action action) {
    if (options_.mode == SessionMode::replay) return Rejection{409, "replay sessions are read-only"};
    if (!scenario_.researcher) return Rejection{409, "scenario has no researcher"};
    action.actor = scenario_.researcher->id;
    if (action.kind == Action::Kind::idle) return Rejection{400, "idle is not a submittable action"};
    if (const auto err = check_action(action, engine_->view())) return Rejection{400, *err};
    std::lock_guard lock(mu_);
    if (finished_) return Rejection{409, "run has finished"};
    const int next = world_.step + 1;
    if (!world_.researcher && scenario_.researcher->enter_step != next) {
        return Rejection{409, fmt::format("researcher enters at step {}", scenario_.researcher->enter_step)};
    }
    const Phase* phase = scenario_.phases.phase_at(next);
    if (phase && phase->researcher_mode == ResearcherMode::observe && !action.gate_override) {
        return Rejection{409, fmt::format("phase '{}' is observe-only; resubmit with override to act anyway",
                                          phase->name)};
    }
    if (!(phase && phase->researcher_mode == ResearcherMode::observe)) action.gate_override = false;
    pending_actions_.push_back(std::move(action));
    return std::nullopt;
}

std::optional<Service::Rejection> Service::control(const Json& command) {
    if (options_.mode == SessionMode::replay) return Rejection{409, "replay sessions are read-only"};
    const auto cmd = command.value("command", std::string{});
    if (cmd == "step") {
        const int count = command.value("count", 1);
        if (count < 1) return Rejection{400, "count must be >= 1"};
        {
            std::lock_guard lock(mu_);
            if (finished_) return Rejection{409, "run has finished"};
            if (failed_) return Rejection{409, "run failed: " + error_};
        }
        for (int i = 0; i < count; ++i) post([this] { advance_one(); });
        return std::nullopt;
    }
    if (cmd == "auto_run") {
        const double rate = command.value("rate", 1.0);
        if (!(rate > 0.0)) return Rejection{400, "rate must be > 0"};
        {
            std::lock_guard lock(mu_);
            paused_ = false;
            auto_rate_ = rate;
        }
        cmd_cv_.notify_all();
        return std::nullopt;
    }
    if (cmd == "pause") {
        {
            std::lock_guard lock(mu_);
            paused_ = true;
            auto_rate_ = 0.0;
        }
        cmd_cv_.notify_all();
        return std::nullopt;
    }
    return Rejection{400, "unknown command '" + cmd + "'"};
}

std::optional<Service::Rejection> Service::trigger_survey(const std::string& survey_id) {
    if (options_.mode == SessionMode::replay) return Rejection{409, "replay sessions are read-only"};
    const auto it = std::find_if(scenario_.surveys.begin(), scenario_.surveys.end(),
                                 [&](const SurveySchedule& s) { return s.id == survey_id; });
    if (it == scenario_.surveys.end()) return Rejection{404, "unknown survey '" + survey_id + "'"};
    const SurveySchedule schedule = *it;
    post([this, schedule] {
        WorldState world;
        {
            std::lock_guard lock(mu_);
            world = world_;
        }
        auto round = administer_survey(schedule, world, *engine_, *backend_);
        {
            std::lock_guard lock(mu_);
            for (auto& e : round.events) events_.push_back(std::move(e));
            world_.next_seq = world.next_seq;
        }
        cv_.notify_all();
    });
    return std::nullopt;
}

std::optional<Service::Rejection> Service::trigger_injection(const InjectionPayload& injection) {
    if (options_.mode == SessionMode::replay) return Rejection{409, "replay sessions are read-only"};
    if (injection.description.empty()) return Rejection{400, "description must be non-empty"};
    if (injection.area && !scenario_.find_area(*injection.area)) {
        return Rejection{400, "unknown area '" + *injection.area + "'"};
    }
    {
        std::lock_guard lock(mu_);
        if (finished_) return Rejection{409, "run has finished"};
    }
    InjectionPayload payload = injection;
    payload.manual = true;
    post([this, payload] {
        std::lock_guard lock(mu_);
        events_.push_back(engine_->inject(world_, payload));
        cv_.notify_all();
    });
    return std::nullopt;
}

namespace {

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, Json{{"error", message}}, status);
}

int int_param(const httplib::Request& req, const char* name, int fallback) {
    if (!req.has_param(name)) return fallback;
    return std::stoi(req.get_param_value(name));
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        auto j = Json::parse(req.body.empty() ? std::string("{}") : req.body);
        if (!j.is_object()) throw std::invalid_argument("body must be a JSON object");
        return j;
    } catch (const std::exception& e) {
        send_error(res, 400, std::string("malformed JSON body: ") + e.what());
        return std::nullopt;
    }
}

Action action_from_json(const Json& j) {
    const auto kind = j.at("kind").get<std::string>();
    Action a;
    if (kind == "chat") {
        a = Action::chat("", j.at("target").get<std::string>(), j.at("text").get<std::string>());
    } else if (kind == "broadcast") {
        a = Action::broadcast("", j.at("text").get<std::string>());
    } else if (kind == "move") {
        a = Action::move("", j.at("area").get<std::string>());
    } else {
        throw std::invalid_argument("kind must be chat, broadcast or move");
    }
    if (j.contains("tag")) {
        const auto& t = j.at("tag");
        a.tag = PersuasionTag{enum_from_string<Orientation>(t.at("orientation").get<std::string>()),
                              enum_from_string<Style>(t.at("style").get<std::string>())};
    }
    a.gate_override = j.value("override", false);
    return a;
}

}  // namespace

void Service::install_routes() {
    auto& s = *server_;

    s.Get("/status", [this](const httplib::Request&, httplib::Response& res) { send_json(res, status()); });

    s.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
        const auto from = static_cast<std::uint64_t>(std::max(0, int_param(req, "from", 0)));
        const bool follow = !req.has_param("follow") || req.get_param_value("follow") != "0";
        if (!follow) {
            std::string body;
            for (const auto& e : events_since(from)) body += serialize_event(e) + "\n";
            res.set_content(body, "application/x-ndjson");
            return;
        }
        {
            std::lock_guard lock(mu_);
            ++clients_;
        }
        auto cursor = std::make_shared<std::uint64_t>(from);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, cursor](std::size_t, httplib::DataSink& sink) {
                wait_for_events(*cursor, std::chrono::milliseconds(250));
                for (const auto& e : events_since(*cursor)) {
                    const auto chunk = fmt::format("id: {}\nevent: {}\ndata: {}\n\n", e.seq, to_string(e.kind()),
                                                   serialize_event(e));
                    if (!sink.write(chunk.data(), chunk.size())) return false;
                    *cursor = e.seq + 1;
                }
                bool done = false;
                {
                    std::lock_guard lock(mu_);
                    if (stopping_) return false;
                    done = finished_ && *cursor >= events_.size();
                }
                if (done) sink.done();
                return true;
            },
            [this](bool) {
                std::lock_guard lock(mu_);
                --clients_;
            });
    });

    s.Post("/action", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        Action a;
        try {
            a = action_from_json(*body);
        } catch (const std::exception& e) {
            return send_error(res, 400, e.what());
        }
        if (const auto r = submit_action(std::move(a))) return send_error(res, r->status, r->message);
        std::lock_guard lock(mu_);
        send_json(res, Json{{"queued", true}, {"apply_at_step", world_.step + 1}}, 202);
    });

    s.Post("/control", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        if (const auto r = control(*body)) return send_error(res, r->status, r->message);
        if (body->value("wait", false)) sync();
        send_json(res, status(), 202);
    });

    s.Post("/survey/trigger", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        if (const auto r = trigger_survey(body->value("survey", std::string{}))) {
            return send_error(res, r->status, r->message);
        }
        send_json(res, Json{{"queued", true}}, 202);
    });

    s.Post("/injection", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        InjectionPayload inj;
        inj.description = body->value("description", std::string{});
        if (body->contains("area") && !(*body)["area"].is_null()) inj.area = (*body)["area"].get<std::string>();
        if (const auto r = trigger_injection(inj)) return send_error(res, r->status, r->message);
        send_json(res, Json{{"queued", true}}, 202);
    });

    auto analytics = [this](const char* path, std::function<Json(const httplib::Request&, const std::vector<Event>&)> fn) {
        server_->Get(path, [this, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                send_json(res, fn(req, events_since(0)));
            } catch (const std::exception& e) {
                send_error(res, 400, e.what());
            }
        });
    };

    analytics("/analytics/matrix", [](const httplib::Request&, const std::vector<Event>& log) {
        const auto m = interaction_matrix(log, grouping_from_log(log));
        return Json{{"groups", m.groups}, {"counts", m.counts}};
    });
    analytics("/analytics/emotions", [](const httplib::Request& req, const std::vector<Event>& log) {
        const auto g = emotion_trajectories(log, grouping_from_log(log), int_param(req, "smoothing", 1));
        return Json{{"groups", g.groups}, {"values", g.values}};
    });
    analytics("/analytics/participation", [](const httplib::Request& req, const std::vector<Event>& log) {
        std::string rid;
        for (const auto& e : log) {
            if (const auto* s = e.system("world_init")) rid = s->data.value("researcher_id", "");
        }
        const auto scope = req.has_param("scope") && req.get_param_value("scope") == "broadcasts_anywhere"
                               ? ReplyScope::broadcasts_anywhere
                               : ReplyScope::same_area;
        Json windows = Json::array();
        for (const auto& w : participation_series(log, rid, int_param(req, "window", 5), scope)) {
            windows.push_back(Json{{"start", w.start_step}, {"end", w.end_step}, {"count", w.count}});
        }
        return Json{{"researcher", rid}, {"windows", windows}};
    });
    auto window_of = [](const httplib::Request& req, const std::vector<Event>& log) {
        int last = 0;
        for (const auto& e : log) last = std::max(last, e.step);
        return std::pair{int_param(req, "from", std::min(1, last)), int_param(req, "to", last)};
    };
    analytics("/analytics/graph", [window_of](const httplib::Request& req, const std::vector<Event>& log) {
        const auto [from, to] = window_of(req, log);
        return to_json(build_graph(log, from, to));
    });
    analytics("/analytics/cliques", [window_of](const httplib::Request& req, const std::vector<Event>& log) {
        const auto [from, to] = window_of(req, log);
        return Json{{"window", {from, to}},
                    {"cliques", detect_cliques(build_graph(log, from, to), int_param(req, "min_weight", 3))}};
    });
    analytics("/analytics/centrality", [](const httplib::Request& req, const std::vector<Event>& log) {
        const auto c = centrality_series(log, int_param(req, "window", 5));
        return Json{{"windows", c.windows}, {"values", c.values}};
    });
    analytics("/analytics/anchors", [this](const httplib::Request& req, const std::vector<Event>& log) {
        std::vector<std::string> terms = scenario_.anchor_terms;
        if (req.has_param("terms")) {
            terms.clear();
            std::string all = req.get_param_value("terms");
            for (std::size_t pos = 0; pos <= all.size();) {
                const auto comma = std::min(all.find(',', pos), all.size());
                if (comma > pos) terms.push_back(all.substr(pos, comma - pos));
                pos = comma + 1;
            }
        }
        Json out = Json::array();
        for (const auto& a : anchor_echoes(log, terms, int_param(req, "window", 5))) {
            Json w = Json::array();
            for (const auto& x : a.windows) {
                w.push_back(Json{{"start", x.start_step}, {"end", x.end_step}, {"mentions", x.mentions},
                                 {"speakers", x.speakers}});
            }
            out.push_back(Json{{"term", a.term},
                               {"first_speaker", a.first_speaker ? Json(*a.first_speaker) : Json(nullptr)},
                               {"first_step", a.first_step ? Json(*a.first_step) : Json(nullptr)},
                               {"windows", w}});
        }
        return out;
    });

    s.Get("/survey-table", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(survey_table_csv(survey_rows(events_since(0))), "text/csv");
    });
}

int Service::start() {
    if (server_) throw ServiceError("service already started");
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    int port = options_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(options_.host);
    } else if (!server_->bind_to_port(options_.host, port)) {
        port = -1;
    }
    if (port < 0) {
        server_.reset();
        throw ServiceError(fmt::format("cannot bind {}:{}", options_.host, options_.port));
    }
    http_thread_ = std::thread([this] { server_->listen_after_bind(); });
    loop_thread_ = std::thread([this] { run_loop(); });
    server_->wait_until_ready();
    return port;
}

void Service::stop() {
    {
        std::lock_guard lock(mu_);
        if (stopping_ && !loop_thread_.joinable() && !http_thread_.joinable()) return;
        stopping_ = true;
    }
    cmd_cv_.notify_all();
    cv_.notify_all();
    if (server_) server_->stop();
    if (http_thread_.joinable()) http_thread_.join();
    if (loop_thread_.joinable()) loop_thread_.join();
}

void Service::wait() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return stopping_; });
}

}  // namespace socsim
