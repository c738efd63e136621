#include "socsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace socsim {

const AgentState* WorldState::participant(const std::string& id) const {
    if (const auto it = agents.find(id); it != agents.end()) return &it->second;
    if (researcher && researcher->profile.agent_id == id) return &*researcher;
    return nullptr;
}

namespace {

Json profile_json(const AgentProfile& p) {
    return Json{{"agent_id", p.agent_id},           {"display_name", p.display_name},
                {"group", p.group},                 {"gender", to_string(p.gender)},
                {"age_band", to_string(p.age_band)}, {"education", to_string(p.education)},
                {"persona_prompt", p.persona_prompt}, {"initial_area", p.initial_area}};
}

AgentProfile profile_from_json(const Json& j) {
    AgentProfile p;
    p.agent_id = j.at("agent_id").get<std::string>();
    p.display_name = j.at("display_name").get<std::string>();
    p.group = j.at("group").get<std::string>();
    p.gender = enum_from_string<Gender>(j.at("gender").get<std::string>());
    p.age_band = enum_from_string<AgeBand>(j.at("age_band").get<std::string>());
    p.education = enum_from_string<Education>(j.at("education").get<std::string>());
    p.persona_prompt = j.at("persona_prompt").get<std::string>();
    p.initial_area = j.at("initial_area").get<std::string>();
    return p;
}

AgentProfile researcher_profile(const ResearcherSpec& r) {
    AgentProfile p;
    p.agent_id = r.id;
    p.display_name = r.display_name;
    p.group = "Researcher";
    p.persona_prompt = r.role;
    p.initial_area = r.initial_area;
    return p;
}

std::vector<HeardUtterance> heard_in(const std::vector<UtterancePayload>& spoken, int spoken_step,
                                     const std::string& self, const std::string& area) {
    std::vector<HeardUtterance> heard;
    for (const auto& u : spoken) {
        if (u.actor == self) continue;
        if (!u.broadcast() && u.area != area) continue;
        heard.push_back({spoken_step, u.actor, u.target, u.text, u.tag});
    }
    return heard;
}

void absorb(Memory& memory, const std::vector<HeardUtterance>& heard, int window) {
    for (const auto& h : heard) memory.recent.push_back(h);
    while (static_cast<int>(memory.recent.size()) > window) memory.recent.pop_front();
}

/// Perception + memory update for every agent, shared by the live engine and replay.
void absorb_all(WorldState& world) {
    for (auto& [id, agent] : world.agents) {
        absorb(agent.memory, heard_in(world.last_utterances, world.step, id, agent.area), world.memory_window);
    }
}

Action normalized(const Action& a) {
    Action n;
    n.kind = a.kind;
    n.actor = a.actor;
    switch (a.kind) {
        case Action::Kind::chat:
            n.target = a.target;
            n.text = a.text;
            break;
        case Action::Kind::broadcast: n.text = a.text; break;
        case Action::Kind::move: n.area = a.area; break;
        case Action::Kind::idle: break;
    }
    if (a.kind == Action::Kind::chat || a.kind == Action::Kind::broadcast) {
        n.tag = a.tag;
        n.gate_override = a.gate_override;
    }
    return n;
}

class EventSink {
public:
    EventSink(std::uint64_t next_seq, std::vector<Event>& out) : seq_(next_seq), out_(out) {}
    void emit(int step, EventPayload payload) { out_.push_back(Event{seq_++, step, std::move(payload)}); }
    std::uint64_t next_seq() const { return seq_; }

private:
    std::uint64_t seq_;
    std::vector<Event>& out_;
};

/// Applies one action to `state` and logs it. `world_step` labels the event.
void apply_action(const Action& action, AgentState& state, int step, EventSink& sink,
                  std::vector<UtterancePayload>& spoken) {
    const Action a = normalized(action);
    switch (a.kind) {
        case Action::Kind::chat:
        case Action::Kind::broadcast: {
            UtterancePayload u;
            u.actor = a.actor;
            if (a.kind == Action::Kind::chat) u.target = a.target;
            u.text = a.text;
            u.area = state.area;
            u.tag = a.tag;
            u.gate_override = a.gate_override;
            spoken.push_back(u);
            sink.emit(step, std::move(u));
            break;
        }
        case Action::Kind::move:
            sink.emit(step, MovementPayload{a.actor, state.area, a.area});
            state.area = a.area;
            break;
        case Action::Kind::idle: break;
    }
    state.last_action = a;
}

template <typename Fn>
void for_each_index(std::size_t n, ExecPolicy exec, Fn&& fn) {
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (exec == ExecPolicy::parallel)
    for (long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace

Engine::Engine(ScenarioSpec scenario, std::vector<AgentProfile> agents, ExecPolicy exec)
    : scenario_(std::move(scenario)), agents_(std::move(agents)), exec_(exec) {
    const int expected = scenario_.population.total_size();
    if (static_cast<int>(agents_.size()) != expected) {
        throw EngineError(fmt::format("agent/scenario mismatch: scenario declares {} agents, got {}", expected,
                                      agents_.size()));
    }
    std::map<std::string, int> per_group;
    std::set<std::string> ids;
    for (const auto& a : agents_) {
        if (!scenario_.find_group(a.group)) throw EngineError("agent '" + a.agent_id + "' has unknown group");
        if (!scenario_.find_area(a.initial_area)) {
            throw EngineError("agent '" + a.agent_id + "' starts in unknown area '" + a.initial_area + "'");
        }
        if (!ids.insert(a.agent_id).second) throw EngineError("duplicate agent id '" + a.agent_id + "'");
        ++per_group[a.group];
    }
    for (const auto& g : scenario_.population.groups) {
        if (per_group[g.name] != g.group_size) {
            throw EngineError(fmt::format("agent/scenario mismatch: group '{}' expects {} agents, got {}", g.name,
                                          g.group_size, per_group[g.name]));
        }
    }
    if (scenario_.researcher && ids.count(scenario_.researcher->id)) {
        throw EngineError("researcher id collides with an agent id");
    }
    std::sort(agents_.begin(), agents_.end(),
              [](const AgentProfile& a, const AgentProfile& b) { return a.agent_id < b.agent_id; });

    view_.topic = scenario_.topic;
    for (const auto& a : scenario_.areas) view_.areas.push_back(a.name);
    for (const auto& a : agents_) view_.display_names[a.agent_id] = a.display_name;
    if (scenario_.researcher) {
        view_.researcher_id = scenario_.researcher->id;
        view_.display_names[scenario_.researcher->id] = scenario_.researcher->display_name;
    }
    for (const auto& a : agents_) attitudes_[a.agent_id];
    if (scenario_.relationships) {
        for (const auto& [key, attitude] : scenario_.relationships->entries) {
            if (ids.count(key.first)) attitudes_[key.first][key.second] = attitude;
        }
    }
}

StepResult Engine::init_world() const {
    StepResult r;
    WorldState& w = r.world;
    w.total_steps = scenario_.total_steps();
    w.seed = scenario_.seed;
    w.memory_window = scenario_.memory.window;
    if (const Phase* p = scenario_.phases.phase_at(1)) {
        w.phase = p->name;
        w.researcher_mode = p->researcher_mode;
    }
    Json presets = Json::object();
    for (const auto& g : scenario_.population.groups) presets[g.name] = g.preset_stance;
    EventSink sink(0, r.events);
    sink.emit(0, SystemPayload{"world_init",
                               Json{{"scenario", scenario_.name},
                                    {"scenario_hash", scenario_hash(scenario_)},
                                    {"topic", scenario_.topic},
                                    {"seed", scenario_.seed},
                                    {"total_steps", w.total_steps},
                                    {"phase", w.phase},
                                    {"researcher_mode", to_string(w.researcher_mode)},
                                    {"memory_window", scenario_.memory.window},
                                    {"summary_every", scenario_.memory.summary_every},
                                    {"researcher_id", view_.researcher_id},
                                    {"stance_scale", to_json(scenario_.stance_scale)},
                                    {"trust_scale", to_json(scenario_.trust_scale)},
                                    {"group_presets", presets}}});
    for (const auto& p : agents_) {
        AgentState s;
        s.profile = p;
        s.area = p.initial_area;
        sink.emit(0, SystemPayload{"placement", Json{{"agent", profile_json(p)}, {"area", s.area}, {"human", false}}});
        w.agents.emplace(p.agent_id, std::move(s));
    }
    if (scenario_.researcher && scenario_.researcher->enter_step == 0) {
        AgentState s;
        s.profile = researcher_profile(*scenario_.researcher);
        s.area = scenario_.researcher->initial_area;
        s.human_controlled = true;
        sink.emit(0, SystemPayload{"placement", Json{{"agent", profile_json(s.profile)}, {"area", s.area}, {"human", true}}});
        w.researcher = std::move(s);
    }
    w.next_seq = sink.next_seq();
    return r;
}

Observation Engine::perceive(const WorldState& world, const std::string& agent_id) const {
    const AgentState* self = world.participant(agent_id);
    if (!self) throw std::invalid_argument("unknown agent '" + agent_id + "'");
    Observation obs;
    obs.step = world.step + 1;
    obs.area = self->area;
    for (const auto& [id, a] : world.agents) {
        if (id != agent_id && a.area == self->area) obs.present.push_back(id);
    }
    if (world.researcher && world.researcher->profile.agent_id != agent_id && world.researcher->area == self->area) {
        obs.present.push_back(world.researcher->profile.agent_id);
        std::sort(obs.present.begin(), obs.present.end());
    }
    obs.utterances = heard_in(world.last_utterances, world.step, agent_id, self->area);
    for (const auto& inj : world.pending_injections) {
        if (!inj.area || *inj.area == self->area) obs.injections.push_back(inj.description);
    }
    obs.memory_digest = self->memory.digest();
    obs.valence = self->valence;
    obs.researcher_mode = world.researcher_mode;
    return obs;
}

AgentContext Engine::context(const WorldState&, const AgentState& agent, const Observation& obs) const {
    static const std::map<std::string, Attitude> kNone;
    const auto it = attitudes_.find(agent.profile.agent_id);
    return AgentContext{agent.profile, obs, agent.memory, agent.cognition,
                        it == attitudes_.end() ? kNone : it->second, view_};
}

Event Engine::inject(WorldState& world, const InjectionPayload& injection) const {
    if (injection.area && !scenario_.find_area(*injection.area)) {
        throw std::invalid_argument("unknown area '" + *injection.area + "'");
    }
    world.pending_injections.push_back(injection);
    return Event{world.next_seq++, world.step + 1, injection};
}

StepResult Engine::run_step(const WorldState& world, Backend& backend, std::span<const Action> human_actions) const {
    if (world.step >= world.total_steps) throw std::logic_error("run_step past the final step");
    const int t = world.step + 1;

    for (const auto& a : human_actions) {
        const bool researcher_acts = scenario_.researcher && a.actor == scenario_.researcher->id;
        const bool entering = scenario_.researcher && scenario_.researcher->enter_step == t;
        if (!researcher_acts || !(world.researcher || entering)) {
            throw std::invalid_argument("human action from non-human participant '" + a.actor + "'");
        }
        if (const auto err = check_action(a, view_)) throw std::invalid_argument("illegal human action: " + *err);
    }

    StepResult r;
    r.world = world;
    WorldState& next = r.world;
    EventSink sink(world.next_seq, r.events);
    sink.emit(t, SystemPayload{"step_begin", Json::object()});

    // Prelude: phase transition, scheduled injections, researcher entry.
    if (const Phase* p = scenario_.phases.phase_at(t); p && p->name != next.phase) {
        sink.emit(t, PhaseChangePayload{p->name, p->researcher_mode, next.phase});
        next.phase = p->name;
        next.researcher_mode = p->researcher_mode;
    }
    for (const auto& inj : scenario_.injections) {
        if (inj.step != t) continue;
        InjectionPayload payload{inj.description, inj.area, false};
        next.pending_injections.push_back(payload);
        sink.emit(t, std::move(payload));
    }
    if (scenario_.researcher && scenario_.researcher->enter_step == t && !next.researcher) {
        AgentState s;
        s.profile = researcher_profile(*scenario_.researcher);
        s.area = scenario_.researcher->initial_area;
        s.human_controlled = true;
        sink.emit(t, SystemPayload{"placement", Json{{"agent", profile_json(s.profile)}, {"area", s.area}, {"human", true}}});
        next.researcher = std::move(s);
    }

    // Perception is computed for everyone from the start-of-step state.
    std::vector<AgentState*> order;
    std::vector<Observation> observations;
    for (auto& [id, agent] : next.agents) {
        order.push_back(&agent);
        observations.push_back(perceive(next, id));
    }
    absorb_all(next);
    for (auto* a : order) a->last_action = Action::idle(a->profile.agent_id);
    if (next.researcher) next.researcher->last_action = Action::idle(next.researcher->profile.agent_id);

    const std::size_t n = order.size();
    std::vector<std::exception_ptr> errors(n);
    auto fail_first = [&](const char* stage) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!errors[i]) continue;
            std::string msg;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                msg = e.what();
            }
            const auto& id = order[i]->profile.agent_id;
            Event err{world.next_seq, t,
                      SystemPayload{"step_failed", Json{{"stage", stage}, {"agent", id}, {"error", msg}}}};
            throw StepError(fmt::format("step {} failed at {} for agent '{}': {}", t, stage, id, msg), std::move(err));
        }
    };

    std::vector<Decision> decisions(n);
    for_each_index(n, exec_, [&](std::size_t i) {
        try {
            Rng rng(derive_seed(next.seed, static_cast<std::uint64_t>(t), i));
            decisions[i] = backend.decide_action(context(next, *order[i], observations[i]), rng);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    fail_first("decide_action");

    std::vector<UtterancePayload> spoken;
    for (std::size_t i = 0; i < n; ++i) {
        AgentState& agent = *order[i];
        Decision& d = decisions[i];
        d.action.actor = agent.profile.agent_id;
        agent.cognition = d.cognition;
        for (const auto& diag : d.diagnostics) {
            sink.emit(t, SystemPayload{"parse_failure", Json{{"agent", agent.profile.agent_id}, {"detail", diag}}});
        }
        if (const auto err = check_action(d.action, view_)) {
            sink.emit(t, SystemPayload{"illegal_action", Json{{"agent", agent.profile.agent_id}, {"detail", *err}}});
            d.action = Action::idle(agent.profile.agent_id);
        }
        apply_action(d.action, agent, t, sink, spoken);
    }

    for (const auto& a : human_actions) {
        if (a.gate_override) {
            sink.emit(t, SystemPayload{"gate_override", Json{{"actor", a.actor}, {"phase", next.phase}}});
        }
        apply_action(a, *next.researcher, t, sink, spoken);
    }

    std::vector<EmotionReport> emotions(n);
    for_each_index(n, exec_, [&](std::size_t i) {
        try {
            emotions[i] = backend.report_emotion(context(next, *order[i], observations[i]));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    fail_first("report_emotion");
    for (std::size_t i = 0; i < n; ++i) {
        AgentState& agent = *order[i];
        EmotionReport& e = emotions[i];
        double v = e.valence;
        if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
            e.diagnostics.push_back(fmt::format("valence {} outside [-1, 1]", v));
            v = std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : agent.valence;
        }
        for (const auto& diag : e.diagnostics) {
            sink.emit(t, SystemPayload{"parse_failure", Json{{"agent", agent.profile.agent_id}, {"detail", diag}}});
        }
        agent.valence = v;
        agent.cognition = e.cognition;
        sink.emit(t, EmotionPayload{agent.profile.agent_id, v, agent.cognition});
    }

    if (t % scenario_.memory.summary_every == 0) {
        std::vector<std::string> summaries(n);
        for_each_index(n, exec_, [&](std::size_t i) {
            try {
                summaries[i] = backend.summarize(context(next, *order[i], observations[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        fail_first("summarize");
        for (std::size_t i = 0; i < n; ++i) {
            order[i]->memory.summary = summaries[i];
            sink.emit(t, SystemPayload{"memory_summary",
                                       Json{{"agent", order[i]->profile.agent_id}, {"text", summaries[i]}}});
        }
    }

    sink.emit(t, SystemPayload{"step_complete", Json::object()});
    next.step = t;
    next.last_utterances = std::move(spoken);
    next.pending_injections.clear();
    next.next_seq = sink.next_seq();
    return r;
}

WorldState replay(std::span<const Event> log) {
    WorldState w;
    bool in_step = false;
    bool perceived = true;
    std::vector<UtterancePayload> spoken;
    std::optional<std::uint64_t> prev_seq;
    int prev_step = 0;

    auto ensure_perceived = [&] {
        if (!perceived) {
            absorb_all(w);
            for (auto& [id, a] : w.agents) a.last_action = Action::idle(id);
            if (w.researcher) w.researcher->last_action = Action::idle(w.researcher->profile.agent_id);
            perceived = true;
        }
    };
    auto participant = [&](const std::string& id) -> AgentState& {
        if (const auto it = w.agents.find(id); it != w.agents.end()) return it->second;
        if (w.researcher && w.researcher->profile.agent_id == id) return *w.researcher;
        throw LogError("event references unknown participant '" + id + "'");
    };

    for (const Event& e : log) {
        if (prev_seq && e.seq != *prev_seq + 1) {
            throw LogError(fmt::format("seq gap: expected {} after {}, found {}", *prev_seq + 1, *prev_seq, e.seq));
        }
        if (!prev_seq && e.seq != 0) throw LogError(fmt::format("seq gap: log starts at {} instead of 0", e.seq));
        if (e.step < prev_step) throw LogError(fmt::format("step decreases at seq {}", e.seq));
        prev_seq = e.seq;
        prev_step = e.step;

        if (const auto* s = e.as<SystemPayload>()) {
            const Json& d = s->data;
            if (s->what == "world_init") {
                w.total_steps = d.at("total_steps").get<int>();
                w.seed = d.at("seed").get<std::uint64_t>();
                w.phase = d.at("phase").get<std::string>();
                w.researcher_mode = enum_from_string<ResearcherMode>(d.at("researcher_mode").get<std::string>());
                w.memory_window = d.at("memory_window").get<int>();
            } else if (s->what == "placement") {
                AgentState a;
                a.profile = profile_from_json(d.at("agent"));
                a.area = d.at("area").get<std::string>();
                a.human_controlled = d.at("human").get<bool>();
                if (a.human_controlled) {
                    w.researcher = std::move(a);
                } else {
                    const auto id = a.profile.agent_id;
                    w.agents.emplace(id, std::move(a));
                }
            } else if (s->what == "step_begin") {
                in_step = true;
                perceived = false;
                spoken.clear();
            } else if (s->what == "step_complete") {
                ensure_perceived();
                w.step = e.step;
                w.last_utterances = std::move(spoken);
                spoken.clear();
                w.pending_injections.clear();
                in_step = false;
            } else if (s->what == "memory_summary") {
                ensure_perceived();
                participant(d.at("agent").get<std::string>()).memory.summary = d.at("text").get<std::string>();
            } else if (s->what != "step_failed" && s->what != "run_info") {
                ensure_perceived();
            }
            continue;
        }
        if (const auto* p = e.as<PhaseChangePayload>()) {
            w.phase = p->phase;
            w.researcher_mode = p->researcher_mode;
            continue;
        }
        if (const auto* inj = e.as<InjectionPayload>()) {
            w.pending_injections.push_back(*inj);
            continue;
        }
        if (e.as<SurveyResponse>()) continue;

        ensure_perceived();
        if (!in_step) throw LogError(fmt::format("seq {}: world event outside a step", e.seq));
        if (const auto* u = e.as<UtterancePayload>()) {
            AgentState& a = participant(u->actor);
            Action act = u->target ? Action::chat(u->actor, *u->target, u->text) : Action::broadcast(u->actor, u->text);
            act.tag = u->tag;
            act.gate_override = u->gate_override;
            a.last_action = std::move(act);
            spoken.push_back(*u);
        } else if (const auto* m = e.as<MovementPayload>()) {
            AgentState& a = participant(m->actor);
            a.area = m->to;
            a.last_action = Action::move(m->actor, m->to);
        } else if (const auto* em = e.as<EmotionPayload>()) {
            AgentState& a = participant(em->agent);
            a.valence = em->valence;
            a.cognition = em->cognition;
        }
    }
    if (in_step) {
        // Truncated mid-step: keep what was said so far.
        w.last_utterances = std::move(spoken);
    }
    w.next_seq = prev_seq ? *prev_seq + 1 : 0;
    return w;
}

namespace {

Json action_json(const std::optional<Action>& a) {
    if (!a) return nullptr;
    Json j{{"kind", to_string(a->kind)}};
    if (a->kind == Action::Kind::chat) j["target"] = a->target;
    if (!a->text.empty()) j["text"] = a->text;
    if (a->kind == Action::Kind::move) j["area"] = a->area;
    return j;
}

Json agent_json(const AgentState& a) {
    Json memory = Json::array();
    for (const auto& h : a.memory.recent) {
        memory.push_back(Json{{"step", h.step}, {"speaker", h.speaker}, {"text", h.text}});
    }
    return Json{{"profile", profile_json(a.profile)},
                {"area", a.area},
                {"valence", a.valence},
                {"memory", memory},
                {"summary", a.memory.summary},
                {"last_action", action_json(a.last_action)},
                {"cognition", a.cognition},
                {"human", a.human_controlled}};
}

}  // namespace

Json to_json(const WorldState& world) {
    Json agents = Json::array();
    for (const auto& [id, a] : world.agents) agents.push_back(agent_json(a));
    Json pending = Json::array();
    for (const auto& p : world.pending_injections) pending.push_back(p.description);
    return Json{{"step", world.step},
                {"total_steps", world.total_steps},
                {"phase", world.phase},
                {"researcher_mode", to_string(world.researcher_mode)},
                {"seed", world.seed},
                {"next_seq", world.next_seq},
                {"agents", agents},
                {"researcher", world.researcher ? agent_json(*world.researcher) : Json(nullptr)},
                {"pending_injections", pending},
                {"last_utterances", world.last_utterances.size()}};
}

}  // namespace socsim
