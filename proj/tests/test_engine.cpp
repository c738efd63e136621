#include <doctest.h>

#include <algorithm>

#include "socsim/scripted_backend.hpp"
#include "socsim/simulation.hpp"
#include "support.hpp"

using namespace socsim;

namespace {

ScenarioSpec study(const char* name) { return load_scenario(test_support::scenario_path(name)); }

// Scripted cognition that fails once a chosen step is reached.
class FailingBackend final : public Backend {
public:
    FailingBackend(const ScenarioSpec& s, int fail_at) : inner_(s), fail_at_(fail_at) {}
    Decision decide_action(const AgentContext& ctx, Rng& rng) override {
        if (ctx.observation.step == fail_at_) throw BackendError("upstream unavailable");
        return inner_.decide_action(ctx, rng);
    }
    EmotionReport report_emotion(const AgentContext& ctx) override { return inner_.report_emotion(ctx); }
    SurveyResponse answer_survey(const AgentContext& ctx, const Questionnaire& q) override {
        return inner_.answer_survey(ctx, q);
    }
    std::string summarize(const AgentContext& ctx) override { return inner_.summarize(ctx); }
    std::string identity() const override { return "failing"; }

private:
    ScriptedBackend inner_;
    int fail_at_;
};

std::vector<Event> run_steps(const Engine& engine, Backend& backend, WorldState& world, int steps,
                             std::vector<WorldState>* history = nullptr) {
    std::vector<Event> log;
    for (int i = 0; i < steps; ++i) {
        auto r = engine.run_step(world, backend, {});
        log.insert(log.end(), r.events.begin(), r.events.end());
        world = std::move(r.world);
        if (history) history->push_back(world);
    }
    return log;
}

}  // namespace

TEST_CASE("init_world") {
    SUBCASE("study2 places ten agents and the researcher") {
        const auto s = study("study2");
        Engine engine(s, build_scenario_population(s));
        const auto init = engine.init_world();
        int agents = 0, human = 0;
        for (const auto& e : init.events) {
            if (const auto* p = e.system("placement")) {
                (p->data.at("human").get<bool>() ? human : agents) += 1;
                if (p->data.at("human").get<bool>()) CHECK(p->data.dump().find("temporary worker") != std::string::npos);
            }
        }
        CHECK(agents == 10);
        CHECK(human == 1);
        CHECK(init.world.researcher.has_value());
        CHECK(init.world.step == 0);
        for (const auto& [id, a] : init.world.agents) {
            CHECK(a.valence == 0.0);
            CHECK(s.find_area(a.area) != nullptr);
        }
    }
    SUBCASE("study1 has no researcher before its entry step") {
        const auto s = study("study1");
        Engine engine(s, build_scenario_population(s));
        const auto init = engine.init_world();
        CHECK(init.world.agents.size() == 30);
        CHECK_FALSE(init.world.researcher.has_value());
        ScriptedBackend b(s);
        const auto r = engine.run_step(init.world, b, {});
        CHECK(r.world.researcher.has_value());
    }
    SUBCASE("mismatched agents") {
        const auto s = study("study2");
        CHECK_THROWS_AS(Engine(s, {}), EngineError);
    }
}

TEST_CASE("perception and actions") {
    auto s = study("study2");
    Engine engine(s, build_scenario_population(s));
    ScriptedBackend backend(s);
    auto world = engine.init_world().world;
    const std::string target = world.agents.begin()->first;

    const std::vector<Action> human{Action::chat("researcher", target, "How long have you worked here?"),
                                    Action::broadcast("researcher", "Good morning everyone")};
    auto r = engine.run_step(world, backend, human);
    bool saw_chat = false;
    for (const auto& e : r.events) {
        if (const auto* u = e.as<UtterancePayload>(); u && u->actor == "researcher" && u->target == target) saw_chat = true;
    }
    CHECK(saw_chat);

    // the broadcast reaches everyone, wherever they stand
    for (const auto& [id, a] : r.world.agents) {
        const auto obs = engine.perceive(r.world, id);
        bool heard = false;
        for (const auto& h : obs.utterances) heard |= h.text == "Good morning everyone";
        CHECK(heard);
    }
    CHECK_THROWS_AS(engine.perceive(r.world, "nobody"), std::invalid_argument);

    // global injection reaches every observation
    auto w2 = r.world;
    engine.inject(w2, InjectionPayload{"The lights flicker.", std::nullopt, true});
    for (const auto& [id, a] : w2.agents) {
        const auto obs = engine.perceive(w2, id);
        CHECK(std::find(obs.injections.begin(), obs.injections.end(), "The lights flicker.") != obs.injections.end());
    }

    // human actions must come from the researcher
    CHECK_THROWS_AS(engine.run_step(world, backend, std::vector<Action>{Action::broadcast(target, "hi")}),
                    std::invalid_argument);
}

TEST_CASE("perception locality over a full run") {
    auto s = study("study2");
    Engine engine(s, build_scenario_population(s));
    ScriptedBackend backend(s);
    auto world = engine.init_world().world;
    for (int t = 0; t < 40; ++t) {
        auto r = engine.run_step(world, backend, {});
        world = std::move(r.world);
        for (const auto& [id, a] : world.agents) {
            const auto obs = engine.perceive(world, id);
            for (const auto& h : obs.utterances) {
                const auto it = std::find_if(world.last_utterances.begin(), world.last_utterances.end(),
                                             [&](const UtterancePayload& u) { return u.actor == h.speaker && u.text == h.text; });
                REQUIRE(it != world.last_utterances.end());
                CHECK((it->broadcast() || it->area == a.area));
            }
            CHECK(a.memory.recent.size() <= static_cast<std::size_t>(s.memory.window));
            CHECK(a.valence >= -1.0);
            CHECK(a.valence <= 1.0);
        }
    }
}

TEST_CASE("determinism, exec policies and phase changes") {
    auto s = study("study2");
    ScriptedBackend b1(s), b2(s), b3(s);
    const auto ser = run_simulation(s, b1, RunOptions{"interview", ExecPolicy::serial, std::nullopt});
    const auto par = run_simulation(s, b2, RunOptions{"interview", ExecPolicy::parallel, std::nullopt});
    const auto again = run_simulation(s, b3, RunOptions{"interview", ExecPolicy::parallel, std::nullopt});
    CHECK(serialize_events(ser.events) == serialize_events(par.events));
    CHECK(serialize_events(par.events) == serialize_events(again.events));
    CHECK(ser.final_world == par.final_world);

    std::vector<int> changes;
    for (const auto& e : par.events) {
        if (const auto* p = e.as<PhaseChangePayload>()) {
            changes.push_back(e.step);
            if (e.step == 26) CHECK(p->phase == "Participatory Interaction");
        }
    }
    // the opening phase is set at init
    CHECK(changes == std::vector<int>{26, 51});

    // seq strictly increasing, steps non-decreasing
    for (std::size_t i = 1; i < par.events.size(); ++i) {
        CHECK(par.events[i].seq == par.events[i - 1].seq + 1);
        CHECK(par.events[i].step >= par.events[i - 1].step);
    }
}

TEST_CASE("replay") {
    auto s = study("study2");
    Engine engine(s, build_scenario_population(s));
    ScriptedBackend backend(s);
    auto init = engine.init_world();
    auto world = init.world;
    std::vector<WorldState> history;
    auto log = init.events;
    const auto steps = run_steps(engine, backend, world, 30, &history);
    log.insert(log.end(), steps.begin(), steps.end());

    CHECK(replay(log) == world);

    // truncated after step 12
    std::vector<Event> prefix;
    for (const auto& e : log) {
        prefix.push_back(e);
        if (e.step == 12 && e.system("step_complete")) break;
    }
    CHECK(replay(prefix) == history[11]);

    auto gap = log;
    gap.erase(gap.begin() + 50);
    CHECK_THROWS_WITH_AS(replay(gap), doctest::Contains("50"), LogError);

    // a full run including surveys and the scripted researcher
    ScriptedBackend b2(s);
    const auto run = run_simulation(s, b2, RunOptions{"interview", ExecPolicy::parallel, std::nullopt});
    CHECK(replay(run.events) == run.final_world);
    CHECK(replay(parse_events(serialize_events(run.events))) == run.final_world);
}

TEST_CASE("failed steps are atomic") {
    auto s = study("study2");
    Engine engine(s, build_scenario_population(s));
    FailingBackend backend(s, 5);
    auto world = engine.init_world().world;
    run_steps(engine, backend, world, 4);
    const auto before = world;
    try {
        engine.run_step(world, backend, {});
        FAIL("expected a StepError");
    } catch (const StepError& e) {
        CHECK(e.error_event().system("step_failed") != nullptr);
        CHECK(e.error_event().seq == world.next_seq);
    }
    CHECK(world == before);

    FailingBackend b2(s, 10);
    const auto run = run_simulation(s, b2, RunOptions{});
    CHECK_FALSE(run.ok);
    CHECK(run.final_world.step == 9);
    CHECK(run.events.back().system("step_failed") != nullptr);
    CHECK(replay(run.events) == run.final_world);
    CHECK(run.manifest.at("status") == "failed");
}

TEST_CASE("study2 without a researcher policy") {
    auto s = study("study2");
    ScriptedBackend b(s);
    const auto run = run_simulation(s, b, RunOptions{});
    CHECK(run.ok);
    CHECK(run.final_world.step == 75);
    int injections = 0;
    for (const auto& e : run.events) {
        if (const auto* u = e.as<UtterancePayload>()) CHECK(u->actor != "researcher");
        if (e.as<InjectionPayload>()) {
            ++injections;
            CHECK(e.step >= 51);
        }
    }
    CHECK(injections >= 1);
}

TEST_CASE("zero-step scenario") {
    auto s = study("study2");
    s.phases.phases.clear();
    s.injections.clear();
    s.surveys.clear();
    s.researcher.reset();
    s.strategies.clear();
    ScriptedBackend b(s);
    const auto run = run_simulation(s, b, RunOptions{});
    CHECK(run.ok);
    for (const auto& e : run.events) {
        const auto* sys = e.as<SystemPayload>();
        REQUIRE(sys != nullptr);
        CHECK((sys->what == "placement" || sys->what == "world_init" || sys->what == "run_info"));
    }
}

TEST_CASE("manifest") {
    auto s = study("study1");
    ScriptedBackend b(s);
    const auto run = run_simulation(s, b, RunOptions{"env-rp", ExecPolicy::parallel, 7});
    auto seeded = s;
    seeded.seed = 7;
    CHECK(run.manifest.at("scenario_hash").get<std::string>() == scenario_hash(seeded));
    CHECK(run.manifest.at("seed") == 7);
    CHECK(run.manifest.at("backend") == "scripted");
    CHECK(run.manifest.at("policy") == "env-rp");
    CHECK(run.manifest.at("status") == "complete");
    ScriptedBackend b2(s);
    CHECK_THROWS_AS(run_simulation(s, b2, RunOptions{"nope", ExecPolicy::parallel, std::nullopt}), std::invalid_argument);
}
