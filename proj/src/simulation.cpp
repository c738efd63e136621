#include "socsim/simulation.hpp"

#include <fmt/format.h>

#include "socsim/llm_backend.hpp"

namespace socsim {

std::vector<const SurveySchedule*> surveys_due(const ScenarioSpec& scenario, int step) {
    std::vector<const SurveySchedule*> due;
    for (const auto& s : scenario.surveys) {
        const bool hit = (s.at.kind == SurveyTiming::Kind::pre && step == 0) ||
                         (s.at.kind == SurveyTiming::Kind::step && s.at.step == step) ||
                         (s.at.kind == SurveyTiming::Kind::post && step == scenario.total_steps());
        if (hit) due.push_back(&s);
    }
    return due;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string make_run_id(const ScenarioSpec& scenario, const std::string& policy, const std::string& backend) {
    const std::uint64_t h = derive_seed(fnv1a(scenario_hash(scenario) + "|" + policy + "|" + backend), scenario.seed, 0);
    return fmt::format("{}-{:016x}", scenario.name.empty() ? "run" : make_agent_id(scenario.name), h);
}

RunLog run_simulation(ScenarioSpec scenario, Backend& backend, const RunOptions& options) {
    if (options.seed) scenario.seed = *options.seed;

    std::optional<ScriptedResearcherPolicy> policy;
    std::string policy_name = "none";
    if (options.strategy) {
        const InterventionStrategy* s = scenario.find_strategy(*options.strategy);
        if (!s) throw std::invalid_argument("unknown strategy '" + *options.strategy + "'");
        if (!scenario.researcher) throw std::invalid_argument("strategy given but the scenario has no researcher");
        policy.emplace(scenario, *s);
        policy_name = s->id;
    }

    const Engine engine(scenario, build_scenario_population(scenario), options.exec);
    RunLog log;
    auto init = engine.init_world();
    WorldState world = std::move(init.world);
    log.events = std::move(init.events);

    const std::string run_id = make_run_id(scenario, policy_name, backend.identity());
    std::string label = policy_name;
    if (options.strategy) label = scenario.find_strategy(*options.strategy)->label;
    log.events.push_back(Event{world.next_seq++, 0,
                               SystemPayload{"run_info", Json{{"run_id", run_id},
                                                              {"backend", backend.identity()},
                                                              {"policy", policy_name},
                                                              {"strategy_label", label},
                                                              {"prompt_version", kPromptVersion}}}});

    auto survey = [&](int step) {
        for (const auto* s : surveys_due(scenario, step)) {
            auto round = administer_survey(*s, world, engine, backend);
            for (auto& e : round.events) log.events.push_back(std::move(e));
        }
    };

    try {
        survey(0);
        while (world.step < world.total_steps) {
            const auto human = policy ? policy->actions(world) : std::vector<Action>{};
            auto r = engine.run_step(world, backend, human);
            world = std::move(r.world);
            for (auto& e : r.events) log.events.push_back(std::move(e));
            survey(world.step);
        }
    } catch (const StepError& e) {
        log.events.push_back(e.error_event());
        world.next_seq = e.error_event().seq + 1;
        log.ok = false;
        log.error = e.what();
    } catch (const BackendError& e) {
        log.ok = false;
        log.error = e.what();
    }

    log.final_world = world;
    log.manifest = Json{{"run_id", run_id},
                        {"scenario", scenario.name},
                        {"scenario_hash", scenario_hash(scenario)},
                        {"seed", scenario.seed},
                        {"backend", backend.identity()},
                        {"policy", policy_name},
                        {"prompt_version", kPromptVersion},
                        {"exec", options.exec == ExecPolicy::parallel ? "parallel" : "serial"},
                        {"steps_completed", world.step},
                        {"total_steps", world.total_steps},
                        {"events", log.events.size()},
                        {"status", log.ok ? "complete" : "failed"}};
    if (!log.ok) log.manifest["error"] = log.error;
    return log;
}

}  // namespace socsim
