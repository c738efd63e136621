#pragma once

// The discrete-time world. A single writer advances WorldState one step at a
// time; everything that changes it is written to an append-only event log, and
// replay() rebuilds the state from that log alone.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socsim/backend.hpp"
#include "socsim/event.hpp"
#include "socsim/exec.hpp"
#include "socsim/population.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

struct AgentState {
    AgentProfile profile;
    std::string area;
    double valence = 0.0;
    Memory memory;
    std::optional<Action> last_action;
    std::string cognition;
    bool human_controlled = false;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldState {
    int step = 0;
    int total_steps = 0;
    std::string phase;
    ResearcherMode researcher_mode = ResearcherMode::observe;
    std::map<std::string, AgentState> agents;  ///< ordered by agent id
    std::optional<AgentState> researcher;
    std::vector<InjectionPayload> pending_injections;
    std::vector<UtterancePayload> last_utterances;  ///< spoken during `step`
    std::uint64_t seed = 0;
    std::uint64_t next_seq = 0;
    int memory_window = 20;

    const AgentState* participant(const std::string& id) const;

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct StepResult {
    WorldState world;
    std::vector<Event> events;
};

/// A step that could not complete. The world passed to run_step is untouched;
/// `error_event` (a step_failed system record) is ready to append to the log.
class StepError : public BackendError {
public:
    StepError(const std::string& what, Event error_event)
        : BackendError(what), error_event_(std::move(error_event)) {}
    const Event& error_event() const { return error_event_; }

private:
    Event error_event_;
};

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Engine {
public:
    /// Throws EngineError when `agents` does not match the scenario population.
    Engine(ScenarioSpec scenario, std::vector<AgentProfile> agents, ExecPolicy exec = ExecPolicy::parallel);

    const ScenarioSpec& scenario() const { return scenario_; }
    const std::vector<AgentProfile>& agents() const { return agents_; }
    const WorldView& view() const { return view_; }
    ExecPolicy exec() const { return exec_; }

    /// Step 0: agents placed, valence 0, researcher placed iff it enters at step 0.
    StepResult init_world() const;

    /// What `agent_id` perceives at the start of step world.step + 1.
    Observation perceive(const WorldState& world, const std::string& agent_id) const;

    /// Advances one step. human_actions must all be from the human-controlled researcher.
    StepResult run_step(const WorldState& world, Backend& backend, std::span<const Action> human_actions) const;

    /// Queues a console-triggered injection for the next step.
    Event inject(WorldState& world, const InjectionPayload& injection) const;

    AgentContext context(const WorldState& world, const AgentState& agent, const Observation& obs) const;

private:
    ScenarioSpec scenario_;
    std::vector<AgentProfile> agents_;
    WorldView view_;
    std::map<std::string, std::map<std::string, Attitude>> attitudes_;
    ExecPolicy exec_;
};

/// Rebuilds world state purely from events. Throws LogError on a seq gap
/// (naming the first gap) or an out-of-order step.
WorldState replay(std::span<const Event> log);

Json to_json(const WorldState& world);

}  // namespace socsim
