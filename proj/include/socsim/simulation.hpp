#pragma once

// Headless runs: world init, surveys at their scheduled points, the scripted
// researcher policy, and a manifest describing what produced the log.

#include <optional>
#include <string>
#include <vector>

#include "socsim/engine.hpp"
#include "socsim/intervention.hpp"

namespace socsim {

struct RunOptions {
    std::optional<std::string> strategy;  ///< id of a scenario strategy; nullopt: researcher stays silent
    ExecPolicy exec = ExecPolicy::parallel;
    std::optional<std::uint64_t> seed;  ///< overrides the scenario seed
};

struct RunLog {
    Json manifest;
    std::vector<Event> events;
    WorldState final_world;
    bool ok = true;
    std::string error;  ///< set when !ok; events then hold the partial log
};

/// Surveys scheduled right after world state `step` (0 = pre surveys).
std::vector<const SurveySchedule*> surveys_due(const ScenarioSpec& scenario, int step);

/// Deterministic run identifier derived from scenario hash, seed, policy and backend.
std::string make_run_id(const ScenarioSpec& scenario, const std::string& policy, const std::string& backend);

/// Runs the whole schedule. Backend failures end the run early with ok = false;
/// invalid options (unknown strategy) throw std::invalid_argument.
RunLog run_simulation(ScenarioSpec scenario, Backend& backend, const RunOptions& options = {});

}  // namespace socsim
