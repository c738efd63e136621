#pragma once

// Scripted researcher policies and the questionnaire protocol.

#include <optional>
#include <string>
#include <vector>

#include "socsim/engine.hpp"

namespace socsim {

/// First step at which the researcher is both present and allowed to speak
/// (phase mode other than observe). nullopt when that never happens.
std::optional<int> first_active_step(const ScenarioSpec& scenario);

/// The researcher's scripted message for `step` (the step about to run on
/// `world`), or nullopt when the step is off-cadence or the researcher is absent
/// or observing. Templates cycle in order; targeted rotation walks the agents in
/// ascending id order, one per on-cadence step.
std::optional<Action> next_intervention(const InterventionStrategy& strategy, int step, const WorldState& world,
                                        const ScenarioSpec& scenario);

/// Fills {addressee} and {topic}; other braces are left alone.
std::string fill_template(const std::string& text, const std::string& addressee, const std::string& topic);

/// Wraps next_intervention for the run loop. For targeted messages to an agent
/// in another area the researcher first walks over, so the target can hear it.
class ScriptedResearcherPolicy {
public:
    ScriptedResearcherPolicy(const ScenarioSpec& scenario, InterventionStrategy strategy);

    std::vector<Action> actions(const WorldState& world) const;
    const InterventionStrategy& strategy() const { return strategy_; }

private:
    const ScenarioSpec& scenario_;
    InterventionStrategy strategy_;
};

struct SurveyRound {
    std::vector<SurveyResponse> responses;  ///< ascending agent id
    std::vector<Event> events;              ///< one survey_response event per response
};

/// Agents asked by `schedule`, ascending id.
std::vector<std::string> respondents(const SurveySchedule& schedule, const WorldState& world);

/// Interviews every respondent privately. Only world.next_seq changes. A backend
/// failure for one agent becomes a missing-flagged response for that agent.
SurveyRound administer_survey(const SurveySchedule& schedule, WorldState& world, const Engine& engine,
                              Backend& backend);

/// Neutral point of a scale: its declared neutral, else the midpoint.
double scale_neutral(const ScaleSpec& scale);

/// Throws std::out_of_range when s is outside the scale.
AttitudeClass classify_attitude(int s, const ScaleSpec& scale);

struct SurveyRow {
    std::string survey_id;
    std::string agent_id;
    std::string group;
    int at_step = 0;
    std::optional<int> stance;
    std::optional<int> trust;
    bool missing = false;
    std::string flags;  ///< ';'-joined
    std::string strategy;
    std::string backend;

    friend bool operator==(const SurveyRow&, const SurveyRow&) = default;
};

/// Flat table: one row per agent x survey, taken from survey_response events.
std::vector<SurveyRow> survey_rows(const std::vector<Event>& log);

std::string survey_table_csv(const std::vector<SurveyRow>& rows);
std::vector<SurveyRow> parse_survey_table_csv(const std::string& text);

}  // namespace socsim
