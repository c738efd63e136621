#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsim/scenario.hpp"

namespace socsim {

struct AgentProfile {
    std::string agent_id;
    std::string display_name;
    std::string group;  ///< IdentityGroup::name
    Gender gender = Gender::female;
    AgeBand age_band = AgeBand::age_30_49;
    Education education = Education::high_school;
    std::string persona_prompt;
    std::string initial_area;

    friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

class QuotaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds group_size agents per group whose gender/age/education counts equal the
/// quotas exactly. Each attribute column is shuffled independently with a stream
/// derived from `seed`, so joint combinations vary with the seed while marginals
/// stay fixed. Names are drawn without replacement (group pool, else shared pool).
/// Persona prompts are left empty; see render_persona_prompt.
std::vector<AgentProfile> build_population(const PopulationSpec& spec, std::uint64_t seed,
                                           const std::vector<Area>& areas = {});

/// Builds the population of a scenario and fills in persona prompts.
std::vector<AgentProfile> build_scenario_population(const ScenarioSpec& scenario);

std::string render_persona_prompt(const AgentProfile& profile, const ScenarioSpec& scenario);

}  // namespace socsim
