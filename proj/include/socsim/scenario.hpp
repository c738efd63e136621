#pragma once

// Scenario configuration: every type the engine, analytics and service share,
// plus parsing/serialization of the YAML scenario document.
// The format is documented in docs/scenario_format.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "socsim/types.hpp"

namespace socsim {

class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScenarioValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScaleSpec {
    int min = 1;
    int max = 7;
    std::optional<int> neutral;
    std::map<int, std::string> labels;

    bool contains(int value) const { return value >= min && value <= max; }
    int clamp(int value) const { return value < min ? min : (value > max ? max : value); }

    friend bool operator==(const ScaleSpec&, const ScaleSpec&) = default;
};

struct Area {
    std::string name;
    std::string description;

    friend bool operator==(const Area&, const Area&) = default;
};

/// Per-agent parameters of the deterministic scripted cognition model.
struct ScriptedAgentParams {
    double susceptibility = 0.5;      ///< stance shift per completed persuasion round
    int persuasion_threshold = 5;     ///< messages needed to complete a round
    double trust_gain_rational = 0.1;
    double trust_loss_emotional = 0.25;
    double pressure_compliance = 0.35;  ///< probability a completed pressure round shifts stance
    double talkativeness = 0.5;

    friend bool operator==(const ScriptedAgentParams&, const ScriptedAgentParams&) = default;
};

struct DemographicQuota {
    std::map<Gender, int> gender;
    std::map<AgeBand, int> age;
    std::map<Education, int> education;

    friend bool operator==(const DemographicQuota&, const DemographicQuota&) = default;
};

struct IdentityGroup {
    std::string name;
    int preset_stance = 4;
    int group_size = 0;
    std::string description;
    std::string initial_area;               ///< empty: round-robin over areas
    DemographicQuota quota;
    std::vector<std::string> name_pool;     ///< empty: draw from the population pool
    std::optional<ScriptedAgentParams> scripted;

    friend bool operator==(const IdentityGroup&, const IdentityGroup&) = default;
};

struct PopulationSpec {
    std::vector<IdentityGroup> groups;
    std::vector<std::string> name_pool;

    int total_size() const;

    friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

struct Phase {
    std::string name;
    int start_step = 1;
    int end_step = 1;
    ResearcherMode researcher_mode = ResearcherMode::observe;

    friend bool operator==(const Phase&, const Phase&) = default;
};

struct PhaseSchedule {
    std::vector<Phase> phases;

    int total_steps() const { return phases.empty() ? 0 : phases.back().end_step; }
    /// Phase containing `step`, or nullptr (step 0 and out-of-range steps).
    const Phase* phase_at(int step) const;

    friend bool operator==(const PhaseSchedule&, const PhaseSchedule&) = default;
};

struct Question {
    std::string id;
    std::string text;
    Measure measure = Measure::stance;
    ScaleSpec scale;

    friend bool operator==(const Question&, const Question&) = default;
};

struct SurveyTiming {
    enum class Kind { pre, post, step };
    Kind kind = Kind::post;
    int step = 0;  ///< only for Kind::step

    friend bool operator==(const SurveyTiming&, const SurveyTiming&) = default;
};

struct SurveySchedule {
    std::string id;
    SurveyTiming at;
    std::vector<Question> questions;
    std::vector<std::string> respondent_groups;  ///< empty: everyone

    friend bool operator==(const SurveySchedule&, const SurveySchedule&) = default;
};

struct EventInjection {
    int step = 1;
    std::string description;
    std::optional<std::string> area;  ///< nullopt: global

    friend bool operator==(const EventInjection&, const EventInjection&) = default;
};

struct InterventionStrategy {
    std::string id;     ///< e.g. "env-rp"
    std::string label;  ///< e.g. "Env-RP"
    Orientation orientation = Orientation::environmental;
    Style style = Style::rational;
    std::vector<std::string> message_templates;  ///< slots: {addressee}, {topic}
    int cadence = 1;
    Channel channel = Channel::broadcast;

    friend bool operator==(const InterventionStrategy&, const InterventionStrategy&) = default;
};

struct ResearcherSpec {
    std::string id = "researcher";
    std::string display_name = "Researcher";
    std::string role;
    std::string initial_area;
    int enter_step = 1;  ///< 0: present from world initialization

    friend bool operator==(const ResearcherSpec&, const ResearcherSpec&) = default;
};

/// Directed attitudes between agents, keyed by (from id, to id).
struct RelationshipMatrix {
    std::map<std::pair<std::string, std::string>, Attitude> entries;

    std::optional<Attitude> get(const std::string& from, const std::string& to) const;

    friend bool operator==(const RelationshipMatrix&, const RelationshipMatrix&) = default;
};

struct MemoryConfig {
    int window = 20;        ///< rolling window of perceived utterances
    int summary_every = 10;  ///< backend summary refresh period in steps

    friend bool operator==(const MemoryConfig&, const MemoryConfig&) = default;
};

struct ScenarioSpec {
    std::string name;
    std::string topic;
    std::vector<Area> areas;
    PopulationSpec population;
    PhaseSchedule phases;
    std::vector<SurveySchedule> surveys;
    std::vector<EventInjection> injections;
    ScaleSpec stance_scale;
    ScaleSpec trust_scale;
    std::uint64_t seed = 0;
    std::optional<ResearcherSpec> researcher;
    std::vector<InterventionStrategy> strategies;
    std::optional<RelationshipMatrix> relationships;
    MemoryConfig memory;
    std::vector<std::string> anchor_terms;

    int total_steps() const { return phases.total_steps(); }
    const Area* find_area(const std::string& name) const;
    const IdentityGroup* find_group(const std::string& name) const;
    const InterventionStrategy* find_strategy(const std::string& id) const;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Reads, parses and validates a scenario file.
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Parses and validates scenario text (same format as files).
ScenarioSpec parse_scenario(const std::string& text);

/// Canonical YAML rendering; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const ScenarioSpec& spec);

/// Throws ScenarioValidationError naming the first violated invariant.
void validate_scenario(const ScenarioSpec& spec);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string scenario_hash(const ScenarioSpec& spec);

struct AgentProfile;

/// Empty result means the matrix covers exactly all ordered pairs of distinct agents.
std::vector<std::string> validate_relationships(const RelationshipMatrix& matrix,
                                                const std::vector<AgentProfile>& agents);

}  // namespace socsim
