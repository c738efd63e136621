#pragma once

// The cognition boundary between the world and whatever decides what agents do.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsim/event.hpp"
#include "socsim/population.hpp"
#include "socsim/rng.hpp"

namespace socsim {

struct HeardUtterance {
    int step = 0;
    std::string speaker;
    std::optional<std::string> target;
    std::string text;
    std::optional<PersuasionTag> tag;

    bool broadcast() const { return !target.has_value(); }
    friend bool operator==(const HeardUtterance&, const HeardUtterance&) = default;
};

struct Memory {
    std::deque<HeardUtterance> recent;  ///< oldest first, bounded by MemoryConfig::window
    std::string summary;

    std::string digest() const;
    friend bool operator==(const Memory&, const Memory&) = default;
};

struct Observation {
    int step = 0;
    std::string area;
    std::vector<std::string> present;  ///< other participants in the same area, ascending id
    std::vector<HeardUtterance> utterances;
    std::vector<std::string> injections;
    std::string memory_digest;
    double valence = 0.0;  ///< the observer's own valence before this step
    ResearcherMode researcher_mode = ResearcherMode::observe;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Static facts about the world a backend may consult when forming or checking actions.
struct WorldView {
    std::string topic;
    std::vector<std::string> areas;
    std::map<std::string, std::string> display_names;  ///< every participant id -> name
    std::string researcher_id;                           ///< empty when the scenario has none
};

/// Everything a backend sees about one agent for one call.
struct AgentContext {
    const AgentProfile& profile;
    const Observation& observation;
    const Memory& memory;
    const std::string& cognition;                     ///< opaque per-agent backend state
    const std::map<std::string, Attitude>& attitudes;  ///< toward other agents
    const WorldView& world;
};

struct Questionnaire {
    std::string survey_id;
    int step = 0;
    std::vector<Question> questions;
};

struct Decision {
    Action action;
    std::string cognition;                ///< updated backend state
    std::vector<std::string> diagnostics;  ///< e.g. "parse_failure: ..."
};

struct EmotionReport {
    double valence = 0.0;
    std::string cognition;
    std::vector<std::string> diagnostics;
};

/// Raised when a backend cannot produce an answer (transport down after retries, auth).
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Backend contract. Implementations must be callable concurrently for
/// different agents; all randomness comes from the Rng the engine hands in.
class Backend {
public:
    virtual ~Backend() = default;

    virtual Decision decide_action(const AgentContext& ctx, Rng& rng) = 0;
    virtual EmotionReport report_emotion(const AgentContext& ctx) = 0;
    /// Must not change any agent state.
    virtual SurveyResponse answer_survey(const AgentContext& ctx, const Questionnaire& questionnaire) = 0;
    virtual std::string summarize(const AgentContext& ctx) = 0;
    virtual std::string identity() const = 0;
};

/// Checks an action against the world: known chat target other than the actor,
/// declared move area, non-empty text. Returns an error message or nullopt.
std::optional<std::string> check_action(const Action& action, const WorldView& world);

/// Clamps out-of-scale answers and records the flag. Used by every backend.
std::optional<int> clamp_answer(std::optional<int> value, const Question& q, std::vector<std::string>& flags);

}  // namespace socsim
