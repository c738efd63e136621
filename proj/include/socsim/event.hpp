#pragma once

// Log records: actions, survey responses, events, and the JSON-lines event log.
// Wire schema: docs/event_log.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "socsim/scenario.hpp"
#include "socsim/types.hpp"

namespace socsim {

using Json = nlohmann::ordered_json;

struct Action {
    enum class Kind { chat, broadcast, move, idle };

    Kind kind = Kind::idle;
    std::string actor;
    std::string target;  ///< chat only
    std::string text;    ///< chat and broadcast
    std::string area;    ///< move only: destination
    std::optional<PersuasionTag> tag;
    bool gate_override = false;  ///< researcher acted in an observe phase on purpose

    static Action idle(std::string actor);
    static Action chat(std::string actor, std::string target, std::string text);
    static Action broadcast(std::string actor, std::string text);
    static Action move(std::string actor, std::string area);

    friend bool operator==(const Action&, const Action&) = default;
};

std::string_view to_string(Action::Kind k);

struct SurveyResponse {
    std::string agent_id;
    std::string survey_id;
    int step = 0;
    std::optional<int> stance;
    std::optional<int> trust;
    std::optional<ScaleSpec> stance_scale;  ///< labels are not carried
    std::optional<ScaleSpec> trust_scale;
    std::vector<std::string> flags;          ///< e.g. "stance:out-of-range:9"
    std::optional<std::string> missing_reason;

    bool missing() const { return missing_reason.has_value(); }

    friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

enum class EventKind { utterance, movement, emotion_report, survey_response, injection, phase_change, system };
std::string_view to_string(EventKind k);

struct UtterancePayload {
    std::string actor;
    std::optional<std::string> target;  ///< nullopt for broadcasts
    std::string text;
    std::string area;  ///< where the actor stood when speaking
    std::optional<PersuasionTag> tag;
    bool gate_override = false;

    bool broadcast() const { return !target.has_value(); }
    friend bool operator==(const UtterancePayload&, const UtterancePayload&) = default;
};

struct MovementPayload {
    std::string actor;
    std::string from;
    std::string to;
    friend bool operator==(const MovementPayload&, const MovementPayload&) = default;
};

struct EmotionPayload {
    std::string agent;
    double valence = 0.0;
    std::string cognition;  ///< opaque backend state after this step
    friend bool operator==(const EmotionPayload&, const EmotionPayload&) = default;
};

struct InjectionPayload {
    std::string description;
    std::optional<std::string> area;
    bool manual = false;
    friend bool operator==(const InjectionPayload&, const InjectionPayload&) = default;
};

struct PhaseChangePayload {
    std::string phase;
    ResearcherMode researcher_mode = ResearcherMode::observe;
    std::string previous;
    friend bool operator==(const PhaseChangePayload&, const PhaseChangePayload&) = default;
};

/// Bookkeeping records: world_init, placement, step_complete, memory_summary,
/// step_begin, parse_failure, illegal_action, gate_override, step_failed, run_info.
struct SystemPayload {
    std::string what;
    Json data = Json::object();
    friend bool operator==(const SystemPayload&, const SystemPayload&) = default;
};

using EventPayload = std::variant<UtterancePayload, MovementPayload, EmotionPayload, SurveyResponse,
                                  InjectionPayload, PhaseChangePayload, SystemPayload>;

struct Event {
    std::uint64_t seq = 0;
    int step = 0;
    EventPayload payload;

    EventKind kind() const { return static_cast<EventKind>(payload.index()); }

    template <typename T>
    const T* as() const {
        return std::get_if<T>(&payload);
    }
    const SystemPayload* system(std::string_view what) const {
        const auto* s = as<SystemPayload>();
        return s && s->what == what ? s : nullptr;
    }

    friend bool operator==(const Event&, const Event&) = default;
};

class LogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);
Json to_json(const SurveyResponse& r);
SurveyResponse survey_response_from_json(const Json& j);
Json to_json(const ScaleSpec& s);
ScaleSpec scale_from_json(const Json& j);

/// One compact JSON object, no trailing newline.
std::string serialize_event(const Event& e);
std::string serialize_events(const std::vector<Event>& events);
std::vector<Event> parse_events(const std::string& text);
void write_event_log(const std::filesystem::path& path, const std::vector<Event>& events);
std::vector<Event> read_event_log(const std::filesystem::path& path);

}  // namespace socsim
