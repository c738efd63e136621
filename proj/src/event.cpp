#include "socsim/event.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace socsim {

Action Action::idle(std::string actor) {
    Action a;
    a.actor = std::move(actor);
    return a;
}

Action Action::chat(std::string actor, std::string target, std::string text) {
    Action a;
    a.kind = Kind::chat;
    a.actor = std::move(actor);
    a.target = std::move(target);
    a.text = std::move(text);
    return a;
}

Action Action::broadcast(std::string actor, std::string text) {
    Action a;
    a.kind = Kind::broadcast;
    a.actor = std::move(actor);
    a.text = std::move(text);
    return a;
}

Action Action::move(std::string actor, std::string area) {
    Action a;
    a.kind = Kind::move;
    a.actor = std::move(actor);
    a.area = std::move(area);
    return a;
}

std::string_view to_string(Action::Kind k) {
    switch (k) {
        case Action::Kind::chat: return "chat";
        case Action::Kind::broadcast: return "broadcast";
        case Action::Kind::move: return "move";
        case Action::Kind::idle: return "idle";
    }
    return "?";
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::utterance: return "utterance";
        case EventKind::movement: return "movement";
        case EventKind::emotion_report: return "emotion_report";
        case EventKind::survey_response: return "survey_response";
        case EventKind::injection: return "injection";
        case EventKind::phase_change: return "phase_change";
        case EventKind::system: return "system";
    }
    return "?";
}

namespace {

EventKind kind_from_string(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(EventKind::system); ++i) {
        if (to_string(static_cast<EventKind>(i)) == s) return static_cast<EventKind>(i);
    }
    throw LogError("unknown event kind '" + s + "'");
}

Json tag_json(const PersuasionTag& t) {
    return Json{{"orientation", to_string(t.orientation)}, {"style", to_string(t.style)}};
}

PersuasionTag tag_from(const Json& j) {
    return {enum_from_string<Orientation>(j.at("orientation").get<std::string>()),
            enum_from_string<Style>(j.at("style").get<std::string>())};
}

template <typename T>
std::optional<T> opt(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->template get<T>();
}

struct PayloadToJson {
    Json operator()(const UtterancePayload& p) const {
        Json j{{"actor", p.actor}};
        if (p.target) j["target"] = *p.target;
        j["text"] = p.text;
        j["area"] = p.area;
        j["broadcast"] = p.broadcast();
        if (p.tag) j["tag"] = tag_json(*p.tag);
        if (p.gate_override) j["override"] = true;
        return j;
    }
    Json operator()(const MovementPayload& p) const { return Json{{"actor", p.actor}, {"from", p.from}, {"to", p.to}}; }
    Json operator()(const EmotionPayload& p) const {
        return Json{{"agent", p.agent}, {"valence", p.valence}, {"cognition", p.cognition}};
    }
    Json operator()(const SurveyResponse& r) const { return to_json(r); }
    Json operator()(const InjectionPayload& p) const {
        Json j{{"description", p.description}};
        if (p.area) j["area"] = *p.area;
        if (p.manual) j["manual"] = true;
        return j;
    }
    Json operator()(const PhaseChangePayload& p) const {
        return Json{{"phase", p.phase}, {"researcher_mode", to_string(p.researcher_mode)}, {"previous", p.previous}};
    }
    Json operator()(const SystemPayload& p) const { return Json{{"what", p.what}, {"data", p.data}}; }
};

}  // namespace

Json to_json(const ScaleSpec& s) {
    Json j{{"min", s.min}, {"max", s.max}};
    if (s.neutral) j["neutral"] = *s.neutral;
    return j;
}

ScaleSpec scale_from_json(const Json& j) {
    ScaleSpec s;
    s.min = j.at("min").get<int>();
    s.max = j.at("max").get<int>();
    s.neutral = opt<int>(j, "neutral");
    return s;
}

Json to_json(const SurveyResponse& r) {
    Json j{{"survey", r.survey_id}, {"agent", r.agent_id}, {"at_step", r.step}};
    j["stance"] = r.stance ? Json(*r.stance) : Json(nullptr);
    j["trust"] = r.trust ? Json(*r.trust) : Json(nullptr);
    if (r.stance_scale) j["stance_scale"] = to_json(*r.stance_scale);
    if (r.trust_scale) j["trust_scale"] = to_json(*r.trust_scale);
    j["flags"] = r.flags;
    if (r.missing_reason) j["missing_reason"] = *r.missing_reason;
    return j;
}

SurveyResponse survey_response_from_json(const Json& j) {
    SurveyResponse r;
    r.survey_id = j.at("survey").get<std::string>();
    r.agent_id = j.at("agent").get<std::string>();
    r.step = j.value("at_step", 0);
    r.stance = opt<int>(j, "stance");
    r.trust = opt<int>(j, "trust");
    if (j.contains("stance_scale")) r.stance_scale = scale_from_json(j.at("stance_scale"));
    if (j.contains("trust_scale")) r.trust_scale = scale_from_json(j.at("trust_scale"));
    if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
    r.missing_reason = opt<std::string>(j, "missing_reason");
    return r;
}

Json to_json(const Event& e) {
    return Json{{"seq", e.seq},
                {"step", e.step},
                {"kind", to_string(e.kind())},
                {"payload", std::visit(PayloadToJson{}, e.payload)}};
}

Event event_from_json(const Json& j) {
    Event e;
    try {
        e.seq = j.at("seq").get<std::uint64_t>();
        e.step = j.at("step").get<int>();
        const Json& p = j.at("payload");
        switch (kind_from_string(j.at("kind").get<std::string>())) {
            case EventKind::utterance: {
                UtterancePayload u;
                u.actor = p.at("actor").get<std::string>();
                u.target = opt<std::string>(p, "target");
                u.text = p.at("text").get<std::string>();
                u.area = p.at("area").get<std::string>();
                if (p.contains("tag")) u.tag = tag_from(p.at("tag"));
                u.gate_override = p.value("override", false);
                e.payload = std::move(u);
                break;
            }
            case EventKind::movement:
                e.payload = MovementPayload{p.at("actor").get<std::string>(), p.at("from").get<std::string>(),
                                            p.at("to").get<std::string>()};
                break;
            case EventKind::emotion_report:
                e.payload = EmotionPayload{p.at("agent").get<std::string>(), p.at("valence").get<double>(),
                                           p.value("cognition", std::string{})};
                break;
            case EventKind::survey_response: e.payload = survey_response_from_json(p); break;
            case EventKind::injection:
                e.payload = InjectionPayload{p.at("description").get<std::string>(), opt<std::string>(p, "area"),
                                             p.value("manual", false)};
                break;
            case EventKind::phase_change:
                e.payload = PhaseChangePayload{p.at("phase").get<std::string>(),
                                               enum_from_string<ResearcherMode>(p.at("researcher_mode").get<std::string>()),
                                               p.value("previous", std::string{})};
                break;
            case EventKind::system:
                e.payload = SystemPayload{p.at("what").get<std::string>(), p.value("data", Json::object())};
                break;
        }
    } catch (const Json::exception& ex) {
        throw LogError(std::string("malformed event: ") + ex.what());
    } catch (const ParseError& ex) {
        throw LogError(std::string("malformed event: ") + ex.what());
    }
    return e;
}

std::string serialize_event(const Event& e) { return to_json(e).dump(); }

std::string serialize_events(const std::vector<Event>& events) {
    std::string out;
    for (const auto& e : events) {
        out += serialize_event(e);
        out += '\n';
    }
    return out;
}

std::vector<Event> parse_events(const std::string& text) {
    std::vector<Event> events;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& ex) {
            throw LogError(fmt::format("line {}: {}", lineno, ex.what()));
        }
        try {
            events.push_back(event_from_json(j));
        } catch (const LogError& ex) {
            throw LogError(fmt::format("line {}: {}", lineno, ex.what()));
        }
    }
    return events;
}

void write_event_log(const std::filesystem::path& path, const std::vector<Event>& events) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LogError("cannot write " + path.string());
    out << serialize_events(events);
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LogError("cannot open event log " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_events(buf.str());
}

}  // namespace socsim
