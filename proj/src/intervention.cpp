#include "socsim/intervention.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

#include <fmt/format.h>

namespace socsim {

std::optional<int> first_active_step(const ScenarioSpec& scenario) {
    if (!scenario.researcher) return std::nullopt;
    const int from = std::max(1, scenario.researcher->enter_step);
    for (int t = from; t <= scenario.total_steps(); ++t) {
        const Phase* p = scenario.phases.phase_at(t);
        if (p && p->researcher_mode != ResearcherMode::observe) return t;
    }
    return std::nullopt;
}

std::string fill_template(const std::string& text, const std::string& addressee, const std::string& topic) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text.compare(i, 11, "{addressee}") == 0) {
            out += addressee;
            i += 11;
        } else if (text.compare(i, 7, "{topic}") == 0) {
            out += topic;
            i += 7;
        } else {
            out += text[i++];
        }
    }
    return out;
}

std::optional<Action> next_intervention(const InterventionStrategy& strategy, int step, const WorldState& world,
                                        const ScenarioSpec& scenario) {
    if (strategy.message_templates.empty() || strategy.cadence < 1) return std::nullopt;
    const auto start = first_active_step(scenario);
    if (!start || step < *start) return std::nullopt;
    const bool present = world.researcher || scenario.researcher->enter_step <= step;
    const Phase* phase = scenario.phases.phase_at(step);
    if (!present || !phase || phase->researcher_mode == ResearcherMode::observe) return std::nullopt;
    if ((step - *start) % strategy.cadence != 0) return std::nullopt;

    const auto k = static_cast<std::size_t>((step - *start) / strategy.cadence);
    const auto& text = strategy.message_templates[k % strategy.message_templates.size()];
    const std::string& rid = scenario.researcher->id;
    Action a;
    if (strategy.channel == Channel::broadcast || world.agents.empty()) {
        a = Action::broadcast(rid, fill_template(text, "everyone", scenario.topic));
    } else {
        auto it = world.agents.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(k % world.agents.size()));
        a = Action::chat(rid, it->first, fill_template(text, it->second.profile.display_name, scenario.topic));
    }
    a.tag = PersuasionTag{strategy.orientation, strategy.style};
    return a;
}

ScriptedResearcherPolicy::ScriptedResearcherPolicy(const ScenarioSpec& scenario, InterventionStrategy strategy)
    : scenario_(scenario), strategy_(std::move(strategy)) {
    if (strategy_.message_templates.empty()) throw std::invalid_argument("strategy has no templates");
    if (strategy_.cadence < 1) throw std::invalid_argument("strategy cadence must be >= 1");
}

std::vector<Action> ScriptedResearcherPolicy::actions(const WorldState& world) const {
    std::vector<Action> out;
    const int step = world.step + 1;
    auto a = next_intervention(strategy_, step, world, scenario_);
    if (!a) return out;
    if (a->kind == Action::Kind::chat) {
        const std::string here = world.researcher ? world.researcher->area : scenario_.researcher->initial_area;
        const auto& there = world.agents.at(a->target).area;
        if (there != here) out.push_back(Action::move(a->actor, there));
    }
    out.push_back(std::move(*a));
    return out;
}

std::vector<std::string> respondents(const SurveySchedule& schedule, const WorldState& world) {
    std::vector<std::string> ids;
    for (const auto& [id, agent] : world.agents) {
        const auto& groups = schedule.respondent_groups;
        if (groups.empty() || std::find(groups.begin(), groups.end(), agent.profile.group) != groups.end()) {
            ids.push_back(id);
        }
    }
    return ids;
}

SurveyRound administer_survey(const SurveySchedule& schedule, WorldState& world, const Engine& engine,
                              Backend& backend) {
    const auto ids = respondents(schedule, world);
    const Questionnaire questionnaire{schedule.id, world.step, schedule.questions};
    SurveyRound round;
    round.responses.resize(ids.size());

    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    const bool parallel = engine.exec() == ExecPolicy::parallel;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& id = ids[static_cast<std::size_t>(i)];
        auto& out = round.responses[static_cast<std::size_t>(i)];
        try {
            const AgentState& agent = world.agents.at(id);
            const Observation obs = engine.perceive(world, id);
            out = backend.answer_survey(engine.context(world, agent, obs), questionnaire);
            out.agent_id = id;
            out.survey_id = schedule.id;
            out.step = world.step;
        } catch (const std::exception& e) {
            out = SurveyResponse{};
            out.agent_id = id;
            out.survey_id = schedule.id;
            out.step = world.step;
            out.missing_reason = std::string("backend error: ") + e.what();
        }
    }

    for (const auto& r : round.responses) {
        Event e;
        e.seq = world.next_seq++;
        e.step = world.step;
        e.payload = r;
        round.events.push_back(std::move(e));
    }
    return round;
}

double scale_neutral(const ScaleSpec& scale) {
    return scale.neutral ? static_cast<double>(*scale.neutral) : (scale.min + scale.max) / 2.0;
}

AttitudeClass classify_attitude(int s, const ScaleSpec& scale) {
    if (!scale.contains(s)) {
        throw std::out_of_range(fmt::format("stance {} outside scale {}..{}", s, scale.min, scale.max));
    }
    const double neutral = scale_neutral(scale);
    if (s < neutral) return AttitudeClass::economic;
    if (s > neutral) return AttitudeClass::environmental;
    return AttitudeClass::neutral;
}

std::vector<SurveyRow> survey_rows(const std::vector<Event>& log) {
    std::map<std::string, std::string> groups;
    std::string strategy;
    std::string backend;
    std::vector<SurveyRow> rows;
    for (const auto& e : log) {
        if (const auto* s = e.system("placement")) {
            groups[s->data.at("agent").at("agent_id").get<std::string>()] =
                s->data.at("agent").at("group").get<std::string>();
        } else if (const auto* s = e.system("run_info")) {
            strategy = s->data.value("policy", "");
            backend = s->data.value("backend", "");
        } else if (const auto* r = e.as<SurveyResponse>()) {
            SurveyRow row;
            row.survey_id = r->survey_id;
            row.agent_id = r->agent_id;
            row.group = groups.count(r->agent_id) ? groups[r->agent_id] : "";
            row.at_step = r->step;
            row.stance = r->stance;
            row.trust = r->trust;
            row.missing = r->missing();
            for (std::size_t i = 0; i < r->flags.size(); ++i) row.flags += (i ? ";" : "") + r->flags[i];
            rows.push_back(std::move(row));
        }
    }
    for (auto& row : rows) {
        row.strategy = strategy;
        row.backend = backend;
    }
    return rows;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string{}; }

}  // namespace

constexpr const char* kSurveyHeader = "survey_id,agent_id,group,at_step,stance,trust,missing,flags,strategy,backend";

std::string survey_table_csv(const std::vector<SurveyRow>& rows) {
    std::string out = std::string(kSurveyHeader) + "\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.survey_id), csv_field(r.agent_id),
                           csv_field(r.group), r.at_step, opt_int(r.stance), opt_int(r.trust), r.missing ? 1 : 0,
                           csv_field(r.flags), csv_field(r.strategy), csv_field(r.backend));
    }
    return out;
}

std::vector<SurveyRow> parse_survey_table_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kSurveyHeader) {
        throw std::invalid_argument("survey table: unexpected header");
    }
    std::vector<SurveyRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw std::invalid_argument(fmt::format("survey table line {}: expected 10 fields", lineno));
        SurveyRow r;
        r.survey_id = f[0];
        r.agent_id = f[1];
        r.group = f[2];
        r.at_step = std::stoi(f[3]);
        if (!f[4].empty()) r.stance = std::stoi(f[4]);
        if (!f[5].empty()) r.trust = std::stoi(f[5]);
        r.missing = f[6] == "1";
        r.flags = f[7];
        r.strategy = f[8];
        r.backend = f[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace socsim
