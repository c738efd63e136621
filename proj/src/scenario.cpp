#include "socsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "socsim/population.hpp"

namespace socsim {

int PopulationSpec::total_size() const {
    int total = 0;
    for (const auto& g : groups) total += g.group_size;
    return total;
}

const Phase* PhaseSchedule::phase_at(int step) const {
    for (const auto& p : phases) {
        if (step >= p.start_step && step <= p.end_step) return &p;
    }
    return nullptr;
}

std::optional<Attitude> RelationshipMatrix::get(const std::string& from, const std::string& to) const {
    const auto it = entries.find({from, to});
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

const Area* ScenarioSpec::find_area(const std::string& area_name) const {
    for (const auto& a : areas) {
        if (a.name == area_name) return &a;
    }
    return nullptr;
}

const IdentityGroup* ScenarioSpec::find_group(const std::string& group_name) const {
    for (const auto& g : population.groups) {
        if (g.name == group_name) return &g;
    }
    return nullptr;
}

const InterventionStrategy* ScenarioSpec::find_strategy(const std::string& id) const {
    for (const auto& s : strategies) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

namespace {

[[noreturn]] void parse_fail(const YAML::Node& node, const std::string& what) {
    const auto mark = node.Mark();
    if (mark.line >= 0) throw ScenarioParseError(fmt::format("line {}: {}", mark.line + 1, what));
    throw ScenarioParseError(what);
}

YAML::Node require(const YAML::Node& parent, const char* key) {
    YAML::Node n = parent[key];
    if (!n) parse_fail(parent, fmt::format("missing required key '{}'", key));
    return n;
}

template <typename T>
T as(const YAML::Node& node, const char* what) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        parse_fail(node, fmt::format("'{}' has the wrong type", what));
    }
}

template <typename T>
T get_or(const YAML::Node& parent, const char* key, T fallback) {
    const YAML::Node n = parent[key];
    return n ? as<T>(n, key) : fallback;
}

template <typename E>
E enum_of(const YAML::Node& node, const char* what) {
    try {
        return enum_from_string<E>(as<std::string>(node, what));
    } catch (const ParseError& e) {
        parse_fail(node, e.what());
    }
}

std::vector<std::string> string_list(const YAML::Node& node, const char* what) {
    std::vector<std::string> out;
    if (!node) return out;
    if (!node.IsSequence()) parse_fail(node, fmt::format("'{}' must be a list", what));
    for (const auto& item : node) out.push_back(as<std::string>(item, what));
    return out;
}

ScaleSpec parse_scale(const YAML::Node& node) {
    if (!node.IsMap()) parse_fail(node, "scale must be a mapping");
    ScaleSpec s;
    s.min = as<int>(require(node, "min"), "min");
    s.max = as<int>(require(node, "max"), "max");
    if (node["neutral"]) s.neutral = as<int>(node["neutral"], "neutral");
    if (const auto labels = node["labels"]) {
        for (const auto& kv : labels) s.labels[as<int>(kv.first, "label level")] = as<std::string>(kv.second, "label");
    }
    return s;
}

template <typename E>
std::map<E, int> parse_counts(const YAML::Node& node, const char* what) {
    std::map<E, int> counts;
    if (!node) return counts;
    if (!node.IsMap()) parse_fail(node, fmt::format("'{}' must be a mapping", what));
    for (const auto& kv : node) counts[enum_of<E>(kv.first, what)] = as<int>(kv.second, what);
    return counts;
}

ScriptedAgentParams parse_params(const YAML::Node& node) {
    ScriptedAgentParams p;
    p.susceptibility = get_or(node, "susceptibility", p.susceptibility);
    p.persuasion_threshold = get_or(node, "persuasion_threshold", p.persuasion_threshold);
    p.trust_gain_rational = get_or(node, "trust_gain_rational", p.trust_gain_rational);
    p.trust_loss_emotional = get_or(node, "trust_loss_emotional", p.trust_loss_emotional);
    p.pressure_compliance = get_or(node, "pressure_compliance", p.pressure_compliance);
    p.talkativeness = get_or(node, "talkativeness", p.talkativeness);
    return p;
}

IdentityGroup parse_group(const YAML::Node& node, const ScaleSpec& stance) {
    IdentityGroup g;
    g.name = as<std::string>(require(node, "name"), "name");
    g.preset_stance = get_or(node, "preset_stance", stance.neutral.value_or((stance.min + stance.max) / 2));
    g.group_size = as<int>(require(node, "size"), "size");
    g.description = get_or<std::string>(node, "description", "");
    g.initial_area = get_or<std::string>(node, "initial_area", "");
    if (const auto q = node["quota"]) {
        g.quota.gender = parse_counts<Gender>(q["gender"], "gender");
        g.quota.age = parse_counts<AgeBand>(q["age"], "age");
        g.quota.education = parse_counts<Education>(q["education"], "education");
    }
    g.name_pool = string_list(node["names"], "names");
    if (const auto s = node["scripted"]) g.scripted = parse_params(s);
    return g;
}

Question parse_question(const YAML::Node& node, const ScenarioSpec& spec) {
    Question q;
    q.id = as<std::string>(require(node, "id"), "id");
    q.text = get_or<std::string>(node, "text", "");
    q.measure = enum_of<Measure>(require(node, "measure"), "measure");
    const YAML::Node scale = node["scale"];
    if (!scale) {
        q.scale = q.measure == Measure::stance ? spec.stance_scale : spec.trust_scale;
    } else if (scale.IsScalar()) {
        const auto ref = as<std::string>(scale, "scale");
        if (ref == "stance") {
            q.scale = spec.stance_scale;
        } else if (ref == "trust") {
            q.scale = spec.trust_scale;
        } else {
            parse_fail(scale, "scale reference must be 'stance' or 'trust'");
        }
    } else {
        q.scale = parse_scale(scale);
    }
    return q;
}

SurveyTiming parse_timing(const YAML::Node& node) {
    SurveyTiming t;
    if (node.IsScalar()) {
        const auto text = node.Scalar();
        if (text == "pre") {
            t.kind = SurveyTiming::Kind::pre;
            return t;
        }
        if (text == "post") {
            t.kind = SurveyTiming::Kind::post;
            return t;
        }
    }
    t.kind = SurveyTiming::Kind::step;
    t.step = as<int>(node, "at");
    return t;
}

ScenarioSpec parse_node(const YAML::Node& root) {
    if (!root.IsMap()) throw ScenarioParseError("scenario document must be a mapping");
    ScenarioSpec spec;
    spec.name = as<std::string>(require(root, "name"), "name");
    spec.topic = get_or<std::string>(root, "topic", "");
    spec.seed = as<std::uint64_t>(require(root, "seed"), "seed");
    spec.stance_scale = parse_scale(require(root, "stance_scale"));
    spec.trust_scale = parse_scale(require(root, "trust_scale"));
    if (const auto m = root["memory"]) {
        spec.memory.window = get_or(m, "window", spec.memory.window);
        spec.memory.summary_every = get_or(m, "summary_every", spec.memory.summary_every);
    }
    for (const auto& a : require(root, "areas")) {
        spec.areas.push_back({as<std::string>(require(a, "name"), "name"), get_or<std::string>(a, "description", "")});
    }
    const auto pop = require(root, "population");
    spec.population.name_pool = string_list(pop["name_pool"], "name_pool");
    for (const auto& g : require(pop, "groups")) spec.population.groups.push_back(parse_group(g, spec.stance_scale));
    if (const auto phases = root["phases"]) {
        for (const auto& p : phases) {
            Phase ph;
            ph.name = as<std::string>(require(p, "name"), "name");
            ph.start_step = as<int>(require(p, "start"), "start");
            ph.end_step = as<int>(require(p, "end"), "end");
            ph.researcher_mode = enum_of<ResearcherMode>(require(p, "researcher_mode"), "researcher_mode");
            spec.phases.phases.push_back(ph);
        }
    }
    if (const auto r = root["researcher"]) {
        ResearcherSpec rs;
        rs.id = get_or<std::string>(r, "id", rs.id);
        rs.display_name = get_or<std::string>(r, "name", rs.display_name);
        rs.role = get_or<std::string>(r, "role", "");
        rs.initial_area = get_or<std::string>(r, "initial_area", spec.areas.empty() ? "" : spec.areas.front().name);
        rs.enter_step = get_or(r, "enter_step", rs.enter_step);
        spec.researcher = rs;
    }
    if (const auto strategies = root["strategies"]) {
        for (const auto& s : strategies) {
            InterventionStrategy st;
            st.id = as<std::string>(require(s, "id"), "id");
            st.label = get_or<std::string>(s, "label", st.id);
            st.orientation = enum_of<Orientation>(require(s, "orientation"), "orientation");
            st.style = enum_of<Style>(require(s, "style"), "style");
            st.cadence = get_or(s, "cadence", 1);
            if (s["channel"]) st.channel = enum_of<Channel>(s["channel"], "channel");
            st.message_templates = string_list(s["templates"], "templates");
            spec.strategies.push_back(std::move(st));
        }
    }
    if (const auto surveys = root["surveys"]) {
        for (const auto& s : surveys) {
            SurveySchedule sc;
            sc.id = as<std::string>(require(s, "id"), "id");
            sc.at = parse_timing(require(s, "at"));
            const auto resp = s["respondents"];
            if (resp && !(resp.IsScalar() && resp.Scalar() == "all")) {
                sc.respondent_groups = string_list(resp, "respondents");
            }
            for (const auto& q : require(s, "questions")) sc.questions.push_back(parse_question(q, spec));
            spec.surveys.push_back(std::move(sc));
        }
    }
    if (const auto injections = root["injections"]) {
        for (const auto& i : injections) {
            EventInjection inj;
            inj.step = as<int>(require(i, "step"), "step");
            inj.description = as<std::string>(require(i, "description"), "description");
            if (i["area"]) inj.area = as<std::string>(i["area"], "area");
            spec.injections.push_back(std::move(inj));
        }
    }
    if (const auto rel = root["relationships"]) {
        RelationshipMatrix m;
        if (!rel.IsMap()) parse_fail(rel, "relationships must be a mapping of rows");
        for (const auto& row : rel) {
            const auto from = make_agent_id(as<std::string>(row.first, "relationship row"));
            for (const auto& cell : row.second) {
                const auto to = make_agent_id(as<std::string>(cell.first, "relationship column"));
                m.entries[{from, to}] = enum_of<Attitude>(cell.second, "attitude");
            }
        }
        spec.relationships = std::move(m);
    }
    spec.anchor_terms = string_list(root["anchor_terms"], "anchor_terms");
    return spec;
}

void check_scale(const ScaleSpec& s, const std::string& what) {
    if (s.min >= s.max) throw ScenarioValidationError(what + " scale: min must be < max");
    if (s.neutral && (*s.neutral <= s.min || *s.neutral >= s.max)) {
        throw ScenarioValidationError(what + " scale: neutral must lie strictly between min and max");
    }
}

template <typename E>
void check_quota(const std::map<E, int>& counts, const IdentityGroup& g, const char* attribute) {
    int sum = 0;
    for (const auto& [k, v] : counts) {
        if (v < 0) throw ScenarioValidationError(fmt::format("group '{}': negative {} count", g.name, attribute));
        sum += v;
    }
    if (sum != g.group_size) {
        throw ScenarioValidationError(fmt::format("group '{}': {} counts sum to {} but group size is {}", g.name,
                                                  attribute, sum, g.group_size));
    }
}

}  // namespace

void validate_scenario(const ScenarioSpec& spec) {
    if (spec.areas.empty()) throw ScenarioValidationError("scenario declares no areas");
    std::set<std::string> area_names;
    for (const auto& a : spec.areas) {
        if (!area_names.insert(a.name).second) throw ScenarioValidationError("duplicate area '" + a.name + "'");
    }
    check_scale(spec.stance_scale, "stance");
    check_scale(spec.trust_scale, "trust");
    if (spec.memory.window < 1 || spec.memory.summary_every < 1) {
        throw ScenarioValidationError("memory window and summary period must be >= 1");
    }

    std::set<std::string> group_names;
    for (const auto& g : spec.population.groups) {
        if (!group_names.insert(g.name).second) throw ScenarioValidationError("duplicate group '" + g.name + "'");
        if (g.group_size < 0) throw ScenarioValidationError("group '" + g.name + "': negative size");
        if (!spec.stance_scale.contains(g.preset_stance)) {
            throw ScenarioValidationError("group '" + g.name + "': preset stance outside stance scale");
        }
        if (!g.initial_area.empty() && !spec.find_area(g.initial_area)) {
            throw ScenarioValidationError("group '" + g.name + "': unknown initial area '" + g.initial_area + "'");
        }
        check_quota(g.quota.gender, g, "gender");
        check_quota(g.quota.age, g, "age");
        check_quota(g.quota.education, g, "education");
        if (g.scripted) {
            const auto& p = *g.scripted;
            if (p.susceptibility < 0 || p.persuasion_threshold < 1 || p.trust_gain_rational < 0 ||
                p.trust_loss_emotional < 0 || p.pressure_compliance < 0 || p.pressure_compliance > 1 ||
                p.talkativeness < 0 || p.talkativeness > 1) {
                throw ScenarioValidationError("group '" + g.name + "': scripted parameters out of bounds");
            }
        }
    }

    const auto& phases = spec.phases.phases;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const auto& p = phases[i];
        if (p.start_step > p.end_step) {
            throw ScenarioValidationError("phase '" + p.name + "': start after end");
        }
        if (i == 0) {
            if (p.start_step != 1) throw ScenarioValidationError("phases must start at step 1");
            continue;
        }
        const auto& prev = phases[i - 1];
        if (p.start_step <= prev.start_step) throw ScenarioValidationError("phase boundaries not strictly increasing");
        if (p.start_step <= prev.end_step) throw ScenarioValidationError("phases overlap");
        if (p.start_step != prev.end_step + 1) throw ScenarioValidationError("phases not contiguous");
    }

    const int total = spec.total_steps();
    const bool has_event_phase = std::any_of(phases.begin(), phases.end(), [](const Phase& p) {
        return p.researcher_mode == ResearcherMode::event;
    });
    for (const auto& inj : spec.injections) {
        const Phase* p = spec.phases.phase_at(inj.step);
        if (!p) throw ScenarioValidationError(fmt::format("injection at step {} lies outside every phase", inj.step));
        if (has_event_phase && p->researcher_mode != ResearcherMode::event) {
            throw ScenarioValidationError(fmt::format("injection at step {} lies outside the event phase", inj.step));
        }
        if (inj.area && !spec.find_area(*inj.area)) {
            throw ScenarioValidationError("injection targets unknown area '" + *inj.area + "'");
        }
    }

    std::set<std::string> survey_ids;
    for (const auto& s : spec.surveys) {
        if (!survey_ids.insert(s.id).second) throw ScenarioValidationError("duplicate survey '" + s.id + "'");
        if (s.at.kind == SurveyTiming::Kind::step && (s.at.step < 1 || s.at.step > total)) {
            throw ScenarioValidationError("survey '" + s.id + "' scheduled outside the run");
        }
        if (s.questions.empty()) throw ScenarioValidationError("survey '" + s.id + "' has no questions");
        std::set<std::string> qids;
        for (const auto& q : s.questions) {
            if (!qids.insert(q.id).second) {
                throw ScenarioValidationError("survey '" + s.id + "': duplicate question id '" + q.id + "'");
            }
            check_scale(q.scale, "question '" + q.id + "'");
        }
        for (const auto& g : s.respondent_groups) {
            if (!spec.find_group(g)) throw ScenarioValidationError("survey '" + s.id + "': unknown group '" + g + "'");
        }
    }

    std::set<std::string> strategy_ids;
    for (const auto& st : spec.strategies) {
        if (!strategy_ids.insert(st.id).second) throw ScenarioValidationError("duplicate strategy '" + st.id + "'");
        if (st.message_templates.empty()) throw ScenarioValidationError("strategy '" + st.id + "' has no templates");
        if (st.cadence < 1) throw ScenarioValidationError("strategy '" + st.id + "': cadence must be >= 1");
    }

    if (spec.researcher) {
        const auto& r = *spec.researcher;
        if (!spec.find_area(r.initial_area)) {
            throw ScenarioValidationError("researcher: unknown initial area '" + r.initial_area + "'");
        }
        if (r.enter_step < 0 || (total > 0 && r.enter_step > total)) {
            throw ScenarioValidationError("researcher enter step outside the run");
        }
        if (r.id.empty()) throw ScenarioValidationError("researcher id must be non-empty");
    }
    for (const auto& term : spec.anchor_terms) {
        if (term.empty()) throw ScenarioValidationError("empty anchor term");
    }
}

ScenarioSpec parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ScenarioParseError(std::string("malformed scenario: ") + e.what());
    }
    ScenarioSpec spec;
    try {
        spec = parse_node(root);
    } catch (const YAML::Exception& e) {
        throw ScenarioParseError(std::string("malformed scenario: ") + e.what());
    }
    validate_scenario(spec);
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioParseError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

namespace {

void emit_scale(YAML::Emitter& out, const ScaleSpec& s) {
    out << YAML::BeginMap << YAML::Key << "min" << YAML::Value << s.min << YAML::Key << "max" << YAML::Value
        << s.max;
    if (s.neutral) out << YAML::Key << "neutral" << YAML::Value << *s.neutral;
    if (!s.labels.empty()) {
        out << YAML::Key << "labels" << YAML::Value << YAML::BeginMap;
        for (const auto& [level, text] : s.labels) out << YAML::Key << level << YAML::Value << text;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
}

template <typename E>
void emit_counts(YAML::Emitter& out, const char* key, const std::map<E, int>& counts) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (const auto& [k, v] : counts) out << YAML::Key << std::string(to_string(k)) << YAML::Value << v;
    out << YAML::EndMap;
}

}  // namespace

std::string serialize_scenario(const ScenarioSpec& spec) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << spec.name;
    out << YAML::Key << "topic" << YAML::Value << spec.topic;
    out << YAML::Key << "seed" << YAML::Value << spec.seed;
    out << YAML::Key << "stance_scale" << YAML::Value;
    emit_scale(out, spec.stance_scale);
    out << YAML::Key << "trust_scale" << YAML::Value;
    emit_scale(out, spec.trust_scale);
    out << YAML::Key << "memory" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "window"
        << YAML::Value << spec.memory.window << YAML::Key << "summary_every" << YAML::Value
        << spec.memory.summary_every << YAML::EndMap;

    out << YAML::Key << "areas" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : spec.areas) {
        out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << a.name << YAML::Key << "description"
            << YAML::Value << a.description << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "population" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name_pool" << YAML::Value << YAML::Flow << spec.population.name_pool;
    out << YAML::Key << "groups" << YAML::Value << YAML::BeginSeq;
    for (const auto& g : spec.population.groups) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << g.name;
        out << YAML::Key << "preset_stance" << YAML::Value << g.preset_stance;
        out << YAML::Key << "size" << YAML::Value << g.group_size;
        out << YAML::Key << "description" << YAML::Value << g.description;
        if (!g.initial_area.empty()) out << YAML::Key << "initial_area" << YAML::Value << g.initial_area;
        out << YAML::Key << "quota" << YAML::Value << YAML::BeginMap;
        emit_counts(out, "gender", g.quota.gender);
        emit_counts(out, "age", g.quota.age);
        emit_counts(out, "education", g.quota.education);
        out << YAML::EndMap;
        if (!g.name_pool.empty()) out << YAML::Key << "names" << YAML::Value << YAML::Flow << g.name_pool;
        if (g.scripted) {
            const auto& p = *g.scripted;
            out << YAML::Key << "scripted" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "susceptibility" << YAML::Value << p.susceptibility;
            out << YAML::Key << "persuasion_threshold" << YAML::Value << p.persuasion_threshold;
            out << YAML::Key << "trust_gain_rational" << YAML::Value << p.trust_gain_rational;
            out << YAML::Key << "trust_loss_emotional" << YAML::Value << p.trust_loss_emotional;
            out << YAML::Key << "pressure_compliance" << YAML::Value << p.pressure_compliance;
            out << YAML::Key << "talkativeness" << YAML::Value << p.talkativeness;
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "phases" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : spec.phases.phases) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << p.name << YAML::Key << "start"
            << YAML::Value << p.start_step << YAML::Key << "end" << YAML::Value << p.end_step << YAML::Key
            << "researcher_mode" << YAML::Value << std::string(to_string(p.researcher_mode)) << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (spec.researcher) {
        const auto& r = *spec.researcher;
        out << YAML::Key << "researcher" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << r.id;
        out << YAML::Key << "name" << YAML::Value << r.display_name;
        out << YAML::Key << "role" << YAML::Value << r.role;
        out << YAML::Key << "initial_area" << YAML::Value << r.initial_area;
        out << YAML::Key << "enter_step" << YAML::Value << r.enter_step;
        out << YAML::EndMap;
    }

    out << YAML::Key << "strategies" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : spec.strategies) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << s.id;
        out << YAML::Key << "label" << YAML::Value << s.label;
        out << YAML::Key << "orientation" << YAML::Value << std::string(to_string(s.orientation));
        out << YAML::Key << "style" << YAML::Value << std::string(to_string(s.style));
        out << YAML::Key << "cadence" << YAML::Value << s.cadence;
        out << YAML::Key << "channel" << YAML::Value << std::string(to_string(s.channel));
        out << YAML::Key << "templates" << YAML::Value << s.message_templates;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "surveys" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : spec.surveys) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << s.id;
        out << YAML::Key << "at" << YAML::Value;
        switch (s.at.kind) {
            case SurveyTiming::Kind::pre: out << "pre"; break;
            case SurveyTiming::Kind::post: out << "post"; break;
            case SurveyTiming::Kind::step: out << s.at.step; break;
        }
        out << YAML::Key << "respondents" << YAML::Value;
        if (s.respondent_groups.empty()) {
            out << "all";
        } else {
            out << YAML::Flow << s.respondent_groups;
        }
        out << YAML::Key << "questions" << YAML::Value << YAML::BeginSeq;
        for (const auto& q : s.questions) {
            out << YAML::BeginMap;
            out << YAML::Key << "id" << YAML::Value << q.id;
            out << YAML::Key << "measure" << YAML::Value << std::string(to_string(q.measure));
            out << YAML::Key << "text" << YAML::Value << q.text;
            out << YAML::Key << "scale" << YAML::Value;
            emit_scale(out, q.scale);
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "injections" << YAML::Value << YAML::BeginSeq;
    for (const auto& i : spec.injections) {
        out << YAML::BeginMap << YAML::Key << "step" << YAML::Value << i.step << YAML::Key << "description"
            << YAML::Value << i.description;
        if (i.area) out << YAML::Key << "area" << YAML::Value << *i.area;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (spec.relationships) {
        // Rows are written by agent id, which make_agent_id maps to itself.
        out << YAML::Key << "relationships" << YAML::Value << YAML::BeginMap;
        std::string current;
        bool open = false;
        for (const auto& [key, attitude] : spec.relationships->entries) {
            if (!open || key.first != current) {
                if (open) out << YAML::EndMap;
                current = key.first;
                out << YAML::Key << current << YAML::Value << YAML::Flow << YAML::BeginMap;
                open = true;
            }
            out << YAML::Key << key.second << YAML::Value << std::string(to_string(attitude));
        }
        if (open) out << YAML::EndMap;
        out << YAML::EndMap;
    }
    out << YAML::Key << "anchor_terms" << YAML::Value << YAML::Flow << spec.anchor_terms;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string scenario_hash(const ScenarioSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : serialize_scenario(spec)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return fmt::format("{:016x}", h);
}

std::vector<std::string> validate_relationships(const RelationshipMatrix& matrix,
                                                const std::vector<AgentProfile>& agents) {
    std::vector<std::string> errors;
    std::set<std::string> ids;
    for (const auto& a : agents) ids.insert(a.agent_id);
    for (const auto& [key, attitude] : matrix.entries) {
        if (key.first == key.second) {
            errors.push_back("self-entry " + key.first);
        } else if (!ids.count(key.first) || !ids.count(key.second)) {
            errors.push_back("extraneous pair (" + key.first + ", " + key.second + ")");
        }
    }
    for (const auto& from : ids) {
        for (const auto& to : ids) {
            if (from != to && !matrix.entries.count({from, to})) {
                errors.push_back("missing pair (" + from + ", " + to + ")");
            }
        }
    }
    return errors;
}

}  // namespace socsim
