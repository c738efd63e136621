#include "socsim/scripted_backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace socsim {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

std::string ScriptedMind::encode() const {
    return nlohmann::ordered_json{{"stance", stance},
                                  {"trust", trust},
                                  {"rational", rational_count},
                                  {"pressure", pressure_count}}
        .dump();
}

ScriptedMind ScriptedMind::decode(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ScriptedMind m;
    m.stance = j.at("stance").get<double>();
    m.trust = j.at("trust").get<double>();
    m.rational_count = j.at("rational").get<int>();
    m.pressure_count = j.at("pressure").get<int>();
    return m;
}

ScriptedBackend::ScriptedBackend(const ScenarioSpec& scenario, ScriptedBackendConfig config)
    : config_(std::move(config)), stance_scale_(scenario.stance_scale), trust_scale_(scenario.trust_scale) {
    for (const auto& g : scenario.population.groups) {
        group_params_[g.name] = g.scripted.value_or(config_.defaults);
        group_presets_[g.name] = g.preset_stance;
    }
}

const ScriptedAgentParams& ScriptedBackend::params_for(const std::string& group) const {
    const auto it = group_params_.find(group);
    return it == group_params_.end() ? config_.defaults : it->second;
}

ScriptedMind ScriptedBackend::initial_mind(const AgentProfile& profile) const {
    ScriptedMind m;
    const auto preset = group_presets_.find(profile.group);
    m.stance = preset != group_presets_.end()
                   ? preset->second
                   : static_cast<double>(stance_scale_.neutral.value_or((stance_scale_.min + stance_scale_.max) / 2));
    m.trust = trust_scale_.neutral ? static_cast<double>(*trust_scale_.neutral)
                                   : (trust_scale_.min + trust_scale_.max) / 2.0;
    return m;
}

ScriptedMind ScriptedBackend::mind_of(const AgentContext& ctx) const {
    return ctx.cognition.empty() ? initial_mind(ctx.profile) : ScriptedMind::decode(ctx.cognition);
}

void ScriptedBackend::absorb_message(ScriptedMind& mind, const ScriptedAgentParams& params, const PersuasionTag& tag,
                                     Rng& rng) const {
    const bool aligned = tag.orientation == config_.endogenous;
    const double dir = tag.orientation == Orientation::environmental ? 1.0 : -1.0;
    if (tag.style == Style::rational) {
        if (aligned) {
            mind.trust += params.trust_gain_rational;
            if (++mind.rational_count >= params.persuasion_threshold) {
                mind.stance += dir * params.susceptibility;
                mind.rational_count = 0;
            }
        }
    } else {
        if (!aligned) mind.trust -= params.trust_loss_emotional;
        if (++mind.pressure_count >= params.persuasion_threshold) {
            mind.pressure_count = 0;
            if (rng.bernoulli(params.pressure_compliance)) mind.stance += dir * params.susceptibility;
        }
    }
    mind.stance = std::clamp(mind.stance, static_cast<double>(stance_scale_.min), static_cast<double>(stance_scale_.max));
    mind.trust = std::clamp(mind.trust, static_cast<double>(trust_scale_.min), static_cast<double>(trust_scale_.max));
}

namespace {

constexpr std::array<const char*, 3> kEnvironmentalLines{
    "{name}, we can't trade clean air for {topic}.",
    "{name}, the health risks of {topic} keep me up at night.",
    "{name}, our shared values should put the environment first.",
};
constexpr std::array<const char*, 3> kEconomicLines{
    "{name}, {topic} means jobs for families here.",
    "{name}, we need the investment that comes with {topic}.",
    "{name}, let's find frameworks that keep the local economy moving.",
};
constexpr std::array<const char*, 3> kNeutralLines{
    "{name}, I'm still weighing both sides of {topic}.",
    "{name}, what do you make of all this?",
    "{name}, maybe some alignment on the basics would help us.",
};

int attitude_weight(Attitude a) {
    switch (a) {
        case Attitude::positive: return 3;
        case Attitude::neutral: return 2;
        case Attitude::negative: return 1;
    }
    return 2;
}

}  // namespace

Decision ScriptedBackend::decide_action(const AgentContext& ctx, Rng& rng) {
    ScriptedMind mind = mind_of(ctx);
    const ScriptedAgentParams& params = params_for(ctx.profile.group);
    for (const auto& u : ctx.observation.utterances) {
        if (u.tag) absorb_message(mind, params, *u.tag, rng);
    }

    Decision d;
    d.action = Action::idle(ctx.profile.agent_id);
    const bool speaks = rng.bernoulli(params.talkativeness);
    if (speaks && !ctx.observation.present.empty()) {
        const double trust_frac = (mind.trust - trust_scale_.min) / static_cast<double>(trust_scale_.max - trust_scale_.min);
        std::vector<int> weights;
        int total = 0;
        for (const auto& other : ctx.observation.present) {
            Attitude a = Attitude::neutral;
            if (other == ctx.world.researcher_id) {
                a = trust_frac > 0.6 ? Attitude::positive : (trust_frac < 0.4 ? Attitude::negative : Attitude::neutral);
            } else if (const auto it = ctx.attitudes.find(other); it != ctx.attitudes.end()) {
                a = it->second;
            }
            weights.push_back(attitude_weight(a));
            total += weights.back();
        }
        auto pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(total)));
        std::size_t target = 0;
        while (pick >= weights[target]) pick -= weights[target++];

        const double neutral =
            stance_scale_.neutral ? *stance_scale_.neutral : (stance_scale_.min + stance_scale_.max) / 2.0;
        const auto& bank = mind.stance > neutral + 0.5   ? kEnvironmentalLines
                           : mind.stance < neutral - 0.5 ? kEconomicLines
                                                         : kNeutralLines;
        const auto line = bank[rng.uniform_index(bank.size())];
        const auto& target_id = ctx.observation.present[target];
        const auto name_it = ctx.world.display_names.find(target_id);
        const std::string topic = ctx.world.topic.empty() ? std::string("this") : ctx.world.topic;
        d.action = Action::chat(ctx.profile.agent_id, target_id,
                                fmt::format(fmt::runtime(line),
                                            fmt::arg("name", name_it != ctx.world.display_names.end() ? name_it->second
                                                                                                      : target_id),
                                            fmt::arg("topic", topic)));
    }
    d.cognition = mind.encode();
    return d;
}

EmotionReport ScriptedBackend::report_emotion(const AgentContext& ctx) {
    EmotionReport r;
    r.cognition = ctx.cognition.empty() ? initial_mind(ctx.profile).encode() : ctx.cognition;
    double v = config_.valence_decay * ctx.observation.valence;
    for (const auto& u : ctx.observation.utterances) {
        if (!u.tag) continue;
        const bool aligned = u.tag->orientation == config_.endogenous;
        if (u.tag->style == Style::emotional) {
            v += aligned ? config_.impulse_emotional_aligned : config_.impulse_emotional_conflicting;
        } else {
            v += aligned ? config_.impulse_rational_aligned : config_.impulse_rational_conflicting;
        }
    }
    v += config_.impulse_injection * static_cast<double>(ctx.observation.injections.size());
    r.valence = std::clamp(v, -1.0, 1.0);
    return r;
}

SurveyResponse ScriptedBackend::answer_survey(const AgentContext& ctx, const Questionnaire& questionnaire) {
    const ScriptedMind mind = mind_of(ctx);
    SurveyResponse r;
    r.agent_id = ctx.profile.agent_id;
    r.survey_id = questionnaire.survey_id;
    r.step = questionnaire.step;
    for (const auto& q : questionnaire.questions) {
        if (q.measure == Measure::stance) {
            r.stance = clamp_answer(round_half_up(mind.stance), q, r.flags);
            r.stance_scale = q.scale;
            r.stance_scale->labels.clear();
        } else {
            r.trust = clamp_answer(round_half_up(mind.trust), q, r.flags);
            r.trust_scale = q.scale;
            r.trust_scale->labels.clear();
        }
    }
    return r;
}

std::string ScriptedBackend::summarize(const AgentContext& ctx) {
    const ScriptedMind mind = mind_of(ctx);
    return fmt::format("heard {} recent messages; stance {:.1f}; trust {:.1f}", ctx.memory.recent.size(), mind.stance,
                       mind.trust);
}

}  // namespace socsim
