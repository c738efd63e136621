#pragma once

#include <map>
#include <string>

#include "socsim/backend.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

struct ScriptedBackendConfig {
    /// Orientation the simulated model leans toward regardless of persona.
    Orientation endogenous = Orientation::environmental;
    ScriptedAgentParams defaults;
    double valence_decay = 0.5;
    double impulse_emotional_conflicting = -0.4;
    double impulse_emotional_aligned = 0.3;
    double impulse_rational_conflicting = -0.1;
    double impulse_rational_aligned = 0.05;
    double impulse_injection = -0.3;
};

/// Internal state of one scripted agent, carried in AgentState::cognition.
struct ScriptedMind {
    double stance = 4.0;
    double trust = 5.5;
    int rational_count = 0;  ///< aligned rational messages in the current round
    int pressure_count = 0;  ///< emotional messages in the current round

    std::string encode() const;
    static ScriptedMind decode(const std::string& text);

    friend bool operator==(const ScriptedMind&, const ScriptedMind&) = default;
};

/// Deterministic rule-based cognition used for every reproducible run.
///
/// Per persuasion-tagged message perceived (orientation o, direction +1 for
/// environmental, -1 for economic; "aligned" means o == endogenous):
///
///   rational, aligned     trust += trust_gain_rational; rational_count += 1;
///                         at persuasion_threshold: stance += dir * susceptibility, count = 0
///   rational, conflicting no effect
///   emotional, any        pressure_count += 1; conflicting also trust -= trust_loss_emotional;
///                         at persuasion_threshold: count = 0 and, with probability
///                         pressure_compliance, stance += dir * susceptibility
///
/// Stance and trust are clamped to their scales after every message. Survey
/// answers are the round-half-up of the internal values.
///
/// Each step the agent then chats with a same-area participant with probability
/// talkativeness (partner weighted 3/2/1 by positive/neutral/negative attitude;
/// the researcher's attitude follows trust), otherwise stays idle.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(const ScenarioSpec& scenario, ScriptedBackendConfig config = {});

    Decision decide_action(const AgentContext& ctx, Rng& rng) override;
    EmotionReport report_emotion(const AgentContext& ctx) override;
    SurveyResponse answer_survey(const AgentContext& ctx, const Questionnaire& questionnaire) override;
    std::string summarize(const AgentContext& ctx) override;
    std::string identity() const override { return "scripted"; }

    const ScriptedAgentParams& params_for(const std::string& group) const;
    ScriptedMind initial_mind(const AgentProfile& profile) const;
    /// Mind from ctx.cognition, or the initial mind when it is empty.
    ScriptedMind mind_of(const AgentContext& ctx) const;
    /// Applies one message to a mind. Exposed for rule-table tests.
    void absorb_message(ScriptedMind& mind, const ScriptedAgentParams& params, const PersuasionTag& tag,
                        Rng& rng) const;

private:
    ScriptedBackendConfig config_;
    ScaleSpec stance_scale_;
    ScaleSpec trust_scale_;
    std::map<std::string, ScriptedAgentParams> group_params_;
    std::map<std::string, int> group_presets_;
};

int round_half_up(double x);

}  // namespace socsim
