#pragma once

// Shared fixtures: scenario paths and synthetic event logs for oracle tests.

#include <filesystem>
#include <string>
#include <vector>

#include "socsim/event.hpp"
#include "socsim/rng.hpp"

namespace test_support {

inline std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(SOCSIM_SOURCE_DIR) / "scenarios" / (name + ".scenario");
}

struct SynthAgent {
    std::string id;
    std::string group;
};

struct SynthLog {
    std::vector<socsim::Event> events;
    std::vector<SynthAgent> agents;  ///< excludes the researcher
    std::string researcher = "researcher";
    int steps = 0;
};

/// Random but well-formed log: placements, utterances (targeted or broadcast,
/// any area) and sparse emotion reports, steps 1..steps in order.
inline SynthLog random_log(socsim::Rng& rng, int n_agents, int n_groups, int steps, int utterances_per_step,
                           double emotion_prob = 0.6) {
    using namespace socsim;
    SynthLog log;
    log.steps = steps;
    std::uint64_t seq = 0;
    const std::vector<std::string> areas = {"North", "South", "East"};
    auto push = [&](int step, EventPayload p) { log.events.push_back(Event{seq++, step, std::move(p)}); };

    push(0, SystemPayload{"world_init", Json{{"researcher_id", log.researcher}}});
    for (int i = 0; i < n_agents; ++i) {
        SynthAgent a{"a" + std::to_string(100 + i), "G" + std::to_string(rng.uniform_index(n_groups))};
        log.agents.push_back(a);
        push(0, SystemPayload{"placement", Json{{"agent", {{"agent_id", a.id}, {"group", a.group}}},
                                                {"area", areas[rng.uniform_index(3)]},
                                                {"human", false}}});
    }
    push(0, SystemPayload{"placement", Json{{"agent", {{"agent_id", log.researcher}, {"group", ""}}},
                                            {"area", areas[0]},
                                            {"human", true}}});

    std::vector<std::string> everyone;
    for (const auto& a : log.agents) everyone.push_back(a.id);
    everyone.push_back(log.researcher);
    for (int t = 1; t <= steps; ++t) {
        push(t, SystemPayload{"step_begin", Json::object()});
        const int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(utterances_per_step) + 1));
        for (int u = 0; u < k; ++u) {
            UtterancePayload p;
            p.actor = everyone[rng.uniform_index(everyone.size())];
            p.area = areas[rng.uniform_index(3)];
            p.text = "msg";
            if (rng.bernoulli(0.7)) {
                std::string target = p.actor;
                while (target == p.actor) target = everyone[rng.uniform_index(everyone.size())];
                p.target = target;
            }
            push(t, p);
        }
        for (const auto& a : log.agents) {
            if (rng.bernoulli(emotion_prob)) {
                push(t, EmotionPayload{a.id, static_cast<double>(rng.uniform_index(2001)) / 1000.0 - 1.0, ""});
            }
        }
        push(t, SystemPayload{"step_complete", Json::object()});
    }
    return log;
}

}  // namespace test_support
