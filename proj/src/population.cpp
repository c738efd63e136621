#include "socsim/population.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "socsim/rng.hpp"

namespace socsim {
namespace {

template <typename E>
std::vector<E> expand(const std::map<E, int>& counts) {
    std::vector<E> column;
    for (const auto& [category, n] : counts) column.insert(column.end(), static_cast<std::size_t>(n), category);
    return column;
}

template <typename E>
void check_sum(const std::map<E, int>& counts, const IdentityGroup& g, const char* attribute) {
    int sum = 0;
    for (const auto& entry : counts) sum += entry.second;
    if (sum != g.group_size) {
        throw QuotaError(
            fmt::format("group '{}': {} quota sums to {}, expected {}", g.name, attribute, sum, g.group_size));
    }
}

// Stream ids for the independent column shuffles.
enum : std::uint64_t { kGenderStream = 1, kAgeStream = 2, kEducationStream = 3, kNameStream = 4 };

}  // namespace

std::vector<AgentProfile> build_population(const PopulationSpec& spec, std::uint64_t seed,
                                           const std::vector<Area>& areas) {
    for (const auto& g : spec.groups) {
        check_sum(g.quota.gender, g, "gender");
        check_sum(g.quota.age, g, "age");
        check_sum(g.quota.education, g, "education");
    }

    // Shared pool names are drawn once for all groups that rely on it.
    int shared_needed = 0;
    for (const auto& g : spec.groups) {
        if (g.name_pool.empty()) shared_needed += g.group_size;
    }
    std::vector<std::string> shared = spec.name_pool;
    if (static_cast<int>(shared.size()) < shared_needed) {
        throw QuotaError(fmt::format("name pool has {} names but {} are needed", shared.size(), shared_needed));
    }
    Rng shared_rng(derive_seed(seed, kNameStream, 0xffff));
    std::size_t shared_next = 0;

    std::vector<AgentProfile> agents;
    std::set<std::string> used_ids;
    std::size_t placement = 0;
    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
        const auto& g = spec.groups[gi];
        auto genders = expand(g.quota.gender);
        auto ages = expand(g.quota.age);
        auto educations = expand(g.quota.education);
        Rng(derive_seed(seed, kGenderStream, gi)).shuffle(std::span(genders));
        Rng(derive_seed(seed, kAgeStream, gi)).shuffle(std::span(ages));
        Rng(derive_seed(seed, kEducationStream, gi)).shuffle(std::span(educations));

        std::vector<std::string> names;
        if (!g.name_pool.empty()) {
            if (static_cast<int>(g.name_pool.size()) < g.group_size) {
                throw QuotaError(fmt::format("group '{}': name pool has {} names for {} agents", g.name,
                                             g.name_pool.size(), g.group_size));
            }
            names = g.name_pool;
            Rng rng(derive_seed(seed, kNameStream, gi));
            for (int i = 0; i < g.group_size; ++i) {
                const auto j = static_cast<std::size_t>(i) + rng.uniform_index(names.size() - static_cast<std::size_t>(i));
                std::swap(names[static_cast<std::size_t>(i)], names[j]);
            }
            names.resize(static_cast<std::size_t>(g.group_size));
        } else {
            for (int i = 0; i < g.group_size; ++i) {
                const auto j = shared_next + shared_rng.uniform_index(shared.size() - shared_next);
                std::swap(shared[shared_next], shared[j]);
                names.push_back(shared[shared_next++]);
            }
        }

        for (int i = 0; i < g.group_size; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            AgentProfile p;
            p.display_name = names[idx];
            p.agent_id = make_agent_id(p.display_name);
            if (p.agent_id.empty() || !used_ids.insert(p.agent_id).second) {
                throw QuotaError("duplicate or empty agent id for name '" + p.display_name + "'");
            }
            p.group = g.name;
            p.gender = genders[idx];
            p.age_band = ages[idx];
            p.education = educations[idx];
            if (!g.initial_area.empty()) {
                p.initial_area = g.initial_area;
            } else if (!areas.empty()) {
                p.initial_area = areas[placement % areas.size()].name;
            }
            ++placement;
            agents.push_back(std::move(p));
        }
    }
    return agents;
}

std::vector<AgentProfile> build_scenario_population(const ScenarioSpec& scenario) {
    auto agents = build_population(scenario.population, scenario.seed, scenario.areas);
    for (auto& a : agents) a.persona_prompt = render_persona_prompt(a, scenario);
    return agents;
}

namespace {

std::string_view age_phrase(AgeBand a) {
    switch (a) {
        case AgeBand::age_18_29: return "aged 18-29";
        case AgeBand::age_30_49: return "aged 30-49";
        case AgeBand::age_50_plus: return "aged 50 or older";
    }
    return "";
}

std::string_view education_phrase(Education e) {
    switch (e) {
        case Education::high_school: return "a high-school education";
        case Education::some_college: return "some college education";
        case Education::bachelor: return "a bachelor's degree";
        case Education::graduate: return "a graduate degree";
    }
    return "";
}

}  // namespace

std::string render_persona_prompt(const AgentProfile& profile, const ScenarioSpec& scenario) {
    const IdentityGroup* group = scenario.find_group(profile.group);
    std::string prompt = fmt::format("You are {}, a {} resident {} with {}.", profile.display_name,
                                     to_string(profile.gender), age_phrase(profile.age_band),
                                     education_phrase(profile.education));
    prompt += fmt::format(" You belong to the group \"{}\".", profile.group);
    if (group && !group->description.empty()) prompt += " " + group->description;
    if (group) {
        const auto& scale = scenario.stance_scale;
        const auto label = scale.labels.find(group->preset_stance);
        prompt += fmt::format(" On a {}-{} scale your starting stance is {}", scale.min, scale.max,
                              group->preset_stance);
        if (label != scale.labels.end()) prompt += fmt::format(" ({})", label->second);
        prompt += ".";
    }
    if (!scenario.topic.empty()) prompt += fmt::format(" The community is discussing {}.", scenario.topic);
    if (!profile.initial_area.empty()) prompt += fmt::format(" You are currently in the {}.", profile.initial_area);
    return prompt;
}

}  // namespace socsim
