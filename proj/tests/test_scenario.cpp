#include <doctest.h>

#include <fstream>
#include <sstream>

#include "socsim/population.hpp"
#include "socsim/scenario.hpp"
#include "support.hpp"

using namespace socsim;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::string validation_message(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("bundled study1") {
    const auto s = load_scenario(test_support::scenario_path("study1"));
    CHECK(s.population.total_size() == 30);
    REQUIRE(s.population.groups.size() == 3);
    for (const auto& g : s.population.groups) CHECK(g.group_size == 10);
    CHECK(s.total_steps() == 21);
    CHECK(s.strategies.size() == 4);
    CHECK(s.stance_scale == ScaleSpec{1, 7, 4, s.stance_scale.labels});
    CHECK(s.trust_scale.min == 1);
    CHECK(s.trust_scale.max == 10);
    CHECK(s.find_group("Economic Development Supporters")->preset_stance == 2);
    CHECK(s.find_group("Neutral Residents")->preset_stance == 4);
    CHECK(s.find_group("Environmental Advocates")->preset_stance == 6);
}

TEST_CASE("bundled study2") {
    const auto s = load_scenario(test_support::scenario_path("study2"));
    CHECK(s.population.total_size() == 10);
    CHECK(s.total_steps() == 75);
    REQUIRE(s.phases.phases.size() == 3);
    CHECK(s.phases.phases[0].name == "Immersive Observation");
    CHECK(s.phases.phases[0].start_step == 1);
    CHECK(s.phases.phases[0].end_step == 25);
    CHECK(s.phases.phases[1].start_step == 26);
    CHECK(s.phases.phases[2].start_step == 51);
    CHECK(s.phases.phases[2].end_step == 75);
    const std::map<std::string, int> roles{{"Cafe Owner", 1},        {"Staff", 2},    {"Regular Customers", 2},
                                           {"Students", 2},          {"Tourists", 2}, {"Cleaner", 1}};
    REQUIRE(s.population.groups.size() == 6);
    for (const auto& g : s.population.groups) CHECK(g.group_size == roles.at(g.name));
    REQUIRE(s.relationships);
    CHECK(s.relationships->entries.size() == 90);
    CHECK(validate_relationships(*s.relationships, build_scenario_population(s)).empty());
    CHECK(s.anchor_terms == std::vector<std::string>{"frameworks", "alignment", "shared values"});
}

TEST_CASE("round trip") {
    for (const char* name : {"study1", "study2"}) {
        const auto s = load_scenario(test_support::scenario_path(name));
        const auto text = serialize_scenario(s);
        const auto again = parse_scenario(text);
        CHECK(again == s);
        CHECK(serialize_scenario(again) == text);
        CHECK(scenario_hash(again) == scenario_hash(s));
    }
}

TEST_CASE("validation errors name the invariant") {
    const std::string base = slurp(test_support::scenario_path("study2"));
    CHECK(validation_message(replace_once(base, "start: 26", "start: 30")).find("phases not contiguous") !=
          std::string::npos);
    CHECK(validation_message(replace_once(base, "start: 26", "start: 20")).find("overlap") != std::string::npos);
    CHECK(validation_message(replace_once(base, "start: 1\n", "start: 2\n")).find("start at step 1") !=
          std::string::npos);
    CHECK_FALSE(validation_message(replace_once(base, "preset_stance: 2", "preset_stance: 9")).empty());
    CHECK_THROWS_WITH(parse_scenario(replace_once(base, "seed: 7", "")), doctest::Contains("seed"));

    const std::string s1 = slurp(test_support::scenario_path("study1"));
    CHECK(validation_message(replace_once(s1, "gender: {male: 4, female: 6}", "gender: {male: 5, female: 6}"))
              .find("sum to 11") != std::string::npos);
    CHECK(validation_message(replace_once(s1, "  neutral: 4\n", "  neutral: 7\n")).find("strictly between") !=
          std::string::npos);

    CHECK_THROWS_AS(parse_scenario("name: [unclosed"), ScenarioParseError);
    CHECK_THROWS(load_scenario("/nonexistent/file.scenario"));
}

TEST_CASE("relationship validation") {
    std::vector<AgentProfile> agents(3);
    agents[0].agent_id = "a";
    agents[1].agent_id = "b";
    agents[2].agent_id = "c";
    RelationshipMatrix m;
    for (const auto& x : agents)
        for (const auto& y : agents)
            if (x.agent_id != y.agent_id) m.entries[{x.agent_id, y.agent_id}] = Attitude::neutral;
    CHECK(validate_relationships(m, agents).empty());

    auto self = m;
    self.entries[{"a", "a"}] = Attitude::positive;
    const auto e1 = validate_relationships(self, agents);
    CHECK(std::find(e1.begin(), e1.end(), "self-entry a") != e1.end());

    auto five = m;
    five.entries.erase({"c", "b"});
    const auto e2 = validate_relationships(five, agents);
    REQUIRE(e2.size() == 1);
    CHECK(e2[0] == "missing pair (c, b)");
}
