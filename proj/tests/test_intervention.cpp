#include <doctest.h>

#include "socsim/intervention.hpp"
#include "socsim/scripted_backend.hpp"
#include "socsim/simulation.hpp"
#include "support.hpp"

using namespace socsim;

namespace {

ScenarioSpec study(const char* name) { return load_scenario(test_support::scenario_path(name)); }

InterventionStrategy strategy(Channel channel, int cadence, std::vector<std::string> templates) {
    InterventionStrategy s;
    s.id = "test";
    s.label = "Test";
    s.orientation = Orientation::economic;
    s.style = Style::emotional;
    s.channel = channel;
    s.cadence = cadence;
    s.message_templates = std::move(templates);
    return s;
}

}  // namespace

TEST_CASE("fill_template") {
    CHECK(fill_template("{addressee}, think about {topic}.", "Mia", "the plant") == "Mia, think about the plant.");
    CHECK(fill_template("{other} {addressee}{addressee}", "A", "t") == "{other} AA");
    CHECK(fill_template("{topic", "A", "t") == "{topic");
}

TEST_CASE("first active step") {
    CHECK(first_active_step(study("study1")) == 1);
    CHECK(first_active_step(study("study2")) == 26);
    auto s = study("study2");
    s.researcher.reset();
    CHECK_FALSE(first_active_step(s));
}

TEST_CASE("broadcast templates cycle on cadence") {
    const auto s = study("study1");
    Engine engine(s, build_scenario_population(s));
    const auto world = engine.init_world().world;
    const auto st = strategy(Channel::broadcast, 3, {"one {topic}", "two", "three"});
    std::vector<std::string> texts;
    for (int t = 1; t <= 21; ++t) {
        const auto a = next_intervention(st, t, world, s);
        if ((t - 1) % 3 != 0) {
            CHECK_FALSE(a);
            continue;
        }
        REQUIRE(a);
        CHECK(a->kind == Action::Kind::broadcast);
        CHECK(a->actor == "researcher");
        CHECK(a->tag == PersuasionTag{Orientation::economic, Style::emotional});
        texts.push_back(a->text);
    }
    REQUIRE(texts.size() == 7);
    CHECK(texts[0] == "one " + s.topic);
    CHECK(texts[1] == "two");
    CHECK(texts[2] == "three");
    CHECK(texts[3] == texts[0]);
    CHECK(texts[6] == texts[0]);
}

TEST_CASE("targeted rotation walks agents in id order") {
    const auto s = study("study2");
    Engine engine(s, build_scenario_population(s));
    const auto world = engine.init_world().world;
    const auto st = strategy(Channel::targeted_rotation, 1, {"{addressee}, hello"});
    std::vector<std::string> ids;
    for (const auto& [id, a] : world.agents) ids.push_back(id);
    for (int t = 1; t <= 25; ++t) CHECK_FALSE(next_intervention(st, t, world, s));
    for (int t = 26; t <= 75; ++t) {
        const auto a = next_intervention(st, t, world, s);
        REQUIRE(a);
        CHECK(a->kind == Action::Kind::chat);
        const auto& target = ids[static_cast<std::size_t>(t - 26) % ids.size()];
        CHECK(a->target == target);
        CHECK(a->text == world.agents.at(target).profile.display_name + ", hello");
    }

    // the policy walks over first when the target is elsewhere
    const ScriptedResearcherPolicy policy(s, st);
    auto w = world;
    w.step = 25;
    const auto acts = policy.actions(w);
    REQUIRE_FALSE(acts.empty());
    const auto& target = acts.back().target;
    if (w.agents.at(target).area != w.researcher->area) {
        REQUIRE(acts.size() == 2);
        CHECK(acts[0].kind == Action::Kind::move);
        CHECK(acts[0].area == w.agents.at(target).area);
    } else {
        CHECK(acts.size() == 1);
    }
    CHECK_THROWS_AS(ScriptedResearcherPolicy(s, strategy(Channel::broadcast, 1, {})), std::invalid_argument);
    CHECK_THROWS_AS(ScriptedResearcherPolicy(s, strategy(Channel::broadcast, 0, {"x"})), std::invalid_argument);
}

TEST_CASE("classify_attitude") {
    const ScaleSpec seven{1, 7, 4, {}};
    CHECK(classify_attitude(1, seven) == AttitudeClass::economic);
    CHECK(classify_attitude(3, seven) == AttitudeClass::economic);
    CHECK(classify_attitude(4, seven) == AttitudeClass::neutral);
    CHECK(classify_attitude(5, seven) == AttitudeClass::environmental);
    CHECK(classify_attitude(7, seven) == AttitudeClass::environmental);
    CHECK_THROWS_AS(classify_attitude(0, seven), std::out_of_range);
    CHECK_THROWS_AS(classify_attitude(8, seven), std::out_of_range);
    // even scale, no declared neutral: midpoint 5.5 has no neutral answers
    const ScaleSpec ten{1, 10, std::nullopt, {}};
    CHECK(scale_neutral(ten) == 5.5);
    CHECK(classify_attitude(5, ten) == AttitudeClass::economic);
    CHECK(classify_attitude(6, ten) == AttitudeClass::environmental);
}

TEST_CASE("surveys leave agent state alone") {
    const auto s = study("study1");
    Engine engine(s, build_scenario_population(s));
    ScriptedBackend backend(s);
    auto world = engine.init_world().world;
    for (int i = 0; i < 5; ++i) world = engine.run_step(world, backend, {}).world;
    const auto before = world;
    const auto round = administer_survey(s.surveys.at(1), world, engine, backend);
    REQUIRE(round.responses.size() == 30);
    CHECK(round.events.size() == 30);
    CHECK(world.next_seq == before.next_seq + 30);
    auto same = world;
    same.next_seq = before.next_seq;
    CHECK(same == before);
    for (std::size_t i = 1; i < round.responses.size(); ++i)
        CHECK(round.responses[i - 1].agent_id < round.responses[i].agent_id);
    for (const auto& r : round.responses) {
        CHECK(r.stance.has_value());
        CHECK(r.trust.has_value());
        CHECK(r.survey_id == "post");
        CHECK(r.step == 5);
    }

    // asking twice gives the same answers
    const auto again = administer_survey(s.surveys.at(1), world, engine, backend);
    for (std::size_t i = 0; i < again.responses.size(); ++i) {
        CHECK(again.responses[i].stance == round.responses[i].stance);
        CHECK(again.responses[i].trust == round.responses[i].trust);
    }

    auto only = s.surveys.at(1);
    only.respondent_groups = {"Neutral Residents"};
    CHECK(respondents(only, world).size() == 10);
}

TEST_CASE("survey due dates") {
    const auto s = study("study1");
    REQUIRE(surveys_due(s, 0).size() == 1);
    CHECK(surveys_due(s, 0)[0]->id == "pre");
    CHECK(surveys_due(s, 10).empty());
    REQUIRE(surveys_due(s, 21).size() == 1);
    CHECK(surveys_due(s, 21)[0]->id == "post");
}

TEST_CASE("survey table round trip") {
    const auto s = study("study1");
    ScriptedBackend backend(s);
    const auto run = run_simulation(s, backend, RunOptions{"env-rp", ExecPolicy::parallel, std::nullopt});
    const auto rows = survey_rows(run.events);
    REQUIRE(rows.size() == 60);
    for (const auto& r : rows) {
        CHECK(r.strategy == "env-rp");
        CHECK(r.backend == "scripted");
        CHECK_FALSE(r.group.empty());
        CHECK((r.at_step == 0 || r.at_step == 21));
        if (r.survey_id == "pre") CHECK_FALSE(r.trust.has_value());
    }
    const auto csv = survey_table_csv(rows);
    CHECK(parse_survey_table_csv(csv) == rows);
    CHECK(survey_table_csv(parse_survey_table_csv(csv)) == csv);

    // awkward cells survive quoting
    std::vector<SurveyRow> odd(1);
    odd[0].survey_id = "p";
    odd[0].agent_id = "a";
    odd[0].group = "Group, with \"quotes\"";
    odd[0].missing = true;
    odd[0].flags = "stance:missing;trust:missing";
    CHECK(parse_survey_table_csv(survey_table_csv(odd)) == odd);
}
