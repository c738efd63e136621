// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "oracles.hpp"
#include "socsim/boundary.hpp"
#include "socsim/cli.hpp"
#include "socsim/engine.hpp"
#include "socsim/intervention.hpp"
#include "socsim/llm_backend.hpp"
#include "socsim/population.hpp"
#include "socsim/scripted_backend.hpp"
#include "socsim/simulation.hpp"
#include "socsim/testing/stub_chat_server.hpp"

using namespace socsim;
using namespace oracles;
namespace fs = std::filesystem;

namespace {

// Collects the first few failed expectations of one criterion.
struct Verdict {
    std::vector<std::string> failures;
    std::string note;
    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
    }
    bool ok() const { return failures.empty(); }
};

ScenarioSpec study(const char* name) { return load_scenario(test_support::scenario_path(name)); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
}

// ---- criteria ----

void population_quotas(Verdict& v) {
    const auto s = study("study1");
    struct Q {
        const char* group;
        std::array<int, 2> g;
        std::array<int, 3> a;
        std::array<int, 4> e;
    };
    const std::vector<Q> quotas{{"Economic Development Supporters", {4, 6}, {3, 2, 5}, {3, 4, 1, 2}},
                                {"Environmental Advocates", {4, 6}, {2, 6, 2}, {4, 4, 2, 0}},
                                {"Neutral Residents", {6, 4}, {2, 7, 1}, {1, 3, 5, 1}}};
    const std::vector<std::uint64_t> seeds{s.seed, 0, 1, 2, 99, 12345};
    for (const auto seed : seeds) {
        const auto agents = build_population(s.population, seed, s.areas);
        v.expect(agents.size() == 30, "population size");
        for (const auto& q : quotas) {
            std::array<int, 2> g{};
            std::array<int, 3> a{};
            std::array<int, 4> e{};
            for (const auto& p : agents) {
                if (p.group != q.group) continue;
                ++g[p.gender == Gender::male ? 0 : 1];
                ++a[static_cast<std::size_t>(p.age_band)];
                ++e[static_cast<std::size_t>(p.education)];
            }
            v.expect(g == q.g && a == q.a && e == q.e, fmt::format("{} marginals (seed {})", q.group, seed));
        }
    }
    v.note = fmt::format("{} seeds", seeds.size());
}

void metric_oracles(Verdict& v) {
    Rng rng(7001);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(60);
        const auto f = random_stances(rng, n), p = random_stances(rng, n), t = random_stances(rng, n);
        MetricsConfig cfg;
        cfg.tad_stance_delta_min = 1 + static_cast<double>(rng.uniform_index(3));
        cfg.tad_trust_max = 1 + static_cast<int>(rng.uniform_index(7));
        v.expect(std::fabs(ivb(f, k17) - oracle_ivb(f)) <= 1e-12, "ivb");
        v.expect(std::fabs(persuasion_sensitivity(f, p) - oracle_ps(f, p)) <= 1e-12, "ps");
        v.expect(std::fabs(tad_rate(f, p, t, cfg) -
                           oracle_tad(f, p, t, static_cast<int>(cfg.tad_stance_delta_min), cfg.tad_trust_max)) <= 1e-12,
                 "tad");
    }
    for (int rep = 0; rep < 200; ++rep) {
        const auto log = test_support::random_log(rng, 2 + static_cast<int>(rng.uniform_index(12)), 3,
                                                  1 + static_cast<int>(rng.uniform_index(25)), 8);
        const auto m = interaction_matrix(log.events, grouping_from_log(log.events));
        const auto o = oracle_matrix(log);
        for (const auto& a : m.groups)
            for (const auto& b : m.groups) {
                const auto it = o.find({a, b});
                v.expect(m.at(a, b) == (it == o.end() ? 0 : it->second), "interaction_matrix");
            }
    }
    for (int rep = 0; rep < 200; ++rep) {
        const auto log = test_support::random_log(rng, 2 + static_cast<int>(rng.uniform_index(10)), 3,
                                                  1 + static_cast<int>(rng.uniform_index(20)), 3, 0.5);
        const int window = 1 + static_cast<int>(rng.uniform_index(4));
        const auto g = emotion_trajectories(log.events, grouping_from_log(log.events), window);
        const auto o = oracle_emotions(log, window);
        v.expect(g.groups.size() == o.size(), "emotion_trajectories groups");
        for (std::size_t i = 0; i < g.groups.size() && o.count(g.groups[i]); ++i) {
            const auto& ov = o.at(g.groups[i]);
            v.expect(ov.size() == g.values[i].size(), "emotion_trajectories length");
            for (std::size_t t = 0; t < std::min(ov.size(), g.values[i].size()); ++t)
                v.expect(std::fabs(g.values[i][t] - ov[t]) <= 1e-12, "emotion_trajectories value");
        }
    }
    for (int rep = 0; rep < 200; ++rep) {
        const auto log = test_support::random_log(rng, 2 + static_cast<int>(rng.uniform_index(10)), 2,
                                                  1 + static_cast<int>(rng.uniform_index(30)), 6);
        const int window = 1 + static_cast<int>(rng.uniform_index(6));
        for (bool anywhere : {false, true}) {
            const auto s = participation_series(log.events, log.researcher, window,
                                                anywhere ? ReplyScope::broadcasts_anywhere : ReplyScope::same_area);
            std::vector<int> counts;
            for (const auto& w : s) counts.push_back(w.count);
            v.expect(counts == oracle_participation(log, window, anywhere), "participation_series");
        }
    }
    v.note = "200 datasets per metric";
}

void tad_anchor(Verdict& v) {
    std::vector<int> f(30, 4), p(30, 4), t(30, 6);
    for (std::size_t i = 0; i < 12; ++i) f[i] = 6, t[i] = 2;
    const MetricsConfig cfg;
    const double tad = tad_rate(f, p, t, cfg);
    v.expect(tad == 40.0, fmt::format("12 of 30 gave {}", tad));
    v.expect(tad_rate(std::vector<int>{5}, std::vector<int>{4}, std::vector<int>{3}, cfg) == 100.0,
             "|delta| = 1 with trust 3 not counted");
    v.note = fmt::format("TAD = {:.1f}", tad);
}

void ci_anchor(Verdict& v) {
    std::vector<double> x(10, 7.3);
    const double d = 0.95 * std::sqrt(0.9);
    for (std::size_t i = 0; i < 10; ++i) x[i] += i % 2 ? -d : d;
    const auto s = summarize_sample(x);
    v.expect(std::fabs(s.mean - 7.3) < 1e-12 && std::fabs(s.sd - 0.95) < 1e-12, "sample moments");
    v.expect(std::fabs(s.ci_low - 6.62) <= 0.01 && std::fabs(s.ci_high - 7.98) <= 0.01,
             fmt::format("CI [{:.4f}, {:.4f}]", s.ci_low, s.ci_high));
    v.note = fmt::format("[{:.2f}, {:.2f}]", s.ci_low, s.ci_high);
}

void anova_tukey(Verdict& v) {
    using clock = std::chrono::steady_clock;
    clock::duration spent{};
    Rng rng(7002);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t a = 2 + rng.uniform_index(3), b = 2 + rng.uniform_index(2), n = 2 + rng.uniform_index(9);
        const auto y = random_design(rng, a, b, n, 0.4 * rng.uniform01());
        auto t0 = clock::now();
        const auto r = two_way_anova(to_dataset(y));
        spent += clock::now() - t0;
        const auto o = oracle_two_way(y);
        v.expect(rel_close(r.row("A").f, o.f_a, 1e-8) && rel_close(r.row("B").f, o.f_b, 1e-8) &&
                     rel_close(r.row("AxB").f, o.f_ab, 1e-8),
                 "F statistics");
        const double sum = r.row("A").ss + r.row("B").ss + r.row("AxB").ss + r.row("Error").ss;
        v.expect(std::fabs(sum - r.ss_total) <= 1e-9 * r.ss_total, "SS identity");

        std::vector<std::pair<std::string, std::vector<double>>> groups;
        std::vector<std::vector<double>> plain;
        for (std::size_t i = 0; i < a; ++i) {
            std::vector<double> g;
            for (const auto& cell : y[i]) g.insert(g.end(), cell.begin(), cell.end());
            groups.emplace_back("A" + std::to_string(i), g);
            plain.push_back(g);
        }
        t0 = clock::now();
        const auto tk = tukey_hsd(groups, 0.05);
        spent += clock::now() - t0;
        const double df = one_way_anova(plain).row("Within").df;
        for (const auto& p : tk.pairs) {
            v.expect(std::fabs(p.p_adj - (1.0 - oracle_ptukey(p.q, static_cast<int>(a), df))) < 1e-4,
                     "Tukey adjusted p");
        }
    }
    const auto r = two_way_anova(to_dataset(random_design(rng, 4, 3, 10, 0.5)));
    v.expect(r.row("A").df == 3 && r.row("Error").df == 108, "df (3, 108)");
    std::vector<std::vector<double>> g(4);
    for (auto& x : g)
        for (int i = 0; i < 21; ++i) x.push_back(rng.uniform01());
    const auto one = one_way_anova(g);
    v.expect(one.row("Between").df == 3 && one.row("Within").df == 80, "df (3, 80)");
    const double secs = std::chrono::duration<double>(spent).count();
    v.expect(secs < 30.0, fmt::format("took {:.1f} s", secs));
    v.note = fmt::format("50 designs, {:.2f} s", secs);
}

void determinism(Verdict& v) {
    const fs::path tmp = fs::temp_directory_path() / fmt::format("socsim-accept-{}", ::getpid());
    fs::remove_all(tmp);
    const auto scenario = test_support::scenario_path("study1").string();
    const auto dir = [&](const char* d) { return (tmp / d).string(); };
    v.expect(cli({"run", "--scenario", scenario, "--policy", "env-rp", "--out", dir("a")}) == 0, "first run");
    v.expect(cli({"run", "--scenario", scenario, "--policy", "env-rp", "--out", dir("b")}) == 0, "second run");
    const auto log = slurp(tmp / "a/events.jsonl");
    v.expect(!log.empty() && log == slurp(tmp / "b/events.jsonl"), "logs differ");

    const auto s = study("study1");
    ScriptedBackend backend(s);
    const auto live = run_simulation(s, backend, RunOptions{"env-rp", ExecPolicy::parallel, std::nullopt});
    v.expect(serialize_events(live.events) == log, "library run differs from the cli log");
    v.expect(replay(read_event_log(tmp / "a/events.jsonl")) == live.final_world, "replayed world differs");

    v.expect(cli({"replay", "--log", dir("a") + "/events.jsonl", "--out", dir("r")}) == 0, "replay");
    v.expect(cli({"metrics", "--log", dir("a") + "/events.jsonl", "--out", dir("m1"), "--rescale-trust"}) == 0,
             "metrics on live log");
    v.expect(cli({"metrics", "--log", dir("r") + "/events.jsonl", "--out", dir("m2"), "--rescale-trust"}) == 0,
             "metrics on replayed log");
    for (const char* f : {"report.txt", "report.json"}) {
        const auto a = slurp(tmp / "m1" / f);
        v.expect(!a.empty() && a == slurp(tmp / "m2" / f), std::string(f) + " differs");
    }
    fs::remove_all(tmp);
    v.note = fmt::format("{} bytes of log", log.size());
}

void study1_regression(Verdict& v) {
    const auto s = study("study1");
    ScriptedBackend backend(s);
    const auto run = run_simulation(s, backend, RunOptions{"env-rp", ExecPolicy::parallel, std::nullopt});
    v.expect(run.ok, "run failed");
    v.expect(run.final_world.step == 21, "21 steps");
    const auto rows = survey_rows(run.events);
    int pre = 0, post = 0, env = 0;
    const auto& scale = s.stance_scale;
    for (const auto& r : rows) {
        if (r.survey_id == "pre") ++pre;
        if (r.survey_id != "post") continue;
        ++post;
        if (r.group == "Neutral Residents" && r.stance &&
            classify_attitude(*r.stance, scale) == AttitudeClass::environmental)
            ++env;
    }
    v.expect(pre == 30 && post == 30, "pre and post surveys");
    v.expect(env >= 9, fmt::format("{} of 10 neutral agents environmental", env));
    v.expect(env == 10, fmt::format("expected exactly 10, got {}", env));
    v.note = fmt::format("{}/10 neutral agents environmental", env);
}

void study2_regression(Verdict& v) {
    const auto s = study("study2");
    ScriptedBackend backend(s);
    const auto run = run_simulation(s, backend, RunOptions{"interview", ExecPolicy::parallel, std::nullopt});
    v.expect(run.ok, "run failed");
    v.expect(run.final_world.agents.size() == 10, "10 agents");
    v.expect(run.final_world.step == 75, "75 steps");
    std::vector<int> changes;
    int late_injections = 0;
    for (const auto& e : run.events) {
        if (e.as<PhaseChangePayload>()) changes.push_back(e.step);
        if (e.as<InjectionPayload>() && e.step >= 51) ++late_injections;
    }
    v.expect(changes == std::vector<int>{26, 51}, "phase changes at 26 and 51");
    v.expect(late_injections >= 1, "injection in phase 3");
    std::vector<AgentProfile> agents;
    for (const auto& [id, a] : run.final_world.agents) agents.push_back(a.profile);
    v.expect(s.relationships && s.relationships->entries.size() == 90 &&
                 validate_relationships(*s.relationships, agents).empty(),
             "relationship matrix");

    std::set<std::string> ids{"researcher"};
    for (const auto& a : agents) ids.insert(a.agent_id);
    int cliques = 0;
    for (const auto& [from, to] : std::vector<std::pair<int, int>>{{1, 25}, {26, 50}, {51, 75}}) {
        for (const auto& c : detect_cliques(build_graph(run.events, from, to), 3)) {
            ++cliques;
            v.expect(c.size() >= 2 && c.size() <= ids.size(), "clique size");
            for (const auto& m : c) v.expect(ids.count(m) == 1, "clique member " + m);
        }
    }
    v.expect(cliques >= 1, "clique series empty");
    const auto c = centrality_series(run.events, 25);
    v.expect(c.windows.size() == 3, "centrality windows");
    std::size_t points = 0;
    for (const auto& [id, vals] : c.values)
        for (double x : vals) {
            ++points;
            v.expect(x >= 0.0 && x <= 1.0, "centrality bounds");
        }
    v.expect(points > 0, "centrality series empty");
    v.note = fmt::format("{} clusters, {} centrality points", cliques, points);
}

void backend_contract(Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = study("study2");
    testing::StubChatServer stub;
    BackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    cfg.model = "stub";
    cfg.timeout = std::chrono::milliseconds(2000);
    cfg.backoff = std::chrono::milliseconds(20);
    LlmBackend backend(cfg);

    // 429 then success
    const ChatClient client(cfg);
    stub.push(429, R"({"error":"slow down"})");
    stub.reply("pong");
    v.expect(client.complete({{"user", "ping"}}) == "pong", "retry after 429");
    v.expect(stub.requests().size() == 2, "two requests");

    // malformed replies during a real step
    stub.set_fallback("Let me think about that for a while.");
    Engine engine(s, build_scenario_population(s), ExecPolicy::serial);
    const auto r = engine.run_step(engine.init_world().world, backend, {});
    int failures = 0;
    for (const auto& e : r.events) {
        if (const auto* p = e.system("parse_failure"); p && p->data.at("detail").get<std::string>().rfind("parse_failure", 0) == 0)
            ++failures;
    }
    v.expect(failures == 10, fmt::format("{} parse_failure events", failures));
    for (const auto& [id, a] : r.world.agents)
        v.expect(a.last_action && a.last_action->kind == Action::Kind::idle, "idle fallback");

    // out-of-scale survey answer
    stub.reply(R"({"stance": 9, "trust": 4})");
    const auto& agent = r.world.agents.begin()->second;
    const auto obs = engine.perceive(r.world, agent.profile.agent_id);
    Questionnaire q{"post", 1, {}};
    q.questions.push_back(Question{"stance", "stance?", Measure::stance, ScaleSpec{1, 7, 4, {}}});
    q.questions.push_back(Question{"trust", "trust?", Measure::trust, ScaleSpec{1, 10, std::nullopt, {}}});
    const auto ans = backend.answer_survey(engine.context(r.world, agent, obs), q);
    v.expect(ans.stance == 7 && ans.trust == 4, "clamped answer");
    v.expect(ans.flags == std::vector<std::string>{"stance:out-of-range:9"}, "flag recorded");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.expect(secs < 10.0, fmt::format("took {:.1f} s", secs));
    v.note = fmt::format("{:.2f} s", secs);
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
        {"population quotas", population_quotas},
        {"metric oracles", metric_oracles},
        {"TAD anchor", tad_anchor},
        {"CI anchor", ci_anchor},
        {"ANOVA and Tukey", anova_tukey},
        {"determinism and replay", determinism},
        {"study 1 regression", study1_regression},
        {"study 2 regression", study2_regression},
        {"backend contract", backend_contract},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        try {
            fn(v);
        } catch (const std::exception& e) {
            v.failures.push_back(std::string("exception: ") + e.what());
        }
        ++index;
        if (v.ok()) {
            std::cout << fmt::format("PASS {} {} ({})\n", index, name, v.note);
        } else {
            ++failed;
            std::string why;
            for (const auto& f : v.failures) why += (why.empty() ? "" : "; ") + f;
            std::cout << fmt::format("FAIL {} {}: {}\n", index, name, why);
        }
        std::cout.flush();
    }
    return failed ? 1 : 0;
}
