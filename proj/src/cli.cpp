#include "socsim/cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "socsim/boundary.hpp"
#include "socsim/llm_backend.hpp"
#include "socsim/metrics.hpp"
#include "socsim/scripted_backend.hpp"
#include "socsim/service.hpp"
#include "socsim/simulation.hpp"
#include "socsim/stats.hpp"

namespace fs = std::filesystem;

namespace socsim {
namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct BackendFlags {
    std::string kind = "scripted";
    BackendConfig llm;
    long timeout_ms = 30000;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
    cmd->add_option("--backend", f.kind, "scripted or llm")->check(CLI::IsMember({"scripted", "llm"}));
    cmd->add_option("--endpoint", f.llm.endpoint, "chat-completion URL (llm backend)");
    cmd->add_option("--model", f.llm.model, "model name (llm backend)");
    cmd->add_option("--temperature", f.llm.temperature);
    cmd->add_option("--retries", f.llm.max_retries)->check(CLI::NonNegativeNumber);
    cmd->add_option("--timeout-ms", f.timeout_ms)->check(CLI::PositiveNumber);
    cmd->add_option("--api-key-env", f.llm.api_key_env, "environment variable holding the API key");
}

std::unique_ptr<Backend> make_backend(BackendFlags f, const ScenarioSpec& scenario) {
    if (f.kind == "scripted") return std::make_unique<ScriptedBackend>(scenario);
    f.llm.timeout = std::chrono::milliseconds(f.timeout_ms);
    return std::make_unique<LlmBackend>(f.llm);
}

ExecPolicy exec_from(const std::string& s) { return s == "serial" ? ExecPolicy::serial : ExecPolicy::parallel; }

std::optional<std::string> policy_from(const std::string& s) {
    if (s.empty() || s == "none") return std::nullopt;
    return s;
}

// ---- run ----

struct RunArgs {
    std::string scenario;
    std::string policy;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string exec = "parallel";
    BackendFlags backend;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    ScenarioSpec scenario = load_scenario(a.scenario);
    auto backend = make_backend(a.backend, scenario);
    RunOptions opts;
    opts.strategy = policy_from(a.policy);
    opts.exec = exec_from(a.exec);
    opts.seed = a.seed;
    const RunLog log = run_simulation(std::move(scenario), *backend, opts);

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    write_event_log(dir / "events.jsonl", log.events);
    write_file(dir / "surveys.csv", survey_table_csv(survey_rows(log.events)));
    write_file(dir / "manifest.json", log.manifest.dump(2) + "\n");
    if (!log.ok) {
        err << "run failed: " << log.error << "\npartial log kept in " << (dir / "events.jsonl").string() << "\n";
        return 1;
    }
    out << fmt::format("{}: {} events, {} steps -> {}\n", log.manifest.value("run_id", ""), log.events.size(),
                       log.final_world.step, dir.string());
    return 0;
}

// ---- replay ----

int cmd_replay(const std::string& log_path, const std::string& out_dir, std::ostream& out) {
    const auto events = read_event_log(log_path);
    const WorldState world = replay(events);
    const Json j = to_json(world);
    if (!out_dir.empty()) {
        const fs::path dir = out_dir;
        fs::create_directories(dir);
        write_event_log(dir / "events.jsonl", events);
        write_file(dir / "world.json", j.dump(2) + "\n");
    }
    out << j.dump(2) << "\n";
    return 0;
}

// ---- metrics ----

struct MetricsArgs {
    std::vector<std::string> logs;
    std::string out_dir = "metrics";
    bool rescale_trust = false;
    double tad_delta = 1.0;
    int tad_trust_max = 3;
    std::string preset_source = "assigned";
    int smoothing = 1;
    int window = 5;
    int clique_min_weight = 3;
    std::string exec = "parallel";
};

std::string run_id_of(const std::vector<Event>& log, const std::string& fallback) {
    for (const auto& e : log) {
        if (const auto* s = e.system("run_info")) return s->data.value("run_id", fallback);
    }
    return fallback;
}

// Analytics that need no surveys. Written even when metrics are refused.
void write_analytics(const std::vector<Event>& log, const fs::path& dir, const MetricsArgs& a) {
    const ExecPolicy exec = exec_from(a.exec);
    const auto grouping = grouping_from_log(log);
    const auto m = interaction_matrix(log, grouping);
    write_file(dir / "interaction_matrix.json", Json{{"groups", m.groups}, {"counts", m.counts}}.dump(2) + "\n");
    const auto em = emotion_trajectories(log, grouping, a.smoothing, exec);
    write_file(dir / "emotions.json",
               Json{{"smoothing", a.smoothing}, {"groups", em.groups}, {"values", em.values}}.dump(2) + "\n");

    std::string researcher;
    int last = 0;
    for (const auto& e : log) {
        if (const auto* s = e.system("world_init")) researcher = s->data.value("researcher_id", "");
        last = std::max(last, e.step);
    }
    if (!researcher.empty()) {
        Json w = Json::array();
        for (const auto& c : participation_series(log, researcher, a.window)) {
            w.push_back(Json{{"start", c.start_step}, {"end", c.end_step}, {"count", c.count}});
        }
        write_file(dir / "participation.json", Json{{"researcher", researcher}, {"windows", w}}.dump(2) + "\n");
    }
    const auto c = centrality_series(log, a.window, exec);
    write_file(dir / "centrality.json", Json{{"windows", c.windows}, {"values", c.values}}.dump(2) + "\n");
    if (last >= 1) {
        const auto g = build_graph(log, 1, last);
        Json gj = to_json(g);
        gj["cliques"] = detect_cliques(g, a.clique_min_weight);
        write_file(dir / "graph.json", gj.dump(2) + "\n");
    }
}

int cmd_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
    MetricsConfig cfg;
    cfg.rescale_trust = a.rescale_trust;
    cfg.tad_stance_delta_min = a.tad_delta;
    cfg.tad_trust_max = a.tad_trust_max;
    cfg.s_preset_source = a.preset_source == "pre_survey" ? PresetSource::pre_survey : PresetSource::assigned;
    cfg.validate();

    const fs::path dir = a.out_dir;
    std::vector<MetricsRow> rows;
    std::vector<std::string> refused;
    for (std::size_t i = 0; i < a.logs.size(); ++i) {
        const auto log = read_event_log(a.logs[i]);
        const fs::path sub = a.logs.size() == 1 ? dir : dir / run_id_of(log, fmt::format("log{}", i));
        write_analytics(log, sub, a);
        try {
            rows.push_back(metrics_from_log(log, cfg));
        } catch (const MetricsError& e) {
            refused.push_back(fmt::format("{}: {}", a.logs[i], e.what()));
        }
    }
    if (!rows.empty()) {
        const auto report = render_metrics_report(rows);
        write_file(dir / "report.txt", report.text);
        write_file(dir / "report.json", report.json.dump(2) + "\n");
        out << report.text;
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    }
    for (const auto& r : refused) err << "metrics refused for " << r << "\n";
    return refused.empty() ? 0 : 1;
}

// ---- stats ----

struct StatsArgs {
    std::vector<std::string> tables;
    std::string measure = "stance";
    std::string survey;
    double alpha = 0.05;
    std::string out;
    std::string exec = "parallel";
};

Json anova_json(const AnovaResult& r) {
    Json rows = Json::array();
    for (const auto& e : r.rows) {
        rows.push_back(Json{{"effect", e.effect}, {"df", e.df}, {"ss", e.ss}, {"ms", e.ms}, {"f", e.f}, {"p", e.p},
                            {"partial_eta2", e.partial_eta2}});
    }
    return Json{{"rows", rows}, {"ss_total", r.ss_total}};
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
    std::vector<SurveyRow> all;
    for (const auto& t : a.tables) {
        auto rows = parse_survey_table_csv(read_file(t));
        all.insert(all.end(), rows.begin(), rows.end());
    }
    // Latest answer per (strategy, agent) unless a survey id is named.
    std::map<std::pair<std::string, std::string>, const SurveyRow*> pick;
    for (const auto& r : all) {
        const auto v = a.measure == "trust" ? r.trust : r.stance;
        if (r.missing || !v) continue;
        if (!a.survey.empty() && r.survey_id != a.survey) continue;
        auto& slot = pick[{r.strategy, r.agent_id}];
        if (!slot || r.at_step >= slot->at_step) slot = &r;
    }
    if (pick.empty()) throw Failure("no usable " + a.measure + " answers in the survey table");

    FactorialDataset data;
    std::vector<std::pair<std::string, std::vector<double>>> by_strategy;
    for (const auto& [key, r] : pick) {
        const double v = *(a.measure == "trust" ? r->trust : r->stance);
        data.observations.push_back({v, r->strategy, r->group});
        auto it = std::find_if(by_strategy.begin(), by_strategy.end(),
                               [&](const auto& p) { return p.first == r->strategy; });
        if (it == by_strategy.end()) {
            by_strategy.emplace_back(r->strategy, std::vector<double>{});
            it = by_strategy.end() - 1;
        }
        it->second.push_back(v);
    }

    Json doc{{"measure", a.measure}, {"n", data.observations.size()}};
    std::ostringstream text;
    text << fmt::format("Measure: {} (n = {})\n", a.measure, data.observations.size());
    std::set<std::string> groups;
    for (const auto& o : data.observations) groups.insert(o.factor_b);

    if (by_strategy.size() >= 2 && groups.size() >= 2) {
        const auto r = two_way_anova(data);
        doc["two_way_anova"] = anova_json(r);
        text << "\nTwo-way ANOVA (A = strategy, B = group)\n";
        for (const auto& e : r.rows) {
            if (e.effect == "Error") {
                text << fmt::format("  {:<6} df={:<4} SS={:.4f}\n", e.effect, e.df, e.ss);
            } else {
                const auto& err_row = r.row("Error");
                text << fmt::format("  {:<6} F({}, {}) = {:.2f}, p = {}, partial eta2 = {:.2f}\n", e.effect, e.df,
                                    err_row.df, e.f, format_p(e.p), e.partial_eta2);
            }
        }
    }
    if (by_strategy.size() >= 2) {
        std::vector<std::vector<double>> groups_only;
        for (const auto& [k, v] : by_strategy) groups_only.push_back(v);
        const auto one = one_way_anova(groups_only);
        doc["one_way_anova"] = anova_json(one);
        text << fmt::format("\nOne-way ANOVA over strategy: F({}, {}) = {:.2f}, p = {}\n", one.row("Between").df,
                            one.row("Within").df, one.row("Between").f, format_p(one.row("Between").p));

        const auto t = tukey_hsd(by_strategy, a.alpha, exec_from(a.exec));
        Json pairs = Json::array();
        text << fmt::format("\nTukey HSD (alpha = {})\n", a.alpha);
        for (const auto& p : t.pairs) {
            pairs.push_back(Json{{"a", p.a}, {"b", p.b}, {"mean_diff", p.mean_diff}, {"q", p.q}, {"p_adj", p.p_adj},
                                 {"ci", {p.ci_low, p.ci_high}}, {"significant", p.significant},
                                 {"cohens_d", p.cohens_d}});
            text << fmt::format("  {} vs {}: mean difference = {:.2f}, p = {}, 95% CI [{:.2f}, {:.2f}], d = {:.2f}{}\n",
                                p.a, p.b, p.mean_diff, format_p(p.p_adj), p.ci_low, p.ci_high, p.cohens_d,
                                p.significant ? " *" : "");
        }
        doc["tukey"] = Json{{"alpha", t.alpha}, {"q_crit", t.q_crit}, {"ms_error", t.ms_error},
                            {"df_error", t.df_error}, {"pairs", pairs}};
    } else {
        text << "\nOnly one strategy present; nothing to compare.\n";
    }
    if (!a.out.empty()) write_file(a.out, doc.dump(2) + "\n");
    out << text.str();
    return 0;
}

// ---- serve ----

struct ServeArgs {
    std::string scenario;
    std::string log;
    std::string mode = "interactive";
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string policy;
    std::string exec = "parallel";
    BackendFlags backend;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    ServiceOptions opts;
    opts.host = a.host;
    opts.port = a.port;
    opts.exec = exec_from(a.exec);
    opts.strategy = policy_from(a.policy);
    std::unique_ptr<Service> svc;
    if (!a.log.empty()) {
        svc = std::make_unique<Service>(read_event_log(a.log), opts);
    } else {
        opts.mode = a.mode == "headless" ? SessionMode::headless : SessionMode::interactive;
        ScenarioSpec scenario = load_scenario(a.scenario);
        auto backend = make_backend(a.backend, scenario);
        svc = std::make_unique<Service>(std::move(scenario), std::move(backend), opts);
    }
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by the service threads
    const int port = svc->start();
    out << fmt::format("listening on http://{}:{}", a.host, port) << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    svc->stop();
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"socsim: agent-based social simulation with an embedded researcher"};
    app.require_subcommand(1);

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "headless full run");
    c_run->add_option("--scenario", run.scenario, "scenario file")->required()->check(CLI::ExistingFile);
    c_run->add_option("--policy", run.policy, "researcher strategy id, or none");
    c_run->add_option("--seed", run.seed, "override the scenario seed");
    c_run->add_option("--out", run.out_dir, "output directory");
    c_run->add_option("--exec", run.exec)->check(CLI::IsMember({"serial", "parallel"}));
    add_backend_flags(c_run, run.backend);

    std::string replay_log, replay_out;
    auto* c_replay = app.add_subcommand("replay", "rebuild the final world from an event log");
    c_replay->add_option("--log", replay_log)->required()->check(CLI::ExistingFile);
    c_replay->add_option("--out", replay_out, "write events.jsonl and world.json here");

    MetricsArgs met;
    auto* c_met = app.add_subcommand("metrics", "persuasion metrics, matrices and series from logs");
    c_met->add_option("--log", met.logs, "event log(s); one report row each")->required()->check(CLI::ExistingFile);
    c_met->add_option("--out", met.out_dir);
    c_met->add_flag("--rescale-trust", met.rescale_trust, "map trust onto the 1-7 scale before TAD");
    c_met->add_option("--tad-delta", met.tad_delta)->check(CLI::PositiveNumber);
    c_met->add_option("--tad-trust-max", met.tad_trust_max);
    c_met->add_option("--preset-source", met.preset_source)->check(CLI::IsMember({"assigned", "pre_survey"}));
    c_met->add_option("--smoothing", met.smoothing)->check(CLI::PositiveNumber);
    c_met->add_option("--window", met.window)->check(CLI::PositiveNumber);
    c_met->add_option("--clique-min-weight", met.clique_min_weight)->check(CLI::PositiveNumber);
    c_met->add_option("--exec", met.exec)->check(CLI::IsMember({"serial", "parallel"}));

    StatsArgs st;
    auto* c_st = app.add_subcommand("stats", "ANOVA and Tukey HSD over survey tables");
    c_st->add_option("--table", st.tables, "survey CSV(s)")->required()->check(CLI::ExistingFile);
    c_st->add_option("--measure", st.measure)->check(CLI::IsMember({"stance", "trust"}));
    c_st->add_option("--survey", st.survey, "survey id (default: latest answer per agent)");
    c_st->add_option("--alpha", st.alpha)->check(CLI::Range(0.0, 1.0));
    c_st->add_option("--out", st.out, "write the results document (JSON) here");
    c_st->add_option("--exec", st.exec)->check(CLI::IsMember({"serial", "parallel"}));

    ServeArgs sv;
    auto* c_sv = app.add_subcommand("serve", "local HTTP service for one session");
    auto* o_sc = c_sv->add_option("--scenario", sv.scenario)->check(CLI::ExistingFile);
    auto* o_log = c_sv->add_option("--log", sv.log, "serve a recorded log read-only")->check(CLI::ExistingFile);
    o_sc->excludes(o_log);
    c_sv->add_option("--mode", sv.mode)->check(CLI::IsMember({"headless", "interactive"}));
    c_sv->add_option("--host", sv.host);
    c_sv->add_option("--port", sv.port)->check(CLI::Range(0, 65535));
    c_sv->add_option("--policy", sv.policy);
    c_sv->add_option("--exec", sv.exec)->check(CLI::IsMember({"serial", "parallel"}));
    add_backend_flags(c_sv, sv.backend);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
        if (c_sv->parsed() && sv.scenario.empty() && sv.log.empty()) {
            throw CLI::RequiredError("serve needs --scenario or --log");
        }
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands()) sub = s;
        err << (sub ? sub->help() : app.help());
        return 2;
    }

    try {
        if (c_run->parsed()) return cmd_run(run, out, err);
        if (c_replay->parsed()) return cmd_replay(replay_log, replay_out, out);
        if (c_met->parsed()) return cmd_metrics(met, out, err);
        if (c_st->parsed()) return cmd_stats(st, out);
        if (c_sv->parsed()) return cmd_serve(sv, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace socsim
