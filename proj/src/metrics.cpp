#include "socsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "socsim/distributions.hpp"
#include "socsim/intervention.hpp"
#include "socsim/scripted_backend.hpp"

namespace socsim {

void MetricsConfig::validate() const {
    if (!(tad_stance_delta_min > 0.0)) throw MetricsError("tad_stance_delta_min must be > 0");
    if (!trust_scale_used.contains(tad_trust_max)) throw MetricsError("tad_trust_max outside the trust scale");
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw MetricsError(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
    if (a == 0) throw MetricsError(fmt::format("{}: empty input", what));
}

}  // namespace

double ivb(std::span<const int> final_stances, const ScaleSpec& scale) {
    if (final_stances.empty()) throw MetricsError("ivb: empty input");
    double sum = 0.0;
    for (int s : final_stances) {
        if (!scale.contains(s)) throw MetricsError(fmt::format("ivb: stance {} outside scale", s));
        sum += s;
    }
    return sum / static_cast<double>(final_stances.size()) - scale_neutral(scale);
}

double persuasion_sensitivity(std::span<const int> final_stances, std::span<const int> preset) {
    require_same_length(final_stances.size(), preset.size(), "persuasion_sensitivity");
    double sum = 0.0;
    for (std::size_t i = 0; i < final_stances.size(); ++i) sum += std::abs(final_stances[i] - preset[i]);
    return sum / static_cast<double>(final_stances.size());
}

double tad_rate(std::span<const int> final_stances, std::span<const int> preset, std::span<const int> trust,
                const MetricsConfig& cfg) {
    cfg.validate();
    require_same_length(final_stances.size(), preset.size(), "tad_rate");
    require_same_length(final_stances.size(), trust.size(), "tad_rate");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < final_stances.size(); ++i) {
        if (!cfg.trust_scale_used.contains(trust[i])) {
            throw MetricsError(fmt::format("tad_rate: trust {} outside the configured scale {}..{}", trust[i],
                                           cfg.trust_scale_used.min, cfg.trust_scale_used.max));
        }
        const bool shifted = std::abs(final_stances[i] - preset[i]) >= cfg.tad_stance_delta_min;
        if (shifted && trust[i] <= cfg.tad_trust_max) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(final_stances.size());
}

int rescale(int value, const ScaleSpec& from, const ScaleSpec& to) {
    if (from.max == from.min) throw MetricsError("rescale: degenerate source scale");
    const double frac = static_cast<double>(value - from.min) / (from.max - from.min);
    return round_half_up(to.min + frac * (to.max - to.min));
}

SampleSummary summarize_sample(std::span<const double> values) {
    if (values.size() < 2) throw MetricsError("summary needs at least two values");
    SampleSummary s;
    s.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    const double half = t_quantile(0.975, static_cast<double>(s.n - 1)) * s.sd / std::sqrt(static_cast<double>(s.n));
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
    return s;
}

std::map<std::string, SampleSummary> trust_summary(const std::map<std::string, std::vector<double>>& by_group) {
    std::map<std::string, SampleSummary> out;
    for (const auto& [group, values] : by_group) {
        if (values.size() < 2) {
            throw MetricsError(fmt::format("group '{}' has {} responses; at least 2 are needed", group, values.size()));
        }
        out[group] = summarize_sample(values);
    }
    return out;
}

std::map<std::string, std::string> grouping_from_log(const std::vector<Event>& log) {
    std::map<std::string, std::string> g;
    for (const auto& e : log) {
        if (const auto* s = e.system("placement")) {
            const auto& agent = s->data.at("agent");
            g[agent.at("agent_id").get<std::string>()] =
                s->data.at("human").get<bool>() ? std::string("Researcher") : agent.at("group").get<std::string>();
        }
    }
    return g;
}

long long GroupMatrix::at(const std::string& from, const std::string& to) const {
    const auto i = std::find(groups.begin(), groups.end(), from);
    const auto j = std::find(groups.begin(), groups.end(), to);
    if (i == groups.end() || j == groups.end()) return 0;
    return counts[static_cast<std::size_t>(i - groups.begin())][static_cast<std::size_t>(j - groups.begin())];
}

long long GroupMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts) {
        for (long long c : row) t += c;
    }
    return t;
}

GroupMatrix interaction_matrix(const std::vector<Event>& log, const std::map<std::string, std::string>& grouping) {
    GroupMatrix m;
    std::set<std::string> names;
    for (const auto& [id, g] : grouping) names.insert(g);
    m.groups.assign(names.begin(), names.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.groups.size(); ++i) index[m.groups[i]] = i;
    m.counts.assign(m.groups.size(), std::vector<long long>(m.groups.size(), 0));

    auto group_of = [&](const std::string& id, std::uint64_t seq) {
        const auto it = grouping.find(id);
        if (it == grouping.end()) throw MetricsError(fmt::format("seq {}: '{}' has no group", seq, id));
        return index.at(it->second);
    };
    for (const auto& e : log) {
        const auto* u = e.as<UtterancePayload>();
        if (!u) continue;
        const auto from = group_of(u->actor, e.seq);
        if (!u->target) continue;
        ++m.counts[from][group_of(*u->target, e.seq)];
    }
    return m;
}

GroupSeries emotion_trajectories(const std::vector<Event>& log, const std::map<std::string, std::string>& grouping,
                                 int smoothing_window, ExecPolicy exec) {
    if (smoothing_window < 1) throw MetricsError("smoothing window must be >= 1");
    int last_step = 0;
    std::map<std::string, std::vector<std::pair<int, double>>> reports;
    for (const auto& e : log) {
        last_step = std::max(last_step, e.step);
        if (const auto* em = e.as<EmotionPayload>()) {
            if (!grouping.count(em->agent)) throw MetricsError("emotion report from ungrouped agent '" + em->agent + "'");
            reports[em->agent].emplace_back(e.step, em->valence);
        }
    }
    const auto steps = static_cast<std::size_t>(last_step) + 1;

    std::vector<std::string> agents;
    for (const auto& [id, r] : reports) agents.push_back(id);
    std::vector<std::vector<double>> level(agents.size(), std::vector<double>(steps, 0.0));
    const auto n = static_cast<std::ptrdiff_t>(agents.size());
#pragma omp parallel for schedule(static) if (exec == ExecPolicy::parallel)
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        const auto& r = reports.at(agents[static_cast<std::size_t>(a)]);
        auto& lv = level[static_cast<std::size_t>(a)];
        std::vector<double> v(steps, 0.0);
        std::size_t k = 0;
        for (std::size_t t = 1; t < steps; ++t) {
            v[t] = v[t - 1];
            while (k < r.size() && r[k].first == static_cast<int>(t)) v[t] = r[k++].second;
            lv[t] = std::fabs(v[t] - v[t - 1]);
        }
    }

    GroupSeries out;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t a = 0; a < agents.size(); ++a) members[grouping.at(agents[a])].push_back(a);
    for (const auto& [group, idx] : members) {
        std::vector<double> mean(steps, 0.0);
        for (std::size_t t = 0; t < steps; ++t) {
            double s = 0.0;
            for (auto a : idx) s += level[a][t];
            mean[t] = s / static_cast<double>(idx.size());
        }
        if (smoothing_window > 1) {
            std::vector<double> smooth(steps, 0.0);
            for (std::size_t t = 0; t < steps; ++t) {
                const std::size_t from = t + 1 >= static_cast<std::size_t>(smoothing_window)
                                             ? t + 1 - static_cast<std::size_t>(smoothing_window)
                                             : 0;
                double s = 0.0;
                for (std::size_t u = from; u <= t; ++u) s += mean[u];
                smooth[t] = s / static_cast<double>(t - from + 1);
            }
            mean = std::move(smooth);
        }
        out.groups.push_back(group);
        out.values.push_back(std::move(mean));
    }
    return out;
}

std::vector<WindowCount> participation_series(const std::vector<Event>& log, const std::string& researcher_id,
                                              int window, ReplyScope scope) {
    if (window < 1) throw MetricsError("window must be >= 1");
    bool known = false;
    int last_step = 0;
    struct Said {
        int step;
        std::string area;
        bool broadcast;
    };
    std::vector<Said> researcher_said;
    for (const auto& e : log) {
        last_step = std::max(last_step, e.step);
        if (const auto* s = e.system("placement")) {
            known = known || s->data.at("agent").at("agent_id").get<std::string>() == researcher_id;
        } else if (const auto* u = e.as<UtterancePayload>(); u && u->actor == researcher_id) {
            researcher_said.push_back({e.step, u->area, u->broadcast()});
        }
    }
    if (!known) throw MetricsError("unknown researcher id '" + researcher_id + "'");

    std::vector<WindowCount> out;
    for (int start = 1; start <= last_step; start += window) out.push_back({start, std::min(last_step, start + window - 1), 0});
    std::vector<std::set<std::string>> who(out.size());
    for (const auto& e : log) {
        const auto* u = e.as<UtterancePayload>();
        if (!u || u->actor == researcher_id || e.step < 1) continue;
        bool counts = u->target && *u->target == researcher_id;
        for (const auto& r : researcher_said) {
            if (counts) break;
            if (r.step != e.step && r.step != e.step - 1) continue;
            counts = r.area == u->area || (scope == ReplyScope::broadcasts_anywhere && r.broadcast);
        }
        if (counts) who[static_cast<std::size_t>((e.step - 1) / window)].insert(u->actor);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].count = static_cast<int>(who[i].size());
    return out;
}

MetricsRow metrics_from_log(const std::vector<Event>& log, const MetricsConfig& cfg) {
    cfg.validate();
    MetricsRow row;
    std::optional<Json> init;
    std::map<std::string, std::string> group_of;
    struct Survey {
        std::string id;
        int step = 0;
        std::vector<const SurveyResponse*> responses;
    };
    std::vector<Survey> surveys;
    for (const auto& e : log) {
        if (const auto* s = e.system("world_init")) {
            init = s->data;
        } else if (const auto* s = e.system("placement")) {
            if (!s->data.at("human").get<bool>()) {
                const auto& a = s->data.at("agent");
                group_of[a.at("agent_id").get<std::string>()] = a.at("group").get<std::string>();
            }
        } else if (const auto* s = e.system("run_info")) {
            row.model = s->data.value("backend", "");
            row.strategy = s->data.value("strategy_label", s->data.value("policy", ""));
        } else if (const auto* r = e.as<SurveyResponse>()) {
            auto it = std::find_if(surveys.begin(), surveys.end(),
                                   [&](const Survey& s) { return s.id == r->survey_id && s.step == r->step; });
            if (it == surveys.end()) {
                surveys.push_back({r->survey_id, r->step, {}});
                it = std::prev(surveys.end());
            }
            it->responses.push_back(r);
        }
    }
    if (!init) throw MetricsError("log has no world_init record");
    auto has_stance = [](const Survey& s) {
        return std::any_of(s.responses.begin(), s.responses.end(), [](const auto* r) { return r->stance.has_value(); });
    };
    std::vector<const Survey*> with_stance;
    for (const auto& s : surveys) {
        if (has_stance(s)) with_stance.push_back(&s);
    }
    if (with_stance.empty()) throw MetricsError("log has no survey responses with stance answers; metrics need surveys");
    const Survey& final_survey = **std::max_element(with_stance.begin(), with_stance.end(),
                                                    [](const Survey* a, const Survey* b) { return a->step < b->step; });

    const ScaleSpec stance_scale = scale_from_json(init->at("stance_scale"));
    const ScaleSpec trust_scale = scale_from_json(init->at("trust_scale"));
    const Json presets = init->value("group_presets", Json::object());

    std::map<std::string, int> pre;
    if (cfg.s_preset_source == PresetSource::pre_survey) {
        const Survey& first = **std::min_element(with_stance.begin(), with_stance.end(),
                                                 [](const Survey* a, const Survey* b) { return a->step < b->step; });
        if (&first == &final_survey) throw MetricsError("preset source is pre_survey but only one stance survey exists");
        for (const auto* r : first.responses) {
            if (r->stance) pre[r->agent_id] = *r->stance;
        }
        row.flags.push_back("preset: " + first.id);
    } else {
        row.flags.push_back("preset: assigned");
    }

    std::vector<int> finals;
    std::vector<int> preset;
    std::vector<int> trust;
    std::vector<int> tad_final;
    std::vector<int> tad_preset;
    int skipped = 0;
    for (const auto* r : final_survey.responses) {
        if (!r->stance) {
            ++skipped;
            continue;
        }
        std::optional<int> p;
        if (cfg.s_preset_source == PresetSource::pre_survey) {
            if (const auto it = pre.find(r->agent_id); it != pre.end()) p = it->second;
        } else if (const auto g = group_of.find(r->agent_id); g != group_of.end() && presets.contains(g->second)) {
            p = presets.at(g->second).get<int>();
        }
        if (!p) {
            ++skipped;
            continue;
        }
        finals.push_back(*r->stance);
        preset.push_back(*p);
        if (r->trust) {
            trust.push_back(*r->trust);
            tad_final.push_back(*r->stance);
            tad_preset.push_back(*p);
        }
    }
    if (skipped) row.flags.push_back(fmt::format("{} responses without usable stance/preset skipped", skipped));
    row.n = finals.size();
    if (row.n == 0) return row;
    row.ivb = ivb(finals, stance_scale);
    row.ps = persuasion_sensitivity(finals, preset);
    row.flags.push_back("IVB over all final stances");

    if (!trust.empty()) {
        double sum = 0.0;
        for (int t : trust) sum += t;
        row.avg_trust = sum / static_cast<double>(trust.size());
        row.flags.push_back(fmt::format("trust scale {}-{}", trust_scale.min, trust_scale.max));
        const bool same = trust_scale.min == cfg.trust_scale_used.min && trust_scale.max == cfg.trust_scale_used.max;
        if (same) {
            row.tad = tad_rate(tad_final, tad_preset, trust, cfg);
        } else if (cfg.rescale_trust) {
            std::vector<int> mapped;
            for (int t : trust) mapped.push_back(rescale(t, trust_scale, cfg.trust_scale_used));
            row.tad = tad_rate(tad_final, tad_preset, mapped, cfg);
            row.flags.push_back(fmt::format("trust rescaled {}-{} to {}-{} for TAD", trust_scale.min, trust_scale.max,
                                            cfg.trust_scale_used.min, cfg.trust_scale_used.max));
        } else {
            row.flags.push_back(fmt::format(
                "TAD refused: trust collected on {}-{} but thresholds refer to {}-{}; enable trust rescaling",
                trust_scale.min, trust_scale.max, cfg.trust_scale_used.min, cfg.trust_scale_used.max));
        }
        if (trust.size() != finals.size()) row.flags.push_back("TAD and trust over respondents with a trust answer");
    } else {
        row.flags.push_back("TAD refused: no trust answers");
    }
    return row;
}

RenderedReport render_metrics_report(const std::vector<MetricsRow>& rows) {
    RenderedReport out;
    std::vector<std::string> models;
    for (const auto& r : rows) {
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    }
    const std::vector<std::string> header{"Strategy", "IVB", "PS", "TAD Rate (%)", "Avg Trust"};
    out.json = Json{{"columns", header}, {"models", Json::array()}};

    for (const auto& model : models) {
        std::vector<std::vector<std::string>> table;
        Json jrows = Json::array();
        for (const auto& r : rows) {
            if (r.model != model) continue;
            if (r.n == 0) {
                out.warnings.push_back(fmt::format("{} / {}: empty cell omitted", model, r.strategy));
                continue;
            }
            for (const auto& f : r.flags) {
                if (f.rfind("TAD refused", 0) == 0) out.warnings.push_back(fmt::format("{} / {}: {}", model, r.strategy, f));
            }
            table.push_back({r.strategy, fmt::format("{:.1f}", r.ivb), fmt::format("{:.1f}", r.ps),
                             r.tad ? fmt::format("{:.1f}", *r.tad) : "n/a",
                             r.avg_trust ? fmt::format("{:.1f}", *r.avg_trust) : "n/a"});
            jrows.push_back(Json{{"strategy", r.strategy},
                                 {"n", r.n},
                                 {"ivb", r.ivb},
                                 {"ps", r.ps},
                                 {"tad_rate", r.tad ? Json(*r.tad) : Json(nullptr)},
                                 {"avg_trust", r.avg_trust ? Json(*r.avg_trust) : Json(nullptr)},
                                 {"flags", r.flags}});
        }
        if (table.empty()) continue;
        std::vector<std::size_t> width(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            width[c] = header[c].size();
            for (const auto& row : table) width[c] = std::max(width[c], row[c].size());
        }
        auto line = [&](const std::vector<std::string>& cells) {
            std::string s;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (c) s += " | ";
                s += c == 0 ? fmt::format("{:<{}}", cells[c], width[c]) : fmt::format("{:>{}}", cells[c], width[c]);
            }
            return s + "\n";
        };
        out.text += "Model: " + model + "\n";
        out.text += line(header);
        for (const auto& row : table) out.text += line(row);
        out.json["models"].push_back(Json{{"model", model}, {"rows", jrows}});
    }
    out.json["warnings"] = out.warnings;
    return out;
}

}  // namespace socsim
