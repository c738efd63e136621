#include "socsim/boundary.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace socsim {

int InteractionGraph::weight(const std::string& from, const std::string& to) const {
    const auto it = edges.find({from, to});
    return it == edges.end() ? 0 : it->second;
}

std::vector<std::string> participants_from_log(const std::vector<Event>& log) {
    std::set<std::string> ids;
    for (const auto& e : log) {
        if (const auto* s = e.system("placement")) ids.insert(s->data.at("agent").at("agent_id").get<std::string>());
    }
    return {ids.begin(), ids.end()};
}

InteractionGraph build_graph(const std::vector<Event>& log, int start_step, int end_step) {
    if (start_step < 0 || end_step < start_step) {
        throw std::invalid_argument(fmt::format("empty window [{}, {}]", start_step, end_step));
    }
    InteractionGraph g;
    g.start_step = start_step;
    g.end_step = end_step;
    g.nodes = participants_from_log(log);
    for (const auto& e : log) {
        if (e.step < start_step || e.step > end_step) continue;
        if (const auto* u = e.as<UtterancePayload>(); u && u->target) ++g.edges[{u->actor, *u->target}];
    }
    return g;
}

std::vector<std::vector<std::string>> detect_cliques(const InteractionGraph& graph, int min_weight) {
    if (min_weight < 1) throw std::invalid_argument("min_weight must be >= 1");
    std::vector<std::string> nodes = graph.nodes;
    for (const auto& [key, w] : graph.edges) {
        nodes.push_back(key.first);
        nodes.push_back(key.second);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto idx = [&](const std::string& id) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
    };

    std::vector<std::size_t> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [key, w] : graph.edges) {
        if (key.first > key.second && graph.edges.count({key.second, key.first})) continue;  // pair seen once
        const int total = w + (key.first == key.second ? 0 : graph.weight(key.second, key.first));
        if (key.first == key.second || total < min_weight) continue;
        const auto a = find(idx(key.first));
        const auto b = find(idx(key.second));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<std::size_t, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < nodes.size(); ++i) comps[find(i)].push_back(nodes[i]);
    std::vector<std::vector<std::string>> out;
    for (auto& [root, members] : comps) {
        if (members.size() >= 2) out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<std::pair<int, int>> step_windows(const std::vector<Event>& log, int window_size) {
    if (window_size < 1) throw std::invalid_argument("window size must be >= 1");
    int last = 0;
    for (const auto& e : log) last = std::max(last, e.step);
    std::vector<std::pair<int, int>> w;
    for (int s = 1; s <= last; s += window_size) w.emplace_back(s, std::min(last, s + window_size - 1));
    return w;
}

CentralitySeries centrality_series(const std::vector<Event>& log, int window_size, ExecPolicy exec) {
    CentralitySeries out;
    out.windows = step_windows(log, window_size);
    const auto nodes = participants_from_log(log);
    const double denom = nodes.size() > 1 ? static_cast<double>(nodes.size() - 1) : 1.0;
    for (const auto& id : nodes) out.values[id].assign(out.windows.size(), 0.0);

    std::vector<std::map<std::string, double>> per_window(out.windows.size());
    const auto n = static_cast<std::ptrdiff_t>(out.windows.size());
#pragma omp parallel for schedule(dynamic) if (exec == ExecPolicy::parallel)
    for (std::ptrdiff_t w = 0; w < n; ++w) {
        const auto [from, to] = out.windows[static_cast<std::size_t>(w)];
        std::map<std::string, std::set<std::string>> partners;
        for (const auto& e : log) {
            if (e.step < from || e.step > to) continue;
            const auto* u = e.as<UtterancePayload>();
            if (!u || !u->target || *u->target == u->actor) continue;
            partners[u->actor].insert(*u->target);
            partners[*u->target].insert(u->actor);
        }
        auto& dst = per_window[static_cast<std::size_t>(w)];
        for (const auto& [id, p] : partners) dst[id] = std::min(1.0, static_cast<double>(p.size()) / denom);
    }
    for (std::size_t w = 0; w < per_window.size(); ++w) {
        for (const auto& [id, v] : per_window[w]) {
            auto& series = out.values[id];
            if (series.empty()) series.assign(out.windows.size(), 0.0);
            series[w] = v;
        }
    }
    return out;
}

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::vector<AnchorSeries> anchor_echoes(const std::vector<Event>& log, const std::vector<std::string>& terms,
                                        int window_size) {
    const auto windows = step_windows(log, window_size);
    std::vector<AnchorSeries> out;
    for (const auto& term : terms) {
        AnchorSeries s;
        s.term = term;
        for (const auto& [a, b] : windows) s.windows.push_back({a, b, 0, 0});
        out.push_back(std::move(s));
    }
    std::vector<std::vector<std::set<std::string>>> speakers(terms.size(), std::vector<std::set<std::string>>(windows.size()));
    std::vector<std::string> needles;
    for (const auto& t : terms) needles.push_back(lower(t));
    for (const auto& e : log) {
        const auto* u = e.as<UtterancePayload>();
        if (!u || e.step < 1) continue;
        const std::string text = lower(u->text);
        const auto w = static_cast<std::size_t>((e.step - 1) / window_size);
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (needles[i].empty() || text.find(needles[i]) == std::string::npos) continue;
            ++out[i].windows[w].mentions;
            speakers[i][w].insert(u->actor);
            if (!out[i].first_speaker) {
                out[i].first_speaker = u->actor;
                out[i].first_step = e.step;
            }
        }
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t w = 0; w < windows.size(); ++w) out[i].windows[w].speakers = static_cast<int>(speakers[i][w].size());
    }
    return out;
}

Json to_json(const InteractionGraph& g) {
    Json edges = Json::array();
    for (const auto& [key, w] : g.edges) edges.push_back(Json{{"from", key.first}, {"to", key.second}, {"weight", w}});
    return Json{{"window", {g.start_step, g.end_step}}, {"nodes", g.nodes}, {"edges", edges}};
}

}  // namespace socsim
