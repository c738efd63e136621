#include "socsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "socsim/distributions.hpp"

namespace socsim {

const EffectRow& AnovaResult::row(const std::string& effect) const {
    for (const auto& r : rows) {
        if (r.effect == effect) return r;
    }
    throw std::out_of_range("no ANOVA row '" + effect + "'");
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sum_sq_dev(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
}

EffectRow effect_row(std::string name, double ss, double df, double ss_error, double df_error) {
    EffectRow r;
    r.effect = std::move(name);
    r.ss = std::max(0.0, ss);
    r.df = df;
    r.ms = r.ss / df;
    const double ms_error = ss_error / df_error;
    if (ms_error > 0.0) {
        r.f = r.ms / ms_error;
        r.p = f_sf(r.f, df, df_error);
    } else if (r.ss > 0.0) {
        r.f = std::numeric_limits<double>::infinity();
        r.p = 0.0;
    }
    r.partial_eta2 = r.ss + ss_error > 0.0 ? r.ss / (r.ss + ss_error) : 0.0;
    return r;
}

EffectRow error_row(std::string name, double ss, double df) {
    EffectRow r;
    r.effect = std::move(name);
    r.ss = ss;
    r.df = df;
    r.ms = ss / df;
    return r;
}

std::size_t level_index(std::vector<std::string>& levels, const std::string& label) {
    const auto it = std::find(levels.begin(), levels.end(), label);
    if (it != levels.end()) return static_cast<std::size_t>(it - levels.begin());
    levels.push_back(label);
    return levels.size() - 1;
}

}  // namespace

AnovaResult two_way_anova(const FactorialDataset& data) {
    AnovaResult res;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cells;
    std::vector<double> all;
    for (const auto& o : data.observations) {
        const auto i = level_index(res.levels_a, o.factor_a);
        const auto j = level_index(res.levels_b, o.factor_b);
        cells[{i, j}].push_back(o.value);
        all.push_back(o.value);
    }
    const std::size_t a = res.levels_a.size();
    const std::size_t b = res.levels_b.size();
    if (a < 2 || b < 2) throw StatsError("two-way ANOVA needs at least two levels of each factor");
    if (cells.size() != a * b) throw StatsError("unbalanced design: some factor combinations have no observations");
    const std::size_t n = cells.begin()->second.size();
    for (const auto& [key, v] : cells) {
        if (v.size() != n) {
            throw StatsError(fmt::format("unbalanced design: cell ({}, {}) has {} observations, expected {}",
                                         res.levels_a[key.first], res.levels_b[key.second], v.size(), n));
        }
    }
    if (n < 2) throw StatsError("two-way ANOVA needs at least two observations per cell");

    // Center first so totals stay small and the result is location invariant.
    const double grand = mean_of(all);
    std::vector<double> row_tot(a, 0.0);
    std::vector<double> col_tot(b, 0.0);
    double g = 0.0;
    double ss_cells_raw = 0.0;
    double ss_error = 0.0;
    double ss_total = 0.0;
    for (const auto& [key, v] : cells) {
        double t = 0.0;
        for (double x : v) t += x - grand;
        row_tot[key.first] += t;
        col_tot[key.second] += t;
        g += t;
        ss_cells_raw += t * t / static_cast<double>(n);
        const double cm = t / static_cast<double>(n);
        for (double x : v) {
            const double c = x - grand;
            ss_error += (c - cm) * (c - cm);
            ss_total += c * c;
        }
    }
    const double big_n = static_cast<double>(a * b * n);
    const double corr = g * g / big_n;
    double ss_a = -corr;
    for (double t : row_tot) ss_a += t * t / static_cast<double>(b * n);
    double ss_b = -corr;
    for (double t : col_tot) ss_b += t * t / static_cast<double>(a * n);
    const double ss_ab = ss_cells_raw - corr - ss_a - ss_b;
    ss_total -= corr;

    if (ss_total <= 0.0) throw StatsError("degenerate data: every observation is identical");

    const double df_a = static_cast<double>(a - 1);
    const double df_b = static_cast<double>(b - 1);
    const double df_ab = df_a * df_b;
    const double df_e = static_cast<double>(a * b * (n - 1));
    res.rows.push_back(effect_row("A", ss_a, df_a, ss_error, df_e));
    res.rows.push_back(effect_row("B", ss_b, df_b, ss_error, df_e));
    res.rows.push_back(effect_row("AxB", ss_ab, df_ab, ss_error, df_e));
    res.rows.push_back(error_row("Error", ss_error, df_e));
    res.ss_total = ss_total;
    return res;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw StatsError("one-way ANOVA needs at least two groups");
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.size() < 2) throw StatsError("one-way ANOVA needs at least two values per group");
        all.insert(all.end(), g.begin(), g.end());
    }
    const double grand = mean_of(all);
    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        ss_within += sum_sq_dev(g, m);
    }
    const double ss_total = sum_sq_dev(all, grand);
    if (ss_total <= 0.0) throw StatsError("degenerate data: every observation is identical");
    const double df_b = static_cast<double>(groups.size() - 1);
    const double df_w = static_cast<double>(all.size() - groups.size());
    AnovaResult res;
    res.rows.push_back(effect_row("Between", ss_between, df_b, ss_within, df_w));
    res.rows.push_back(error_row("Within", ss_within, df_w));
    res.ss_total = ss_total;
    for (std::size_t i = 0; i < groups.size(); ++i) res.levels_a.push_back(std::to_string(i));
    return res;
}

TukeyResult tukey_hsd(const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha,
                      ExecPolicy exec) {
    if (groups.size() < 2) throw StatsError("Tukey HSD needs at least two groups");
    if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("alpha must be in (0, 1)");
    const std::size_t n = groups.front().second.size();
    for (const auto& [label, v] : groups) {
        if (v.size() != n) {
            throw StatsError(fmt::format("unequal group sizes ({} has {}, expected {}); Tukey-Kramer is not offered",
                                         label, v.size(), n));
        }
    }
    if (n < 2) throw StatsError("Tukey HSD needs at least two values per group");

    const std::size_t k = groups.size();
    std::vector<double> means(k);
    std::vector<double> vars(k);
    double ss_within = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        means[i] = mean_of(groups[i].second);
        const double ss = sum_sq_dev(groups[i].second, means[i]);
        vars[i] = ss / static_cast<double>(n - 1);
        ss_within += ss;
    }
    TukeyResult res;
    res.alpha = alpha;
    res.df_error = static_cast<double>(k * (n - 1));
    res.ms_error = ss_within / res.df_error;
    if (res.ms_error <= 0.0) throw StatsError("zero within-group variance");
    const double se = std::sqrt(res.ms_error / static_cast<double>(n));
    res.q_crit = qtukey(1.0 - alpha, static_cast<int>(k), res.df_error);

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            TukeyPair p;
            p.a = groups[i].first;
            p.b = groups[j].first;
            p.mean_diff = means[i] - means[j];
            p.q = std::fabs(p.mean_diff) / se;
            p.ci_low = p.mean_diff - res.q_crit * se;
            p.ci_high = p.mean_diff + res.q_crit * se;
            const double pooled = std::sqrt((vars[i] + vars[j]) / 2.0);
            p.cohens_d = pooled > 0.0 ? p.mean_diff / pooled : 0.0;
            res.pairs.push_back(std::move(p));
        }
    }
    const auto m = static_cast<std::ptrdiff_t>(res.pairs.size());
#pragma omp parallel for schedule(dynamic) if (exec == ExecPolicy::parallel)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        auto& p = res.pairs[static_cast<std::size_t>(i)];
        p.p_adj = std::clamp(1.0 - ptukey(p.q, static_cast<int>(k), res.df_error), 0.0, 1.0);
        p.significant = p.p_adj < alpha;
    }
    return res;
}

std::string format_p(double p) { return p < 0.001 ? "<0.001" : fmt::format("{:.3f}", p); }

}  // namespace socsim
