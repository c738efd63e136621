#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include "socsim/metrics.hpp"
#include "socsim/rng.hpp"
#include "socsim/stats.hpp"
#include "support.hpp"

namespace oracles {

using namespace socsim;

inline const ScaleSpec k17{1, 7, 4, {}};


inline double oracle_ivb(const std::vector<int>& s) {
    long long sum = 0;
    for (int v : s) sum += v;
    return static_cast<double>(sum - 4LL * static_cast<long long>(s.size())) / static_cast<double>(s.size());
}

inline double oracle_ps(const std::vector<int>& f, const std::vector<int>& p) {
    long long sum = 0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] > p[i] ? f[i] - p[i] : p[i] - f[i];
    return static_cast<double>(sum) / static_cast<double>(f.size());
}

inline double oracle_tad(const std::vector<int>& f, const std::vector<int>& p, const std::vector<int>& t, int dmin,
                  int tmax) {
    int hits = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const int d = f[i] - p[i];
        if ((d >= dmin || -d >= dmin) && t[i] <= tmax) ++hits;
    }
    return hits * 100.0 / static_cast<double>(f.size());
}

inline std::map<std::pair<std::string, std::string>, long long> oracle_matrix(const test_support::SynthLog& log) {
    std::map<std::string, std::string> g;
    for (const auto& a : log.agents) g[a.id] = a.group;
    g[log.researcher] = "Researcher";
    std::map<std::pair<std::string, std::string>, long long> m;
    for (const auto& e : log.events) {
        if (e.kind() != EventKind::utterance) continue;
        const auto& u = std::get<UtterancePayload>(e.payload);
        if (u.target) m[{g[u.actor], g[*u.target]}] += 1;
    }
    return m;
}

// Valence of `agent` after step t: last report at step <= t, else 0.
inline double valence_at(const test_support::SynthLog& log, const std::string& agent, int t) {
    double v = 0.0;
    for (const auto& e : log.events) {
        if (e.step > t) break;
        if (const auto* em = e.as<EmotionPayload>(); em && em->agent == agent) v = em->valence;
    }
    return v;
}

inline std::map<std::string, std::vector<double>> oracle_emotions(const test_support::SynthLog& log, int window) {
    std::map<std::string, std::vector<std::string>> members;
    std::set<std::string> reporting;
    for (const auto& e : log.events) {
        if (const auto* em = e.as<EmotionPayload>()) reporting.insert(em->agent);
    }
    for (const auto& a : log.agents) {
        if (reporting.count(a.id)) members[a.group].push_back(a.id);
    }
    std::map<std::string, std::vector<double>> out;
    for (const auto& [group, ids] : members) {
        std::vector<double> raw(static_cast<std::size_t>(log.steps) + 1, 0.0);
        for (int t = 1; t <= log.steps; ++t) {
            double s = 0.0;
            for (const auto& id : ids) s += std::fabs(valence_at(log, id, t) - valence_at(log, id, t - 1));
            raw[static_cast<std::size_t>(t)] = s / static_cast<double>(ids.size());
        }
        std::vector<double> sm(raw.size());
        for (int t = 0; t <= log.steps; ++t) {
            double s = 0.0;
            int n = 0;
            for (int u = t; u > t - window && u >= 0; --u, ++n) s += raw[static_cast<std::size_t>(u)];
            sm[static_cast<std::size_t>(t)] = s / n;
        }
        out[group] = sm;
    }
    return out;
}

inline std::vector<int> oracle_participation(const test_support::SynthLog& log, int window, bool anywhere) {
    std::vector<int> counts;
    for (int start = 1; start <= log.steps; start += window) {
        const int end = std::min(log.steps, start + window - 1);
        int c = 0;
        for (const auto& a : log.agents) {
            bool attracted = false;
            for (const auto& e : log.events) {
                const auto* u = e.as<UtterancePayload>();
                if (!u || u->actor != a.id || e.step < start || e.step > end) continue;
                if (u->target && *u->target == log.researcher) attracted = true;
                for (const auto& r : log.events) {
                    const auto* ru = r.as<UtterancePayload>();
                    if (!ru || ru->actor != log.researcher) continue;
                    if (r.step != e.step && r.step + 1 != e.step) continue;
                    if (ru->area == u->area || (anywhere && !ru->target)) attracted = true;
                }
            }
            c += attracted ? 1 : 0;
        }
        counts.push_back(c);
    }
    return counts;
}

inline std::vector<int> random_stances(Rng& rng, std::size_t n, int lo = 1, int hi = 7) {
    std::vector<int> v(n);
    for (auto& x : v) x = lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    return v;
}

// ---- variance analysis ----

// Textbook decomposition from cell/marginal means, no centering tricks.
struct OracleAnova {
    double ss_a, ss_b, ss_ab, ss_e, ss_t;
    double df_a, df_b, df_ab, df_e;
    double f_a, f_b, f_ab, p_a, p_b, p_ab;
};

inline OracleAnova oracle_two_way(const std::vector<std::vector<std::vector<double>>>& y) {
    const std::size_t a = y.size(), b = y[0].size(), n = y[0][0].size();
    double grand = 0.0;
    std::vector<double> ma(a, 0.0), mb(b, 0.0);
    std::vector<std::vector<double>> mc(a, std::vector<double>(b, 0.0));
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            for (double v : y[i][j]) {
                grand += v;
                ma[i] += v;
                mb[j] += v;
                mc[i][j] += v;
            }
    const double N = static_cast<double>(a * b * n);
    grand /= N;
    for (auto& m : ma) m /= static_cast<double>(b * n);
    for (auto& m : mb) m /= static_cast<double>(a * n);
    for (auto& row : mc)
        for (auto& m : row) m /= static_cast<double>(n);
    OracleAnova o{};
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            for (double v : y[i][j]) {
                o.ss_a += (ma[i] - grand) * (ma[i] - grand);
                o.ss_b += (mb[j] - grand) * (mb[j] - grand);
                const double inter = mc[i][j] - ma[i] - mb[j] + grand;
                o.ss_ab += inter * inter;
                o.ss_e += (v - mc[i][j]) * (v - mc[i][j]);
                o.ss_t += (v - grand) * (v - grand);
            }
    o.df_a = static_cast<double>(a - 1);
    o.df_b = static_cast<double>(b - 1);
    o.df_ab = o.df_a * o.df_b;
    o.df_e = static_cast<double>(a * b * (n - 1));
    const double mse = o.ss_e / o.df_e;
    o.f_a = o.ss_a / o.df_a / mse;
    o.f_b = o.ss_b / o.df_b / mse;
    o.f_ab = o.ss_ab / o.df_ab / mse;
    auto sf = [&](double f, double d1) { return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, o.df_e), f)); };
    o.p_a = sf(o.f_a, o.df_a);
    o.p_b = sf(o.f_b, o.df_b);
    o.p_ab = sf(o.f_ab, o.df_ab);
    return o;
}

// P(range of k standard normals / s <= q), s ~ sqrt(chi2_df / df), by
// composite Simpson on both integrals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int m) {
    const double h = (hi - lo) / m;
    double s = f(lo) + f(hi);
    for (int i = 1; i < m; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double oracle_ptukey(double q, int k, double df) {
    const boost::math::normal nd;
    auto range_cdf = [&](double w) {
        if (w <= 0) return 0.0;
        return k * simpson([&](double z) {
                   return boost::math::pdf(nd, z) *
                          std::pow(boost::math::cdf(nd, z) - boost::math::cdf(nd, z - w), k - 1);
               },
                           -9.0, 9.0, 300);
    };
    const double log_c = (df / 2.0) * std::log(df) - std::lgamma(df / 2.0) - (df / 2.0 - 1.0) * std::log(2.0);
    auto dens = [&](double s) {
        if (s <= 0) return 0.0;
        return std::exp(log_c + (df - 1.0) * std::log(s) - df * s * s / 2.0);
    };
    const double sd = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 14.0 * sd);
    const double hi = 1.0 + 14.0 * sd + (df < 10 ? 8.0 : 0.0);
    return simpson([&](double s) { return dens(s) * range_cdf(q * s); }, lo, hi, 300);
}

inline std::vector<std::vector<std::vector<double>>> random_design(Rng& rng, std::size_t a, std::size_t b, std::size_t n,
                                                            double effect) {
    std::vector<std::vector<std::vector<double>>> y(a, std::vector<std::vector<double>>(b));
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t r = 0; r < n; ++r) {
                // sum of uniforms: roughly normal noise
                double e = 0.0;
                for (int u = 0; u < 4; ++u) e += rng.uniform01() - 0.5;
                y[i][j].push_back(3.0 + effect * static_cast<double>(i) + 0.3 * static_cast<double>(j) + e);
            }
    return y;
}

inline FactorialDataset to_dataset(const std::vector<std::vector<std::vector<double>>>& y) {
    FactorialDataset d;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y[i].size(); ++j)
            for (double v : y[i][j]) d.observations.push_back({v, "A" + std::to_string(i), "B" + std::to_string(j)});
    return d;
}

inline bool rel_close(double x, double y, double tol) { return std::fabs(x - y) <= tol * std::max(1.0, std::fabs(y)); }

}  // namespace oracles
