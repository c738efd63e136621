#include "socsim/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace socsim {

namespace {

// Lentz's method for the continued fraction of I_x(a, b).
double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h;
}

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
Rule gauss_legendre(int n) {
    Rule r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        r.x[static_cast<std::size_t>(i)] = z;
        r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

const Rule& rule16() {
    static const Rule r = gauss_legendre(16);
    return r;
}

template <typename F>
double integrate(F&& f, double lo, double hi, int panels) {
    const Rule& r = rule16();
    const double width = (hi - lo) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * width;
        for (std::size_t i = 0; i < r.x.size(); ++i) sum += r.w[i] * f(mid + 0.5 * width * r.x[i]);
    }
    return sum * 0.5 * width;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Fixed z grid for the range integral: nodes, weight * pdf, and cdf.
struct RangeGrid {
    std::vector<double> z, wpdf, cdf;
};

const RangeGrid& range_grid() {
    static const RangeGrid g = [] {
        RangeGrid r;
        const Rule& rule = rule16();
        const int panels = 24;
        const double lo = -8.5, width = 17.0 / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = lo + (p + 0.5) * width;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double z = mid + 0.5 * width * rule.x[i];
                r.z.push_back(z);
                r.wpdf.push_back(0.5 * width * rule.w[i] * normal_pdf(z));
                r.cdf.push_back(normal_cdf(z));
            }
        }
        return r;
    }();
    return g;
}

// Distribution of the range of k iid standard normals: P(R <= w).
double range_cdf(double w, int k) {
    if (w <= 0.0) return 0.0;
    const RangeGrid& g = range_grid();
    double v = 0.0;
    for (std::size_t i = 0; i < g.z.size(); ++i) {
        const double d = g.cdf[i] - normal_cdf(g.z[i] - w);
        double pw = 1.0;
        for (int j = 1; j < k; ++j) pw *= d;
        v += g.wpdf[i] * pw;
    }
    return std::min(1.0, k * v);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("t_cdf: df must be positive");
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    double lo = -1.0;
    double hi = 1.0;
    while (t_cdf(lo, df) > p) lo *= 2.0;
    while (t_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (t_cdf(mid, df) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double f_cdf(double f, double d1, double d2) {
    if (f <= 0.0) return 0.0;
    return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

double f_sf(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double ptukey(double q, int k, double df) {
    if (k < 2) throw std::invalid_argument("ptukey: k must be >= 2");
    if (df < 1.0) throw std::invalid_argument("ptukey: df must be >= 1");
    if (q <= 0.0) return 0.0;
    if (std::isinf(q)) return 1.0;
    if (df >= 1e5) return range_cdf(q, k);

    // s = sqrt(chi2_df / df); density f(s) = c s^(df-1) exp(-df s^2 / 2).
    const double log_c = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
    const double sd = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 12.0 * sd);
    const double hi = 1.0 + 12.0 * sd + (df < 10.0 ? 6.0 : 0.0);
    const double v = integrate(
        [&](double s) {
            if (s <= 0.0) return 0.0;
            const double dens = std::exp(log_c + (df - 1.0) * std::log(s) - 0.5 * df * s * s);
            return dens < 1e-18 ? 0.0 : dens * range_cdf(q * s, k);
        },
        lo, hi, 32);
    return std::clamp(v, 0.0, 1.0);
}

double qtukey(double p, int k, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("qtukey: p must be in (0, 1)");
    double lo = 0.0;
    double flo = -p;
    double hi = 2.0;
    double fhi = ptukey(hi, k, df) - p;
    while (fhi < 0.0) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = ptukey(hi, k, df) - p;
    }
    // Illinois variant of regula falsi.
    int side = 0;
    for (int i = 0; i < 100 && hi - lo > 1e-10; ++i) {
        const double x = (lo * fhi - hi * flo) / (fhi - flo);
        const double fx = ptukey(x, k, df) - p;
        if (fx == 0.0) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
            if (side == -1) fhi /= 2.0;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == 1) flo /= 2.0;
            side = 1;
        }
        if (std::fabs(fx) < 1e-13) return x;
    }
    return 0.5 * (lo + hi);
}

}  // namespace socsim
