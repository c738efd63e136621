#pragma once

// Balanced two-way ANOVA with interaction, one-way ANOVA, and Tukey HSD.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "socsim/exec.hpp"

namespace socsim {

struct FactorialObservation {
    double value = 0.0;
    std::string factor_a;
    std::string factor_b;
};

struct FactorialDataset {
    std::vector<FactorialObservation> observations;
};

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EffectRow {
    std::string effect;  ///< "A", "B", "AxB", "Error" (one-way: "Between", "Within")
    double df = 0.0;
    double ss = 0.0;
    double ms = 0.0;
    double f = 0.0;               ///< 0 for the error row
    double p = 1.0;               ///< 1 for the error row
    double partial_eta2 = 0.0;    ///< SS / (SS + SS_error); 0 for the error row
};

struct AnovaResult {
    std::vector<EffectRow> rows;  ///< effects first, error row last
    double ss_total = 0.0;        ///< computed directly, not as the sum of rows
    std::vector<std::string> levels_a;
    std::vector<std::string> levels_b;

    const EffectRow& row(const std::string& effect) const;
};

/// Classical decomposition for a balanced design (equal n >= 2 per cell, every
/// A x B combination present). Levels keep first-appearance order.
AnovaResult two_way_anova(const FactorialDataset& data);

/// Between/within decomposition; >= 2 groups, each with >= 2 values.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct TukeyPair {
    std::string a;
    std::string b;
    double mean_diff = 0.0;  ///< mean(a) - mean(b)
    double q = 0.0;
    double p_adj = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool significant = false;
    double cohens_d = 0.0;  ///< mean_diff / pooled sd of the two groups
};

struct TukeyResult {
    double alpha = 0.05;
    double ms_error = 0.0;
    double df_error = 0.0;
    double q_crit = 0.0;
    std::vector<TukeyPair> pairs;  ///< (i, j) with i < j in input order
};

/// Equal group sizes only. Pairs are evaluated in parallel under ExecPolicy::parallel.
TukeyResult tukey_hsd(const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha = 0.05,
                      ExecPolicy exec = ExecPolicy::parallel);

/// "<0.001" below 0.001, else three decimals.
std::string format_p(double p);

}  // namespace socsim
