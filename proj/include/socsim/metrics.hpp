#pragma once

// Survey-based persuasion metrics and log-based interaction analytics.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socsim/event.hpp"
#include "socsim/exec.hpp"

namespace socsim {

class MetricsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class PresetSource { assigned, pre_survey };

struct MetricsConfig {
    double tad_stance_delta_min = 1.0;
    int tad_trust_max = 3;
    ScaleSpec trust_scale_used{1, 7, 4, {}};  ///< scale the TAD threshold refers to
    /// Allow affine rescaling (rounded half up) of trust collected on another scale.
    bool rescale_trust = false;
    PresetSource s_preset_source = PresetSource::assigned;

    void validate() const;
};

/// mean(S) - neutral of the scale.
double ivb(std::span<const int> final_stances, const ScaleSpec& scale);

/// (1/N) sum |final - preset|.
double persuasion_sensitivity(std::span<const int> final_stances, std::span<const int> preset);

/// Percentage of agents with |final - preset| >= delta_min and trust <= trust_max.
/// Trust must already be on cfg.trust_scale_used.
double tad_rate(std::span<const int> final_stances, std::span<const int> preset, std::span<const int> trust,
                const MetricsConfig& cfg);

/// Affine map of `value` from one scale to another, rounded half up.
int rescale(int value, const ScaleSpec& from, const ScaleSpec& to);

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;  ///< n - 1 denominator
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Mean, sample sd and 95% t interval. Needs n >= 2.
SampleSummary summarize_sample(std::span<const double> values);

/// Per-group summary; throws MetricsError naming any group with fewer than 2 values.
std::map<std::string, SampleSummary> trust_summary(const std::map<std::string, std::vector<double>>& by_group);

/// agent id -> group, from placement events; the researcher maps to "Researcher".
std::map<std::string, std::string> grouping_from_log(const std::vector<Event>& log);

struct GroupMatrix {
    std::vector<std::string> groups;             ///< sorted
    std::vector<std::vector<long long>> counts;  ///< [from][to]

    long long at(const std::string& from, const std::string& to) const;
    long long total() const;
};

/// Directed counts of targeted utterances between groups; broadcasts are ignored.
GroupMatrix interaction_matrix(const std::vector<Event>& log, const std::map<std::string, std::string>& grouping);

struct GroupSeries {
    std::vector<std::string> groups;          ///< sorted, only groups with reporting agents
    std::vector<std::vector<double>> values;  ///< [group][step], step 0..T
};

/// Mean |valence_t - valence_{t-1}| per group and step (0 at step 0). Missing
/// reports carry the previous valence forward. smoothing_window > 1 applies a
/// trailing moving average over the available points.
GroupSeries emotion_trajectories(const std::vector<Event>& log, const std::map<std::string, std::string>& grouping,
                                 int smoothing_window = 1, ExecPolicy exec = ExecPolicy::parallel);

enum class ReplyScope {
    same_area,  ///< an utterance answers any researcher utterance spoken in the same area
    broadcasts_anywhere,  ///< researcher broadcasts can be answered from any area
};

struct WindowCount {
    int start_step = 0;
    int end_step = 0;
    int count = 0;
};

/// Per window of `window` steps (from step 1), distinct agents who chatted to the
/// researcher, or spoke right after (same or next step) a researcher utterance
/// within the reply scope.
std::vector<WindowCount> participation_series(const std::vector<Event>& log, const std::string& researcher_id,
                                              int window, ReplyScope scope = ReplyScope::same_area);

struct MetricsRow {
    std::string model;
    std::string strategy;
    std::size_t n = 0;
    double ivb = 0.0;
    double ps = 0.0;
    std::optional<double> tad;  ///< nullopt when refused (see flags)
    std::optional<double> avg_trust;
    std::vector<std::string> flags;
};

/// Computes one report row from a run log: final stance and trust from the last
/// survey carrying stance answers, presets from group assignment or the first
/// survey (cfg.s_preset_source). Throws MetricsError when the log has no survey.
MetricsRow metrics_from_log(const std::vector<Event>& log, const MetricsConfig& cfg);

struct RenderedReport {
    std::string text;
    Json json;
    std::vector<std::string> warnings;
};

RenderedReport render_metrics_report(const std::vector<MetricsRow>& rows);

}  // namespace socsim
