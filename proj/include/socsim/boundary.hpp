#pragma once

// Conversation structure over time: windowed interaction graphs, conversational
// clusters, degree centrality and anchor-term echoes.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "socsim/event.hpp"
#include "socsim/exec.hpp"

namespace socsim {

struct InteractionGraph {
    int start_step = 0;
    int end_step = 0;
    std::vector<std::string> nodes;  ///< every placed participant, sorted
    std::map<std::pair<std::string, std::string>, int> edges;  ///< directed chat counts, weights >= 1

    int weight(const std::string& from, const std::string& to) const;
};

/// Participants (agents and researcher) placed anywhere in the log, sorted.
std::vector<std::string> participants_from_log(const std::vector<Event>& log);

/// Targeted utterances a -> b with start <= step <= end. Throws
/// std::invalid_argument for an empty window (end < start) or start < 0.
InteractionGraph build_graph(const std::vector<Event>& log, int start_step, int end_step);

/// Connected components (size >= 2) of the undirected graph keeping a pair when
/// w(a,b) + w(b,a) >= min_weight. Members sorted; clusters ordered by smallest member.
std::vector<std::vector<std::string>> detect_cliques(const InteractionGraph& graph, int min_weight);

struct CentralitySeries {
    std::vector<std::pair<int, int>> windows;
    std::map<std::string, std::vector<double>> values;  ///< per participant, one value per window
};

/// Degree centrality per window: distinct partners (either direction) / (N - 1),
/// N = number of participants. Windows of `window_size` steps from step 1.
CentralitySeries centrality_series(const std::vector<Event>& log, int window_size,
                                   ExecPolicy exec = ExecPolicy::parallel);

struct AnchorWindow {
    int start_step = 0;
    int end_step = 0;
    int mentions = 0;  ///< utterances containing the term
    int speakers = 0;  ///< distinct speakers of those utterances
};

struct AnchorSeries {
    std::string term;
    std::vector<AnchorWindow> windows;
    std::optional<std::string> first_speaker;
    std::optional<int> first_step;
};

/// Case-insensitive substring match on utterance text.
std::vector<AnchorSeries> anchor_echoes(const std::vector<Event>& log, const std::vector<std::string>& terms,
                                        int window_size);

/// Windows [1, w], [w+1, 2w], ... covering steps 1..last step of the log.
std::vector<std::pair<int, int>> step_windows(const std::vector<Event>& log, int window_size);

Json to_json(const InteractionGraph& g);

}  // namespace socsim
