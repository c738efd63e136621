#include "socsim/backend.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace socsim {

std::string Memory::digest() const {
    std::string out;
    if (!summary.empty()) out = "Summary: " + summary + "\n";
    for (const auto& u : recent) {
        out += fmt::format("[step {}] {}{}: {}\n", u.step, u.speaker, u.target ? " -> " + *u.target : " (to all)",
                           u.text);
    }
    return out;
}

std::optional<std::string> check_action(const Action& action, const WorldView& world) {
    switch (action.kind) {
        case Action::Kind::idle: return std::nullopt;
        case Action::Kind::chat:
            if (action.target == action.actor) return "chat target equals actor";
            if (!world.display_names.count(action.target)) return "unknown chat target '" + action.target + "'";
            if (action.text.empty()) return "empty chat text";
            return std::nullopt;
        case Action::Kind::broadcast:
            if (action.text.empty()) return "empty broadcast text";
            return std::nullopt;
        case Action::Kind::move:
            if (std::find(world.areas.begin(), world.areas.end(), action.area) == world.areas.end()) {
                return "unknown area '" + action.area + "'";
            }
            return std::nullopt;
    }
    return "unknown action kind";
}

std::optional<int> clamp_answer(std::optional<int> value, const Question& q, std::vector<std::string>& flags) {
    if (!value) {
        flags.push_back(fmt::format("{}:missing", q.id));
        return std::nullopt;
    }
    if (!q.scale.contains(*value)) {
        flags.push_back(fmt::format("{}:out-of-range:{}", q.id, *value));
        return q.scale.clamp(*value);
    }
    return value;
}

}  // namespace socsim
