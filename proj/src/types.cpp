#include "socsim/types.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace socsim {
namespace {

template <typename E, std::size_t N>
using Table = std::array<std::pair<E, std::string_view>, N>;

constexpr Table<Gender, 2> kGender{{{Gender::male, "male"}, {Gender::female, "female"}}};
constexpr Table<AgeBand, 3> kAge{{{AgeBand::age_18_29, "18-29"},
                                  {AgeBand::age_30_49, "30-49"},
                                  {AgeBand::age_50_plus, "50+"}}};
constexpr Table<Education, 4> kEducation{{{Education::high_school, "high-school"},
                                          {Education::some_college, "some-college"},
                                          {Education::bachelor, "bachelor"},
                                          {Education::graduate, "graduate"}}};
constexpr Table<ResearcherMode, 3> kMode{{{ResearcherMode::observe, "observe"},
                                          {ResearcherMode::interact, "interact"},
                                          {ResearcherMode::event, "event"}}};
constexpr Table<Orientation, 2> kOrientation{
    {{Orientation::environmental, "environmental"}, {Orientation::economic, "economic"}}};
constexpr Table<Style, 2> kStyle{{{Style::rational, "rational"}, {Style::emotional, "emotional"}}};
constexpr Table<Channel, 2> kChannel{
    {{Channel::broadcast, "broadcast"}, {Channel::targeted_rotation, "targeted-rotation"}}};
constexpr Table<Attitude, 3> kAttitude{{{Attitude::negative, "negative"},
                                        {Attitude::neutral, "neutral"},
                                        {Attitude::positive, "positive"}}};
constexpr Table<Measure, 2> kMeasure{{{Measure::stance, "stance"}, {Measure::trust, "trust"}}};
constexpr Table<AttitudeClass, 3> kClass{{{AttitudeClass::economic, "economic"},
                                          {AttitudeClass::neutral, "neutral"},
                                          {AttitudeClass::environmental, "environmental"}}};

template <typename E, std::size_t N>
std::string_view lookup(const Table<E, N>& table, E value) {
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
E reverse_lookup(const Table<E, N>& table, std::string_view text, std::string_view what) {
    for (const auto& [e, name] : table) {
        if (name == text) return e;
    }
    std::string allowed;
    for (const auto& entry : table) {
        if (!allowed.empty()) allowed += ", ";
        allowed += entry.second;
    }
    throw ParseError("unknown " + std::string(what) + " '" + std::string(text) + "' (expected one of: " +
                     allowed + ")");
}

}  // namespace

std::string_view to_string(Gender v) { return lookup(kGender, v); }
std::string_view to_string(AgeBand v) { return lookup(kAge, v); }
std::string_view to_string(Education v) { return lookup(kEducation, v); }
std::string_view to_string(ResearcherMode v) { return lookup(kMode, v); }
std::string_view to_string(Orientation v) { return lookup(kOrientation, v); }
std::string_view to_string(Style v) { return lookup(kStyle, v); }
std::string_view to_string(Channel v) { return lookup(kChannel, v); }
std::string_view to_string(Attitude v) { return lookup(kAttitude, v); }
std::string_view to_string(Measure v) { return lookup(kMeasure, v); }
std::string_view to_string(AttitudeClass v) { return lookup(kClass, v); }

template <> Gender enum_from_string<Gender>(std::string_view t) { return reverse_lookup(kGender, t, "gender"); }
template <> AgeBand enum_from_string<AgeBand>(std::string_view t) { return reverse_lookup(kAge, t, "age band"); }
template <> Education enum_from_string<Education>(std::string_view t) {
    return reverse_lookup(kEducation, t, "education");
}
template <> ResearcherMode enum_from_string<ResearcherMode>(std::string_view t) {
    return reverse_lookup(kMode, t, "researcher mode");
}
template <> Orientation enum_from_string<Orientation>(std::string_view t) {
    return reverse_lookup(kOrientation, t, "orientation");
}
template <> Style enum_from_string<Style>(std::string_view t) { return reverse_lookup(kStyle, t, "style"); }
template <> Channel enum_from_string<Channel>(std::string_view t) { return reverse_lookup(kChannel, t, "channel"); }
template <> Attitude enum_from_string<Attitude>(std::string_view t) {
    return reverse_lookup(kAttitude, t, "attitude");
}
template <> Measure enum_from_string<Measure>(std::string_view t) { return reverse_lookup(kMeasure, t, "measure"); }

std::string make_agent_id(std::string_view display_name) {
    std::string id;
    bool pending_dash = false;
    for (const char c : display_name) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc >= 0x80 || std::isalnum(uc)) {
            if (pending_dash && !id.empty()) id += '-';
            pending_dash = false;
            id += uc >= 0x80 ? c : static_cast<char>(std::tolower(uc));
        } else {
            pending_dash = true;
        }
    }
    return id;
}

}  // namespace socsim
