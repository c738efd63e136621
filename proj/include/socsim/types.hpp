#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace socsim {

enum class Gender { male, female };
enum class AgeBand { age_18_29, age_30_49, age_50_plus };
enum class Education { high_school, some_college, bachelor, graduate };

enum class ResearcherMode { observe, interact, event };
enum class Orientation { environmental, economic };
enum class Style { rational, emotional };
enum class Channel { broadcast, targeted_rotation };
enum class Attitude { negative, neutral, positive };
enum class Measure { stance, trust };
enum class AttitudeClass { economic, neutral, environmental };

/// Thrown when a textual token does not name any enumerator.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string_view to_string(Gender v);
std::string_view to_string(AgeBand v);
std::string_view to_string(Education v);
std::string_view to_string(ResearcherMode v);
std::string_view to_string(Orientation v);
std::string_view to_string(Style v);
std::string_view to_string(Channel v);
std::string_view to_string(Attitude v);
std::string_view to_string(Measure v);
std::string_view to_string(AttitudeClass v);

template <typename E>
E enum_from_string(std::string_view text);

template <> Gender enum_from_string<Gender>(std::string_view text);
template <> AgeBand enum_from_string<AgeBand>(std::string_view text);
template <> Education enum_from_string<Education>(std::string_view text);
template <> ResearcherMode enum_from_string<ResearcherMode>(std::string_view text);
template <> Orientation enum_from_string<Orientation>(std::string_view text);
template <> Style enum_from_string<Style>(std::string_view text);
template <> Channel enum_from_string<Channel>(std::string_view text);
template <> Attitude enum_from_string<Attitude>(std::string_view text);
template <> Measure enum_from_string<Measure>(std::string_view text);

/// Orientation and style of a persuasive utterance.
struct PersuasionTag {
    Orientation orientation = Orientation::environmental;
    Style style = Style::rational;

    friend bool operator==(const PersuasionTag&, const PersuasionTag&) = default;
};

/// Lowercase, hyphen-separated identifier derived from a display name.
/// "Jonas Müller" -> "jonas-müller". Non-ASCII bytes are kept verbatim.
std::string make_agent_id(std::string_view display_name);

}  // namespace socsim
