#ifndef SITEWALK_MISSION_HPP
#define SITEWALK_MISSION_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sitewalk/geometry.hpp"

namespace sitewalk {

struct MissionWaypoint
{
    Point2 point;
    bool is_drp = false;
    std::optional<std::string> drp_id;

    friend bool operator==(const MissionWaypoint&, const MissionWaypoint&) = default;
};

/*
 * Ordered waypoint list handed to the middleware. The first waypoint is the
 * robot's start position; DRP waypoints are flagged and carry their id.
 */
struct Mission
{
    std::string mission_id;
    /* ISO-8601 UTC timestamp, "YYYY-MM-DDTHH:MM:SSZ" */
    std::string created_at;
    double speed = 0.4;
    double dwell_per_drp = 0.0;
    std::vector<MissionWaypoint> waypoints;

    /* Polyline length of the waypoints (m) */
    double length() const;
    std::size_t drp_count() const;
    std::vector<std::string> drp_ids() const;
    /* Travel time plus dwell time at constant speed (s) */
    double estimated_duration() const;
    /* "YYYY-MM-DD" part of created_at */
    std::string inspection_date() const;

    friend bool operator==(const Mission&, const Mission&) = default;
};

/* Wire form. Field order is fixed and numbers carry six decimals, so the
 * output is byte-stable. */
std::string serialize_mission(const Mission& mission);

/* Throws MissionParseError */
Mission parse_mission(std::string_view document);

bool is_valid_timestamp(std::string_view text);
bool is_valid_date(std::string_view text);

/* Six-decimal fixed rendering used by every byte-stable document */
std::string fixed6(double value);

} // namespace sitewalk

#endif // SITEWALK_MISSION_HPP
