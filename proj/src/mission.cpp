#include "sitewalk/mission.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sitewalk/errors.hpp"

namespace sitewalk {

using nlohmann::json;

double Mission::length() const
{
    double total = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
        total += distance(waypoints[i - 1].point, waypoints[i].point);
    return total;
}

std::size_t Mission::drp_count() const
{
    std::size_t n = 0;
    for (const MissionWaypoint& w : waypoints)
        n += w.is_drp;
    return n;
}

std::vector<std::string> Mission::drp_ids() const
{
    std::vector<std::string> ids;
    for (const MissionWaypoint& w : waypoints)
        if (w.is_drp)
            ids.push_back(w.drp_id.value_or(""));
    return ids;
}

double Mission::estimated_duration() const
{
    return length() / speed + static_cast<double>(drp_count()) * dwell_per_drp;
}

std::string Mission::inspection_date() const
{
    return created_at.substr(0, 10);
}

namespace {

bool digits(std::string_view s, std::size_t from, std::size_t count)
{
    for (std::size_t i = from; i < from + count; ++i)
        if (i >= s.size() || s[i] < '0' || s[i] > '9')
            return false;
    return true;
}

int number(std::string_view s, std::size_t from, std::size_t count)
{
    int v = 0;
    for (std::size_t i = from; i < from + count; ++i)
        v = v * 10 + (s[i] - '0');
    return v;
}

} // namespace

bool is_valid_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        return false;
    if (!digits(text, 0, 4) || !digits(text, 5, 2) || !digits(text, 8, 2))
        return false;
    using namespace std::chrono;
    const year_month_day ymd { year(number(text, 0, 4)),
                               month(static_cast<unsigned>(number(text, 5, 2))),
                               day(static_cast<unsigned>(number(text, 8, 2))) };
    return ymd.ok();
}

bool is_valid_timestamp(std::string_view text)
{
    // YYYY-MM-DDTHH:MM:SSZ
    if (text.size() != 20 || !is_valid_date(text.substr(0, 10)))
        return false;
    if (text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z')
        return false;
    if (!digits(text, 11, 2) || !digits(text, 14, 2) || !digits(text, 17, 2))
        return false;
    return number(text, 11, 2) < 24 && number(text, 14, 2) < 60 && number(text, 17, 2) < 60;
}

std::string fixed6(double value)
{
    std::string s = fmt::format("{:.6f}", value);
    if (s == "-0.000000")
        s = "0.000000";
    return s;
}

std::string serialize_mission(const Mission& mission)
{
    std::string out;
    out += "{\"mission_id\":" + json(mission.mission_id).dump();
    out += ",\"created_at\":" + json(mission.created_at).dump();
    out += ",\"speed_mps\":" + fixed6(mission.speed);
    out += ",\"dwell_s\":" + fixed6(mission.dwell_per_drp);
    out += ",\"waypoints\":[";
    for (std::size_t i = 0; i < mission.waypoints.size(); ++i) {
        const MissionWaypoint& w = mission.waypoints[i];
        if (i > 0)
            out += ',';
        out += "{\"x\":" + fixed6(w.point.x);
        out += ",\"y\":" + fixed6(w.point.y);
        out += w.is_drp ? ",\"is_drp\":true" : ",\"is_drp\":false";
        out += ",\"drp_id\":" + (w.drp_id ? json(*w.drp_id).dump() : std::string("null"));
        out += '}';
    }
    out += "]}";
    return out;
}

Mission parse_mission(std::string_view document)
{
    Mission m;
    try {
        const json doc = json::parse(document);
        if (!doc.is_object())
            throw MissionParseError("mission must be a JSON object");

        m.mission_id = doc.at("mission_id").get<std::string>();
        m.created_at = doc.at("created_at").get<std::string>();
        m.speed = doc.at("speed_mps").get<double>();
        m.dwell_per_drp = doc.at("dwell_s").get<double>();

        const json& wps = doc.at("waypoints");
        if (!wps.is_array())
            throw MissionParseError("waypoints must be an array");
        for (const json& jw : wps) {
            MissionWaypoint w;
            w.point = { jw.at("x").get<double>(), jw.at("y").get<double>() };
            w.is_drp = jw.at("is_drp").get<bool>();
            const json& id = jw.at("drp_id");
            if (!id.is_null())
                w.drp_id = id.get<std::string>();
            m.waypoints.push_back(std::move(w));
        }
    } catch (const json::exception& e) {
        throw MissionParseError(std::string("mission document: ") + e.what());
    }

    if (m.mission_id.empty())
        throw MissionParseError("empty mission_id");
    if (!is_valid_timestamp(m.created_at))
        throw MissionParseError("created_at is not an ISO-8601 UTC timestamp");
    if (!(m.speed > 0.0) || !std::isfinite(m.speed))
        throw MissionParseError("speed must be positive");
    if (!(m.dwell_per_drp >= 0.0) || !std::isfinite(m.dwell_per_drp))
        throw MissionParseError("dwell must be nonnegative");
    if (m.waypoints.empty())
        throw MissionParseError("mission has no waypoints");
    for (const MissionWaypoint& w : m.waypoints) {
        if (!std::isfinite(w.point.x) || !std::isfinite(w.point.y))
            throw MissionParseError("non-finite waypoint");
        if (w.is_drp != (w.drp_id.has_value() && !w.drp_id->empty()))
            throw MissionParseError("drp_id must be set exactly on DRP waypoints");
    }
    return m;
}

} // namespace sitewalk
