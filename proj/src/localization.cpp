#include "sitewalk/localization.hpp"

#include <algorithm>
#include <cmath>

namespace sitewalk {

FiducialObservation observe_fiducial(const std::string& fiducialId, const Pose2D& robot,
                                     const Pose2D& installedFiducial)
{
    FiducialObservation obs;
    obs.fiducial_id = fiducialId;
    obs.relative_pose = relative_to(installedFiducial, robot);
    obs.range = norm(obs.relative_pose.position());
    return obs;
}

Pose2D pose_from_fiducial(const FiducialObservation& obs, const Pose2D& fiducialWorld)
{
    return compose(fiducialWorld, obs.relative_pose);
}

Point2 waypoint_to_robot_frame(Point2 waypoint, const Pose2D& robotWorld)
{
    return rotate(waypoint - robotWorld.position(), -robotWorld.theta());
}

std::vector<std::string> visible_fiducials(const Pose2D& pose, const BuildingModel& model,
                                           double visibilityRange)
{
    const Point2 eye = pose.position();
    std::vector<std::pair<double, const std::string*>> hits;

    for (const FiducialSpec& f : model.fiducials) {
        const Point2 target = f.pose.position();
        const double d = distance(eye, target);
        if (d > visibilityRange)
            continue;

        const Box2 sight = bounding_box(std::vector<Point2> { eye, target });
        bool blocked = false;
        for (const Element& e : model.elements) {
            if (!is_obstacle(e.layer))
                continue;
            const Box2 box = bounding_box(e.footprint);
            if (box.max.x < sight.min.x || box.min.x > sight.max.x ||
                box.max.y < sight.min.y || box.min.y > sight.max.y)
                continue;
            if (segment_hits_polygon(eye, target, e.footprint)) {
                blocked = true;
                break;
            }
        }
        if (!blocked)
            hits.emplace_back(d, &f.id);
    }

    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : *a.second < *b.second;
    });

    std::vector<std::string> ids;
    ids.reserve(hits.size());
    for (const auto& [d, id] : hits)
        ids.push_back(*id);
    return ids;
}

Point2 point_at_arc_length(std::span<const Point2> polyline, double s)
{
    if (polyline.empty())
        return {};
    for (std::size_t i = 1; i < polyline.size(); ++i) {
        const double seg = distance(polyline[i - 1], polyline[i]);
        if (s <= seg && seg > 0.0)
            return polyline[i - 1] + (std::max(s, 0.0) / seg) * (polyline[i] - polyline[i - 1]);
        s -= seg;
    }
    return polyline.back();
}

CoverageReport validate_fiducial_coverage(const Path& path, const BuildingModel& model,
                                          double visibilityRange, double sampleStep)
{
    const double total = polyline_length(path.waypoints);

    std::vector<double> samples;
    for (std::size_t k = 0;; ++k) {
        const double s = static_cast<double>(k) * sampleStep;
        if (s >= total)
            break;
        samples.push_back(s);
    }
    samples.push_back(total);

    CoverageReport report;
    std::optional<std::pair<double, double>> open;
    for (double s : samples) {
        const Pose2D at(point_at_arc_length(path.waypoints, s), 0.0);
        const bool seen = !visible_fiducials(at, model, visibilityRange).empty();
        if (!seen) {
            if (open)
                open->second = s;
            else
                open = std::make_pair(s, s);
        } else if (open) {
            report.gaps.push_back(*open);
            open.reset();
        }
    }
    if (open)
        report.gaps.push_back(*open);

    report.covered = report.gaps.empty();
    for (const auto& [a, b] : report.gaps)
        report.max_gap_distance = std::max(report.max_gap_distance, b - a);
    return report;
}

double placement_error_deviation(double distance, double orientationError)
{
    return 2.0 * distance * std::sin(std::abs(orientationError) / 2.0);
}

} // namespace sitewalk
