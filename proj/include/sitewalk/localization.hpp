#ifndef SITEWALK_LOCALIZATION_HPP
#define SITEWALK_LOCALIZATION_HPP

#include <string>
#include <utility>
#include <vector>

#include "sitewalk/building_model.hpp"
#include "sitewalk/planner.hpp"
#include "sitewalk/pose.hpp"

namespace sitewalk {

/* Robot pose as seen from a marker */
struct FiducialObservation
{
    std::string fiducial_id;
    /* Robot pose expressed in the fiducial frame */
    Pose2D relative_pose;
    double range = 0.0;
};

struct CoverageReport
{
    bool covered = true;
    /* Arc-length intervals [begin, end] (m) along the path with no visible fiducial */
    std::vector<std::pair<double, double>> gaps;
    double max_gap_distance = 0.0;
};

constexpr double kDefaultVisibilityRange = 8.0;
constexpr double kDefaultCoverageStep = 0.25;

/* What a camera at `robot` measures from a marker installed at `installedFiducial` */
FiducialObservation observe_fiducial(const std::string& fiducialId, const Pose2D& robot,
                                     const Pose2D& installedFiducial);

/* World pose = fiducial world pose composed with the observed relative pose */
Pose2D pose_from_fiducial(const FiducialObservation& obs, const Pose2D& fiducialWorld);

/* Vector from the robot to `waypoint`, in the robot's frame */
Point2 waypoint_to_robot_frame(Point2 waypoint, const Pose2D& robotWorld);

/*
 * Fiducials within `visibilityRange` whose sight segment crosses no wall or
 * furniture footprint, nearest first, ties by id.
 */
std::vector<std::string> visible_fiducials(const Pose2D& pose, const BuildingModel& model,
                                           double visibilityRange = kDefaultVisibilityRange);

/* Samples the path every `sampleStep` meters of arc length (and at its end) */
CoverageReport validate_fiducial_coverage(const Path& path, const BuildingModel& model,
                                          double visibilityRange = kDefaultVisibilityRange,
                                          double sampleStep = kDefaultCoverageStep);

/*
 * Position error of a fix taken at `distance` from a marker whose installed
 * heading is off by `orientationError`: the chord 2 d sin(|theta| / 2).
 */
double placement_error_deviation(double distance, double orientationError);

/* Point at arc length s along a polyline (clamped to its ends) */
Point2 point_at_arc_length(std::span<const Point2> polyline, double s);

} // namespace sitewalk

#endif // SITEWALK_LOCALIZATION_HPP
