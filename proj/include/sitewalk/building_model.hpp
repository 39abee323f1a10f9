#ifndef SITEWALK_BUILDING_MODEL_HPP
#define SITEWALK_BUILDING_MODEL_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sitewalk/geometry.hpp"
#include "sitewalk/pose.hpp"

namespace sitewalk {

enum class Layer
{
    Wall,
    Floor,
    Door,
    Furniture,
    Other,
};

std::string_view to_string(Layer layer);
std::optional<Layer> parse_layer(std::string_view text);

/* Walls and furniture block travel and sight lines; doors never do */
constexpr bool is_obstacle(Layer layer) { return layer == Layer::Wall || layer == Layer::Furniture; }

struct Element
{
    std::string id;
    Layer layer = Layer::Other;
    Polygon footprint;
    double height = 0.0;

    friend bool operator==(const Element&, const Element&) = default;
};

struct FiducialSpec
{
    std::string id;
    /* Where the model says the marker is */
    Pose2D pose;
    /* Signed heading error of the physical marker relative to `pose`;
     * simulation ground truth only */
    double placement_orientation_error = 0.0;

    /* Pose of the marker as actually installed */
    Pose2D installed_pose() const
    {
        return { pose.position(), pose.theta() + placement_orientation_error };
    }

    friend bool operator==(const FiducialSpec&, const FiducialSpec&) = default;
};

/*
 * Layered planar building model. Immutable once loaded; every instance
 * returned by `load_building_model` satisfies the validation rules below.
 */
struct BuildingModel
{
    std::string units = "m";
    Box2 bounds;
    std::vector<Element> elements;
    std::vector<FiducialSpec> fiducials;
    /* Optional robot spawn pose, used when no live robot pose is available */
    std::optional<Pose2D> spawn;

    const FiducialSpec* find_fiducial(std::string_view id) const;
    double floor_area() const;

    friend bool operator==(const BuildingModel&, const BuildingModel&) = default;
};

/*
 * Parse and validate a building-model JSON document.
 * Throws ParseError on malformed input and ValidationError (naming the
 * offending id) on duplicate ids, out-of-bounds geometry, non-simple
 * footprints or out-of-range fiducial errors.
 */
BuildingModel load_building_model(std::string_view document);
BuildingModel load_building_model_file(const std::string& path);

/* Canonical JSON rendering; loading it back yields an equal model */
std::string serialize_building_model(const BuildingModel& model);

/* Throws ValidationError; used by the loader and by programmatic builders */
void validate(const BuildingModel& model);

constexpr double kDefaultRobotRadius = 0.3;

/*
 * Floor area minus wall/furniture footprints dilated by the robot radius.
 *
 * Membership is tested exactly against the source polygons; area and grids
 * come from rasterizing that test.
 */
class WalkableRegion
{
public:
    WalkableRegion(const BuildingModel& model, double robotRadius);

    double robot_radius() const { return mRobotRadius; }
    /* Bounding box of the floor footprints */
    const Box2& bounds() const { return mBounds; }

    /* p lies on some floor footprint and strictly farther than the robot
     * radius from every obstacle footprint */
    bool contains(Point2 p) const;

    bool on_floor(Point2 p) const;

    /* Distance from p to the nearest obstacle footprint (0 inside one) */
    double clearance(Point2 p) const;

    /* Raster estimate with cells of `resolution` meters; exact for regions
     * whose boundary lies on the raster lines */
    double area(double resolution = kAreaResolution) const;

    static constexpr double kAreaResolution = 1.0 / 16.0;

private:
    struct Obstacle
    {
        Polygon ring;
        Box2 box;
    };

    double mRobotRadius;
    Box2 mBounds;
    std::vector<Polygon> mFloors;
    std::vector<Obstacle> mObstacles;
};

/* Throws EmptyRegionError when nothing walkable remains */
WalkableRegion extract_walkable_region(const BuildingModel& model,
                                       double robotRadius = kDefaultRobotRadius);

} // namespace sitewalk

#endif // SITEWALK_BUILDING_MODEL_HPP
