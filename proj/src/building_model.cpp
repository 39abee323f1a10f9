#include "sitewalk/building_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sitewalk/errors.hpp"

namespace sitewalk {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Layer layer)
{
    switch (layer) {
        case Layer::Wall: return "wall";
        case Layer::Floor: return "floor";
        case Layer::Door: return "door";
        case Layer::Furniture: return "furniture";
        case Layer::Other: return "other";
    }
    return "other";
}

std::optional<Layer> parse_layer(std::string_view text)
{
    for (Layer l : { Layer::Wall, Layer::Floor, Layer::Door, Layer::Furniture, Layer::Other })
        if (to_string(l) == text)
            return l;
    return std::nullopt;
}

const FiducialSpec* BuildingModel::find_fiducial(std::string_view id) const
{
    auto it = std::find_if(fiducials.begin(), fiducials.end(),
                           [&](const FiducialSpec& f) { return f.id == id; });
    return it == fiducials.end() ? nullptr : &*it;
}

double BuildingModel::floor_area() const
{
    double total = 0.0;
    for (const Element& e : elements)
        if (e.layer == Layer::Floor)
            total += area(e.footprint);
    return total;
}

void validate(const BuildingModel& model)
{
    if (model.units != "m")
        throw ValidationError("units", "unsupported length unit '" + model.units + "'");
    if (!(model.bounds.min.x < model.bounds.max.x && model.bounds.min.y < model.bounds.max.y))
        throw ValidationError("bounds", "empty or inverted bounds");

    std::unordered_set<std::string> ids;
    for (const Element& e : model.elements) {
        if (e.id.empty())
            throw ValidationError("<element>", "empty element id");
        if (!ids.insert(e.id).second)
            throw ValidationError(e.id, "duplicate element id");
        if (e.footprint.size() < 3)
            throw ValidationError(e.id, "footprint needs at least 3 vertices");
        for (const Point2& p : e.footprint)
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !model.bounds.contains(p))
                throw ValidationError(e.id, "footprint vertex outside bounds");
        if (!is_simple(e.footprint) || area(e.footprint) <= 0.0)
            throw ValidationError(e.id, "footprint is not a simple polygon");
        if (!(e.height >= 0.0))
            throw ValidationError(e.id, "negative height");
    }

    std::unordered_set<std::string> fiducialIds;
    for (const FiducialSpec& f : model.fiducials) {
        if (f.id.empty())
            throw ValidationError("<fiducial>", "empty fiducial id");
        if (!fiducialIds.insert(f.id).second)
            throw ValidationError(f.id, "duplicate fiducial id");
        if (!model.bounds.contains(f.pose.position()))
            throw ValidationError(f.id, "fiducial outside bounds");
        if (!(std::abs(f.placement_orientation_error) < std::numbers::pi / 2.0))
            throw ValidationError(f.id, "orientation error must be below pi/2 in magnitude");
    }

    if (model.spawn && !model.bounds.contains(model.spawn->position()))
        throw ValidationError("spawn", "spawn pose outside bounds");
}

namespace {

Point2 parse_point(const json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("expected a [x, y] pair");
    return { j[0].get<double>(), j[1].get<double>() };
}

Pose2D parse_pose(const json& j)
{
    if (!j.is_object())
        throw ParseError("pose must be an object");
    return { j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>() };
}

} // namespace

BuildingModel load_building_model(std::string_view document)
{
    BuildingModel model;
    try {
        const json doc = json::parse(document);
        if (!doc.is_object())
            throw ParseError("building model must be a JSON object");

        model.units = doc.at("units").get<std::string>();

        const json& b = doc.at("bounds");
        if (!b.is_array() || b.size() != 4)
            throw ParseError("bounds must be [x0, y0, x1, y1]");
        model.bounds = { { b[0].get<double>(), b[1].get<double>() },
                         { b[2].get<double>(), b[3].get<double>() } };

        for (const json& je : doc.at("elements")) {
            Element e;
            e.id = je.at("id").get<std::string>();
            const auto layerName = je.at("layer").get<std::string>();
            const auto layer = parse_layer(layerName);
            if (!layer)
                throw ValidationError(e.id, "unknown layer '" + layerName + "'");
            e.layer = *layer;
            for (const json& jp : je.at("footprint"))
                e.footprint.push_back(parse_point(jp));
            e.height = je.value("height", 0.0);
            model.elements.push_back(std::move(e));
        }

        if (doc.contains("fiducials")) {
            for (const json& jf : doc.at("fiducials")) {
                FiducialSpec f;
                f.id = jf.at("id").get<std::string>();
                f.pose = parse_pose(jf.at("pose"));
                f.placement_orientation_error = jf.value("orientation_error", 0.0);
                model.fiducials.push_back(std::move(f));
            }
        }

        if (doc.contains("spawn"))
            model.spawn = parse_pose(doc.at("spawn"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("building model: ") + e.what());
    }

    validate(model);
    return model;
}

BuildingModel load_building_model_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open building model '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_building_model(buffer.str());
}

std::string serialize_building_model(const BuildingModel& model)
{
    ordered_json doc;
    doc["units"] = model.units;
    doc["bounds"] = { model.bounds.min.x, model.bounds.min.y, model.bounds.max.x, model.bounds.max.y };

    ordered_json elements = ordered_json::array();
    for (const Element& e : model.elements) {
        ordered_json je;
        je["id"] = e.id;
        je["layer"] = std::string(to_string(e.layer));
        ordered_json footprint = ordered_json::array();
        for (const Point2& p : e.footprint)
            footprint.push_back({ p.x, p.y });
        je["footprint"] = std::move(footprint);
        je["height"] = e.height;
        elements.push_back(std::move(je));
    }
    doc["elements"] = std::move(elements);

    ordered_json fiducials = ordered_json::array();
    for (const FiducialSpec& f : model.fiducials) {
        ordered_json jf;
        jf["id"] = f.id;
        jf["pose"] = { { "x", f.pose.x() }, { "y", f.pose.y() }, { "theta", f.pose.theta() } };
        jf["orientation_error"] = f.placement_orientation_error;
        fiducials.push_back(std::move(jf));
    }
    doc["fiducials"] = std::move(fiducials);

    if (model.spawn)
        doc["spawn"] = { { "x", model.spawn->x() }, { "y", model.spawn->y() }, { "theta", model.spawn->theta() } };

    return doc.dump(2);
}

WalkableRegion::WalkableRegion(const BuildingModel& model, double robotRadius) :
    mRobotRadius(robotRadius)
{
    if (!(robotRadius >= 0.0))
        throw ValidationError("robot_radius", "robot radius must be nonnegative");

    Polygon corners;
    for (const Element& e : model.elements) {
        if (e.layer == Layer::Floor) {
            mFloors.push_back(e.footprint);
            corners.insert(corners.end(), e.footprint.begin(), e.footprint.end());
        } else if (is_obstacle(e.layer)) {
            mObstacles.push_back({ e.footprint, bounding_box(e.footprint) });
        }
    }
    mBounds = corners.empty() ? Box2 {} : bounding_box(corners);
}

bool WalkableRegion::on_floor(Point2 p) const
{
    return std::any_of(mFloors.begin(), mFloors.end(),
                       [&](const Polygon& f) { return point_in_polygon(p, f); });
}

double WalkableRegion::clearance(Point2 p) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const Obstacle& o : mObstacles) {
        if (point_in_polygon(p, o.ring))
            return 0.0;
        best = std::min(best, distance_to_boundary(p, o.ring));
    }
    return best;
}

bool WalkableRegion::contains(Point2 p) const
{
    if (!on_floor(p))
        return false;
    for (const Obstacle& o : mObstacles) {
        if (!o.box.inflated(mRobotRadius).contains(p))
            continue;
        if (point_in_polygon(p, o.ring) || !(distance_to_boundary(p, o.ring) > mRobotRadius))
            return false;
    }
    return true;
}

double WalkableRegion::area(double resolution) const
{
    if (mFloors.empty())
        return 0.0;
    const auto nx = static_cast<long>(std::ceil(mBounds.width() / resolution - 1e-9));
    const auto ny = static_cast<long>(std::ceil(mBounds.height() / resolution - 1e-9));
    long count = 0;
    for (long iy = 0; iy < ny; ++iy)
        for (long ix = 0; ix < nx; ++ix) {
            const Point2 c { mBounds.min.x + (static_cast<double>(ix) + 0.5) * resolution,
                             mBounds.min.y + (static_cast<double>(iy) + 0.5) * resolution };
            if (contains(c))
                ++count;
        }
    return static_cast<double>(count) * resolution * resolution;
}

WalkableRegion extract_walkable_region(const BuildingModel& model, double robotRadius)
{
    WalkableRegion region(model, robotRadius);
    if (region.area() <= 0.0)
        throw EmptyRegionError("walkable region is empty");
    return region;
}

} // namespace sitewalk
