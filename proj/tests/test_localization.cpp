#include <doctest.h>

#include <array>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sitewalk/localization.hpp"
#include "sitewalk/planner.hpp"

using namespace sitewalk;
using std::numbers::pi;

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 homogeneous(double x, double y, double theta)
{
    return { { { std::cos(theta), -std::sin(theta), x }, { std::sin(theta), std::cos(theta), y }, { 0, 0, 1 } } };
}

Mat3 mul(const Mat3& a, const Mat3& b)
{
    Mat3 r {};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

double angle_gap(double a, double b)
{
    return std::abs(std::atan2(std::sin(a - b), std::cos(a - b)));
}

BuildingModel load_fixture(const std::string& name)
{
    return load_building_model_file(oracle::fixture_path(name));
}

Path bfh_path()
{
    const BuildingModel m = load_fixture("bfh_approx.json");
    const NavGrid g = build_nav_grid(extract_walkable_region(m, kDefaultRobotRadius));
    const Mission mission = compose_mission(g, *m.spawn, load_drps_file(oracle::fixture_path("bfh_drps.json")));
    Path p;
    for (const MissionWaypoint& w : mission.waypoints)
        p.waypoints.push_back(w.point);
    p.length = polyline_length(p.waypoints);
    return p;
}

BuildingModel open_floor_with_fiducial(double fx, double fy)
{
    BuildingModel m;
    m.bounds = { { 0, 0 }, { 10, 10 } };
    m.elements.push_back({ "floor", Layer::Floor, { { 0, 0 }, { 10, 0 }, { 10, 10 }, { 0, 10 } }, 0.0 });
    m.fiducials.push_back({ "f", Pose2D(fx, fy, 0.0), 0.0 });
    return m;
}

} // namespace

TEST_CASE("pose from fiducial")
{
    SUBCASE("fiducial at the origin")
    {
        const FiducialObservation obs { "f", Pose2D(1, 0, 0), 1.0 };
        const Pose2D w = pose_from_fiducial(obs, Pose2D(0, 0, 0));
        CHECK(w.x() == doctest::Approx(1.0));
        CHECK(w.y() == doctest::Approx(0.0));
    }
    SUBCASE("rotated and translated fiducial")
    {
        const FiducialObservation obs { "f", Pose2D(1, 0, 0), 1.0 };
        const Pose2D w = pose_from_fiducial(obs, Pose2D(2, 3, pi / 2));
        const Mat3 ref = mul(homogeneous(2, 3, pi / 2), homogeneous(1, 0, 0));
        CHECK(std::abs(w.x() - ref[0][2]) < 1e-12);
        CHECK(std::abs(w.y() - ref[1][2]) < 1e-12);
        CHECK(angle_gap(w.theta(), std::atan2(ref[1][0], ref[0][0])) < 1e-12);
        CHECK(std::abs(w.x() - 2.0) < 1e-12);
        CHECK(std::abs(w.y() - 4.0) < 1e-12);
        CHECK(std::abs(w.theta() - pi / 2) < 1e-12);
    }
    SUBCASE("observe then recover")
    {
        const Pose2D fid(4, -2, 2.5);
        const Pose2D robot(-1, 7, -0.3);
        const FiducialObservation obs = observe_fiducial("f", robot, fid);
        CHECK(std::abs(obs.range - std::hypot(obs.relative_pose.x(), obs.relative_pose.y())) < 1e-9);
        const Pose2D back = pose_from_fiducial(obs, fid);
        CHECK(distance(back.position(), robot.position()) < 1e-9);
        CHECK(angle_gap(back.theta(), robot.theta()) < 1e-9);
    }
}

TEST_CASE("waypoints in the robot frame")
{
    const Point2 a = waypoint_to_robot_frame({ 3, 4 }, Pose2D(0, 0, 0));
    CHECK(a.x == doctest::Approx(3.0));
    CHECK(a.y == doctest::Approx(4.0));

    const Point2 b = waypoint_to_robot_frame({ 1, 2 }, Pose2D(1, 1, pi / 2));
    // Inverse robot matrix applied to the waypoint
    const Mat3 r = homogeneous(1, 1, pi / 2);
    const double ix = r[0][0] * (1 - r[0][2]) + r[1][0] * (2 - r[1][2]);
    const double iy = r[0][1] * (1 - r[0][2]) + r[1][1] * (2 - r[1][2]);
    CHECK(std::abs(b.x - ix) < 1e-12);
    CHECK(std::abs(b.y - iy) < 1e-12);
    CHECK(std::abs(b.x - 1.0) < 1e-12);
    CHECK(std::abs(b.y) < 1e-12);

    const Point2 c = waypoint_to_robot_frame({ 5, 5 }, Pose2D(5, 5, 1.2));
    CHECK(c.x == 0.0);
    CHECK(c.y == 0.0);
}

TEST_CASE("visibility and occlusion")
{
    BuildingModel m = open_floor_with_fiducial(5, 5);
    const Pose2D robot(3, 5, 0);
    CHECK(visible_fiducials(robot, m, 8.0) == std::vector<std::string> { "f" });
    CHECK(visible_fiducials(robot, m, 1.5).empty());

    m.elements.push_back({ "wall", Layer::Wall, { { 3.9, 0 }, { 4.1, 0 }, { 4.1, 10 }, { 3.9, 10 } }, 2.0 });
    CHECK(visible_fiducials(robot, m, 8.0).empty());

    // Doors do not occlude.
    m.elements.back().layer = Layer::Door;
    CHECK(visible_fiducials(robot, m, 8.0) == std::vector<std::string> { "f" });
}

TEST_CASE("visible fiducial order is deterministic and independent of element order")
{
    BuildingModel m = load_fixture("bfh_approx.json");
    m.fiducials.push_back({ "fid_twin", m.fiducials[0].pose, 0.0 });
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.5, 29.5), uy(0.5, 14.5);
    for (int k = 0; k < 200; ++k) {
        const Pose2D p(ux(rng), uy(rng), 0.0);
        const auto base = visible_fiducials(p, m);
        BuildingModel shuffled = m;
        std::shuffle(shuffled.elements.begin(), shuffled.elements.end(), rng);
        std::shuffle(shuffled.fiducials.begin(), shuffled.fiducials.end(), rng);
        REQUIRE(visible_fiducials(p, shuffled) == base);
        for (std::size_t i = 1; i < base.size(); ++i) {
            const double da = distance(p.position(), m.find_fiducial(base[i - 1])->pose.position());
            const double db = distance(p.position(), m.find_fiducial(base[i])->pose.position());
            REQUIRE((da < db || (da == db && base[i - 1] < base[i])));
        }
    }
}

TEST_CASE("BFH path sees a fiducial everywhere")
{
    const BuildingModel m = load_fixture("bfh_approx.json");
    const Path path = bfh_path();

    for (int k = 0; k < 100; ++k) {
        const double s = path.length * k / 99.0;
        const Pose2D at(point_at_arc_length(path.waypoints, s), 0.0);
        REQUIRE_FALSE(visible_fiducials(at, m, 8.0).empty());
    }
    const CoverageReport r = validate_fiducial_coverage(path, m, 8.0, 0.25);
    CHECK(r.covered);
    CHECK(r.gaps.empty());
    CHECK(r.max_gap_distance == 0.0);
}

TEST_CASE("thinned fiducials leave gaps that match a sampling oracle")
{
    const BuildingModel thinned = load_fixture("bfh_thinned.json");
    const Path path = bfh_path();
    const CoverageReport r = validate_fiducial_coverage(path, thinned, 8.0, 0.25);
    CHECK_FALSE(r.covered);
    REQUIRE(r.gaps.size() >= 1);

    std::vector<oracle::Rect> blockers;
    for (const Element& e : thinned.elements) {
        if (!is_obstacle(e.layer))
            continue;
        const Box2 b = bounding_box(e.footprint);
        blockers.push_back({ b.min.x, b.min.y, b.max.x, b.max.y });
    }
    auto seen = [&](Point2 p) {
        for (const FiducialSpec& f : thinned.fiducials) {
            const Point2 q = f.pose.position();
            if (std::hypot(q.x - p.x, q.y - p.y) > 8.0)
                continue;
            bool blocked = false;
            for (const oracle::Rect& b : blockers)
                blocked = blocked || oracle::segment_hits_rect(p.x, p.y, q.x, q.y, b);
            if (!blocked)
                return true;
        }
        return false;
    };

    // Walk the polyline independently of point_at_arc_length.
    std::vector<std::pair<double, Point2>> samples;
    std::vector<double> cumulative { 0.0 };
    for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        cumulative.push_back(cumulative.back() + distance(path.waypoints[i - 1], path.waypoints[i]));
    const double total = cumulative.back();
    auto at = [&](double s) {
        for (std::size_t i = 1; i < path.waypoints.size(); ++i)
            if (s <= cumulative[i] && cumulative[i] > cumulative[i - 1]) {
                const double t = (s - cumulative[i - 1]) / (cumulative[i] - cumulative[i - 1]);
                return path.waypoints[i - 1] + t * (path.waypoints[i] - path.waypoints[i - 1]);
            }
        return path.waypoints.back();
    };
    for (int k = 0; k * 0.25 < total; ++k)
        samples.emplace_back(k * 0.25, at(k * 0.25));
    samples.emplace_back(total, path.waypoints.back());

    std::vector<std::pair<double, double>> gaps;
    bool open = false;
    for (const auto& [s, p] : samples) {
        if (!seen(p)) {
            if (!open)
                gaps.emplace_back(s, s);
            gaps.back().second = s;
            open = true;
        } else {
            open = false;
        }
    }

    REQUIRE(gaps.size() == r.gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        CHECK(std::abs(gaps[i].first - r.gaps[i].first) < 1e-9);
        CHECK(std::abs(gaps[i].second - r.gaps[i].second) < 1e-9);
    }
}

TEST_CASE("zero-length path with a visible fiducial is covered")
{
    const BuildingModel m = open_floor_with_fiducial(5, 5);
    const Path p { { { 4, 4 } }, 0.0 };
    const CoverageReport r = validate_fiducial_coverage(p, m);
    CHECK(r.covered);
    CHECK(r.gaps.empty());
}

TEST_CASE("placement error deviation")
{
    CHECK(placement_error_deviation(5.0, 0.0) == 0.0);
    const double oneDegree = pi / 180.0;
    CHECK(std::abs(placement_error_deviation(8.0, oneDegree) - 0.139625) < 1e-6);
    CHECK(placement_error_deviation(16.0, oneDegree) == 2.0 * placement_error_deviation(8.0, oneDegree));
    CHECK(placement_error_deviation(8.0, -oneDegree) == placement_error_deviation(8.0, oneDegree));
}

TEST_CASE("transform group laws on random poses")
{
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> pos(-50.0, 50.0), ang(-pi, pi);
    for (int k = 0; k < 1000; ++k) {
        const Pose2D a(pos(rng), pos(rng), ang(rng));
        const Pose2D b(pos(rng), pos(rng), ang(rng));
        const Pose2D c(pos(rng), pos(rng), ang(rng));

        const Transform2D ta(a);
        const Pose2D id = ta.compose(ta.inverse()).as_pose();
        REQUIRE(std::hypot(id.x(), id.y()) < 1e-9);
        REQUIRE(angle_gap(id.theta(), 0.0) < 1e-9);

        const Pose2D left = compose(compose(a, b), c);
        const Pose2D right = compose(a, compose(b, c));
        REQUIRE(distance(left.position(), right.position()) < 1e-9);
        REQUIRE(angle_gap(left.theta(), right.theta()) < 1e-9);

        const Pose2D back = compose(a, relative_to(a, b));
        REQUIRE(distance(back.position(), b.position()) < 1e-9);
        REQUIRE(angle_gap(back.theta(), b.theta()) < 1e-9);

        REQUIRE(a.theta() > -pi);
        REQUIRE(a.theta() <= pi);
    }
    CHECK(Pose2D(0, 0, -pi).theta() == pi);
    CHECK(Pose2D(0, 0, 3 * pi) == Pose2D(0, 0, pi));
}

TEST_CASE("localization through a perfect fiducial recovers ground truth")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> pos(-20.0, 20.0), ang(-pi, pi);
    for (int k = 0; k < 1000; ++k) {
        const Pose2D truth(pos(rng), pos(rng), ang(rng));
        const FiducialSpec f { "f", Pose2D(pos(rng), pos(rng), ang(rng)), 0.0 };
        const Pose2D est = pose_from_fiducial(observe_fiducial(f.id, truth, f.installed_pose()), f.pose);
        REQUIRE(distance(est.position(), truth.position()) < 1e-9);
        REQUIRE(angle_gap(est.theta(), truth.theta()) < 1e-9);
    }
}

TEST_CASE("error with a rotated fiducial follows the chord model")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ang(-pi, pi), err(-0.5, 0.5);
    for (int k = 0; k < 200; ++k) {
        const double theta = err(rng);
        const FiducialSpec f { "f", Pose2D(1, 2, ang(rng)), theta };
        const double heading = ang(rng);
        double previous = -1.0;
        for (double d = 0.5; d <= 12.0; d += 0.5) {
            const Pose2D truth(1 + d * std::cos(heading), 2 + d * std::sin(heading), ang(rng));
            const Pose2D est = pose_from_fiducial(observe_fiducial(f.id, truth, f.installed_pose()), f.pose);
            const double e = distance(est.position(), truth.position());
            REQUIRE(std::abs(e - placement_error_deviation(d, theta)) < 1e-9);
            if (theta != 0.0)
                REQUIRE(e > previous);
            previous = e;
        }
    }
}
