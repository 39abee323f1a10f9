#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "sitewalk/errors.hpp"
#include "sitewalk/planner.hpp"
#include "sitewalk/robot_sim.hpp"

using namespace sitewalk;

namespace {

BuildingModel load_fixture(const std::string& name)
{
    return load_building_model_file(oracle::fixture_path(name));
}

BuildingModel lit_floor()
{
    BuildingModel m = load_fixture("empty_10x10.json");
    m.fiducials.push_back({ "f", Pose2D(5, 5, 0), 0.0 });
    return m;
}

Mission straight_mission(std::vector<MissionWaypoint> wps, double dwell = 0.0)
{
    Mission m;
    m.mission_id = "t";
    m.created_at = "2021-01-01T00:00:00Z";
    m.speed = 0.4;
    m.dwell_per_drp = dwell;
    m.waypoints = std::move(wps);
    return m;
}

Mission bfh_mission(const BuildingModel& model)
{
    const NavGrid g = build_nav_grid(extract_walkable_region(model, kDefaultRobotRadius));
    MissionOptions opt;
    opt.mission_id = "bfh";
    opt.created_at = "2021-03-04T10:00:00Z";
    return compose_mission(g, *model.spawn, load_drps_file(oracle::fixture_path("bfh_drps.json")), opt);
}

} // namespace

TEST_CASE("one tick advances speed times dt")
{
    const BuildingModel model = lit_floor();
    const Mission m = straight_mission({ { { 1, 1 }, false, {} }, { { 4, 1 }, false, {} } });
    const SimWorld world(model, {});
    std::mt19937_64 rng(0);
    const SimState s0 = initial_state(m, world, rng);
    const SimState s1 = step(s0, m, world, 0.05, rng);
    CHECK(std::abs(s1.true_pose.x() - 1.02) < 1e-12);
    CHECK(s1.true_pose.y() == 1.0);
    CHECK(s1.true_pose.theta() == 0.0);
    CHECK(s1.phase == SimPhase::Moving);
    CHECK(s1.elapsed == 0.05);
}

TEST_CASE("motion clamps at the waypoint")
{
    const BuildingModel model = lit_floor();
    const SimWorld world(model, {});
    std::mt19937_64 rng(0);

    SUBCASE("plain waypoint")
    {
        const Mission m = straight_mission(
            { { { 1, 1 }, false, {} }, { { 2, 1 }, false, {} }, { { 2, 3 }, false, {} } });
        SimState s = initial_state(m, world, rng);
        s.true_pose = Pose2D(1.99, 1, 0);
        s.waypoint_index = 1;
        const SimState n = step(s, m, world, 0.05, rng);
        CHECK(n.true_pose.x() == 2.0);
        CHECK(n.true_pose.y() == 1.0);
        CHECK(n.waypoint_index == 2);
        CHECK(n.phase == SimPhase::Moving);
    }
    SUBCASE("DRP waypoint starts a dwell")
    {
        const Mission m = straight_mission({ { { 1, 1 }, false, {} }, { { 2, 1 }, true, "d" } }, 1.0);
        SimState s = initial_state(m, world, rng);
        s.true_pose = Pose2D(1.99, 1, 0);
        s.waypoint_index = 1;
        const SimState n = step(s, m, world, 0.05, rng);
        CHECK(n.true_pose.x() == 2.0);
        CHECK(n.phase == SimPhase::Dwelling);
        CHECK(n.dwell_remaining == 1.0);
    }
    SUBCASE("last waypoint finishes")
    {
        const Mission m = straight_mission({ { { 1, 1 }, false, {} }, { { 2, 1 }, false, {} } });
        SimState s = initial_state(m, world, rng);
        s.true_pose = Pose2D(1.99, 1, 0);
        s.waypoint_index = 1;
        const SimState n = step(s, m, world, 0.05, rng);
        CHECK(n.phase == SimPhase::Done);
        CHECK(n.waypoint_index == 2);
        CHECK_THROWS_AS(step(n, m, world, 0.05, rng), SimulationInvariantError);
    }
}

TEST_CASE("leaving the walkable region is an invariant violation")
{
    BuildingModel model = lit_floor();
    model.elements.push_back({ "block", Layer::Wall, { { 3, 0.5 }, { 4, 0.5 }, { 4, 1.5 }, { 3, 1.5 } }, 2.0 });
    const Mission m = straight_mission({ { { 1, 1 }, false, {} }, { { 8, 1 }, false, {} } });
    CHECK_THROWS_AS(execute_mission(m, model, 1), SimulationInvariantError);
}

TEST_CASE("pure travel time")
{
    const BuildingModel model = lit_floor();
    const Mission m = straight_mission(
        { { { 0.5, 1 }, false, {} }, { { 9.5, 1 }, false, {} }, { { 9.5, 2 }, false, {} } });
    const MissionLog log = execute_mission(m, model, 3);
    CHECK(std::abs(log.total_time - 25.0) <= 0.05);
    CHECK(log.captures.empty());
    CHECK(std::abs(log.distance_travelled - 10.0) < 1e-9);
    CHECK(log.total_time == log.telemetry.back().t);
}

TEST_CASE("BFH mission timing, captures and distance")
{
    const BuildingModel model = load_fixture("bfh_approx.json");
    const Mission m = bfh_mission(model);
    const MissionLog log = execute_mission(m, model, 42);

    // 3 min 50 s, +/- 5%
    CHECK(std::abs(log.total_time - 230.0) <= 0.05 * 230.0);
    CHECK(std::abs(log.distance_travelled - m.length()) < 1e-3);

    const double ideal = m.length() / m.speed + static_cast<double>(m.drp_count()) * m.dwell_per_drp;
    const double excess = log.total_time - ideal;
    CHECK(excess >= -1e-9);
    CHECK(excess <= 2.0 * 0.05 * static_cast<double>(m.waypoints.size()));

    REQUIRE(log.captures.size() == 6);
    CHECK(log.captures.size() == m.drp_count());
    const auto ids = m.drp_ids();
    for (std::size_t k = 0; k < log.captures.size(); ++k) {
        CHECK(log.captures[k].drp_id == ids[k]);
        CHECK(log.captures[k].sequence == k);
        CHECK(log.captures[k].mission_id == "bfh");
        if (k > 0)
            CHECK(log.captures[k].timestamp > log.captures[k - 1].timestamp);
    }

    // Every fiducial has zero orientation error here.
    CHECK(log.max_localization_error <= 1e-6);
    for (const TelemetrySample& t : log.telemetry)
        CHECK_FALSE(t.localization_degraded);
}

TEST_CASE("a rotated fiducial produces the chord error")
{
    BuildingModel model = load_fixture("bfh_approx.json");
    const double theta = std::numbers::pi / 180.0;
    model.fiducials[0].placement_orientation_error = theta;
    const std::string rotated = model.fiducials[0].id;
    const Mission m = bfh_mission(model);
    const MissionLog log = execute_mission(m, model, 42);

    CHECK(log.max_localization_error > 0.0);
    std::vector<std::pair<double, double>> samples;
    for (const TelemetrySample& t : log.telemetry) {
        const double err = distance(t.estimated_pose.position(), t.true_pose.position());
        if (t.fiducial_id != rotated) {
            REQUIRE(err <= 1e-6);
            continue;
        }
        const double d = distance(t.true_pose.position(), model.fiducials[0].pose.position());
        REQUIRE(std::abs(err - placement_error_deviation(d, theta)) < 1e-6);
        samples.emplace_back(d, err);
    }
    REQUIRE(samples.size() > 10);
    std::sort(samples.begin(), samples.end());
    for (std::size_t k = 1; k < samples.size(); ++k)
        if (samples[k].first > samples[k - 1].first + 1e-6)
            CHECK(samples[k].second > samples[k - 1].second);
}

TEST_CASE("dead reckoning when no fiducial is visible")
{
    const BuildingModel model = load_fixture("empty_10x10.json");
    const Mission m = straight_mission({ { { 1, 1 }, false, {} }, { { 5, 1 }, true, "d" } }, 0.5);
    const MissionLog log = execute_mission(m, model, 1);
    for (const TelemetrySample& t : log.telemetry) {
        CHECK(t.localization_degraded);
        CHECK(t.fiducial_id.empty());
    }
    CHECK(log.max_localization_error < 1e-9);
    REQUIRE(log.captures.size() == 1);
}

TEST_CASE("seed stability")
{
    const BuildingModel model = load_fixture("bfh_approx.json");
    const Mission m = bfh_mission(model);
    CHECK(serialize_mission_log(execute_mission(m, model, 7)) == serialize_mission_log(execute_mission(m, model, 7)));

    SimConfig noisy;
    noisy.observation_noise_position = 0.01;
    noisy.observation_noise_heading = 0.002;
    const std::string a = serialize_mission_log(execute_mission(m, model, 7, noisy));
    const std::string b = serialize_mission_log(execute_mission(m, model, 7, noisy));
    const std::string c = serialize_mission_log(execute_mission(m, model, 8, noisy));
    CHECK(a == b);
    CHECK(a != c);
}
