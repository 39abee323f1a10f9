#include <doctest.h>

#include <thread>

#include "net_harness.hpp"
#include "oracles.hpp"
#include "sitewalk/codec.hpp"
#include "sitewalk/nav_grid.hpp"
#include "sitewalk/planner.hpp"
#include "sitewalk/robot_sim.hpp"

using namespace sitewalk;
using namespace harness;

namespace {

BuildingModel fixture_model(const char* name) { return load_building_model(oracle::read_file(oracle::fixture_path(name))); }

} // namespace

TEST_CASE("BFH mission end to end: six captures in path order, about 230 s simulated")
{
    const auto wallStart = std::chrono::steady_clock::now();
    const BuildingModel model = fixture_model("bfh_approx.json");
    const NavGrid grid = build_nav_grid(WalkableRegion(model, kDefaultRobotRadius));
    const auto drps = load_drps_file(oracle::fixture_path("bfh_drps.json"));

    TempDir dir;
    RelayServer relay(relay_config(dir.path / "store.jsonl"));
    relay.start();
    MiddlewareOptions options;
    options.seed = 11;
    MiddlewareNode node(relay.endpoint(), "mw-a", "alpha", model, options);
    node.start();
    RelayClient rc(relay.endpoint(), "client-a", "alpha");
    rc.connect();
    MissionClient client(rc);

    // The start pose comes from the robot
    const PoseReport state = client.robot_state();
    CHECK(state.state == MiddlewareState::Idle);
    CHECK(state.pose.x() == doctest::Approx(model.spawn->x()));

    MissionOptions mo;
    mo.mission_id = "m-bfh-e2e";
    mo.created_at = "2021-03-04T10:00:00Z";
    const Mission mission = client.plan(grid, drps, std::nullopt, mo);
    CHECK(mission.drp_count() == 6);
    CHECK(mission.length() >= 40.3);
    CHECK(mission.length() <= 44.5);

    std::vector<ProgressUpdate> progress;
    DispatchOptions dispatch;
    dispatch.on_progress = [&](const ProgressUpdate& p) { progress.push_back(p); };
    const MissionResult result = client.dispatch_and_collect(mission, dispatch);

    CHECK(result.total_time == doctest::Approx(230.0).epsilon(0.05));
    REQUIRE(result.record.captures.size() == 6);
    CHECK(result.record.inspection_date == "2021-03-04");
    CHECK(!progress.empty());
    for (std::size_t i = 1; i < progress.size(); ++i)
        CHECK(progress[i].waypoint_index >= progress[i - 1].waypoint_index);

    // Three-way order: mission DRP order == client record order == simulator capture order
    Simulator sim(mission, model, options.sim, options.seed);
    std::vector<Capture> simulated;
    while (!sim.done())
        if (auto c = sim.advance())
            simulated.push_back(*c);
    const auto order = mission.drp_ids();
    REQUIRE(simulated.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(result.record.captures[i].drp_id == order[i]);
        CHECK(simulated[i].drp_id == order[i]);
        CHECK(result.record.captures[i].sequence == i);
        CHECK(result.record.captures[i].capture_id == simulated[i].capture_id);
        CHECK(result.record.captures[i].payload == simulated[i].payload);
    }

    // The relay holds the same record
    const auto stored = client.fetch("2021-03-04");
    REQUIRE(stored.size() == 1);
    CHECK(stored[0] == result.record);
    CHECK(relay.mission_status("alpha", "m-bfh-e2e") == std::optional(MissionStatus::Completed));

    const PoseReport after = client.robot_state();
    CHECK(after.state == MiddlewareState::Idle);
    CHECK(after.pose.x() == doctest::Approx(mission.waypoints.back().point.x).epsilon(0.01));

    rc.close();
    node.stop();
    relay.stop();
    CHECK(std::chrono::steady_clock::now() - wallStart < std::chrono::seconds(10));
}

TEST_CASE("zero-DRP mission yields an empty record")
{
    const BuildingModel model = fixture_model("bfh_approx.json");
    const NavGrid grid = build_nav_grid(WalkableRegion(model, kDefaultRobotRadius));
    TempDir dir;
    RelayServer relay(relay_config(dir.path / "store.jsonl"));
    relay.start();
    MiddlewareNode node(relay.endpoint(), "mw-a", "alpha", model, {});
    node.start();
    RelayClient rc(relay.endpoint(), "client-a", "alpha");
    rc.connect();
    MissionClient client(rc);

    MissionOptions mo;
    mo.mission_id = "m-empty";
    mo.created_at = "2021-03-05T10:00:00Z";
    const Mission mission = client.plan(grid, {}, std::nullopt, mo);
    CHECK(mission.length() == 0.0);
    const MissionResult result = client.dispatch_and_collect(mission);
    CHECK(result.record.captures.empty());
    CHECK(result.record.mission_id == "m-empty");
    rc.close();
    node.stop();
    relay.stop();
}

TEST_CASE("middleware killed mid-mission: client times out and nothing is persisted")
{
    const BuildingModel model = fixture_model("empty_10x10.json");
    const NavGrid grid = build_nav_grid(WalkableRegion(model, kDefaultRobotRadius));
    TempDir dir;
    RelayServer relay(relay_config(dir.path / "store.jsonl"));
    relay.start();
    MiddlewareOptions options;
    options.start_pose = Pose2D(1, 1, 0);
    options.time_scale = 40.0;
    MiddlewareNode node(relay.endpoint(), "mw-a", "alpha", model, options);
    node.start();
    RelayClient rc(relay.endpoint(), "client-a", "alpha");
    rc.connect();
    MissionClient client(rc);

    MissionOptions mo;
    mo.mission_id = "m-killed";
    mo.created_at = "2024-08-01T09:00:00Z";
    mo.dwell_per_drp = 5.0;
    const std::vector<Drp> drps { { "a", { 8, 1 } }, { "b", { 8, 8 } } };
    const Mission mission = client.plan(grid, drps, std::nullopt, mo);

    MissionClient::Active active = client.dispatch(mission);
    const double deadline = 3.0 * mission.estimated_duration() / options.time_scale;
    const auto dispatched = std::chrono::steady_clock::now();
    CHECK(relay.mission_status("alpha", "m-killed") == std::optional(MissionStatus::Acknowledged));

    std::atomic<bool> first { false };
    DispatchOptions watch;
    watch.on_progress = [&](const ProgressUpdate&) {
        if (!first.exchange(true))
            node.kill();
    };
    CHECK_THROWS_AS(client.collect(active, watch), MissionTimeout);
    const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - dispatched).count();
    CHECK(waited == doctest::Approx(deadline).epsilon(0.15));

    CHECK(first);
    CHECK_FALSE(relay.store().has_mission("alpha", "m-killed"));
    CHECK(relay.store().record_count() == 0);
    CHECK(relay.mission_status("alpha", "m-killed") == std::optional(MissionStatus::Failed));
    rc.close();
    relay.stop();
}

TEST_CASE("dispatch while a mission runs is refused with BUSY")
{
    const BuildingModel model = fixture_model("empty_10x10.json");
    const NavGrid grid = build_nav_grid(WalkableRegion(model, kDefaultRobotRadius));
    TempDir dir;
    RelayServer relay(relay_config(dir.path / "store.jsonl"));
    relay.start();
    MiddlewareOptions options;
    options.start_pose = Pose2D(1, 1, 0);
    options.time_scale = 50.0;
    MiddlewareNode node(relay.endpoint(), "mw-a", "alpha", model, options);
    node.start();
    RelayClient rc(relay.endpoint(), "client-a", "alpha");
    rc.connect();
    MissionClient client(rc);

    MissionOptions mo;
    mo.created_at = "2024-08-02T09:00:00Z";
    mo.dwell_per_drp = 2.0;
    const std::vector<Drp> drps { { "a", { 6, 1 } } };
    mo.mission_id = "m-first";
    const Mission m1 = client.plan(grid, drps, Pose2D(1, 1, 0), mo);
    mo.mission_id = "m-second";
    const Mission m2 = client.plan(grid, drps, Pose2D(1, 1, 0), mo);

    MissionClient::Active active = client.dispatch(m1);
    try {
        client.dispatch(m2);
        FAIL("expected BUSY");
    } catch (const RemoteError& e) {
        CHECK(e.code() == "BUSY");
    }
    const MissionResult r = client.collect(active);
    CHECK(r.record.captures.size() == 1);
    CHECK_FALSE(relay.store().has_mission("alpha", "m-second"));

    // A malformed document is refused too
    Envelope bad;
    bad.type = MessageType::MissionDispatch;
    bad.body = { { "mission", "{\"mission_id\":" }, { "mission_id", "m-bad" } };
    auto inbox = rc.send(bad);
    const auto reply = inbox->pop(std::chrono::steady_clock::now() + std::chrono::seconds(5));
    REQUIRE(reply.has_value());
    CHECK(reply->envelope.type == MessageType::Error);
    CHECK(reply->envelope.body["code"] == "MISSION_PARSE_ERROR");
    rc.release(bad.message_id);
    rc.close();
    node.stop();
    relay.stop();
}

TEST_CASE("middleware connection is refused with a bad token or a taken slot")
{
    const BuildingModel model = fixture_model("bfh_approx.json");
    TempDir dir;
    RelayServer relay(relay_config(dir.path / "store.jsonl"));
    relay.start();
    MiddlewareNode bad(relay.endpoint(), "mw-b", "alpha", model, {});
    try {
        bad.start();
        FAIL("expected UNAUTHORIZED");
    } catch (const RemoteError& e) {
        CHECK(e.code() == "UNAUTHORIZED");
    }
    MiddlewareNode first(relay.endpoint(), "mw-a", "alpha", model, {});
    first.start();
    MiddlewareNode second(relay.endpoint(), "mw-a", "alpha", model, {});
    try {
        second.start();
        FAIL("expected CONFLICT");
    } catch (const RemoteError& e) {
        CHECK(e.code() == "CONFLICT");
    }
    first.stop();
    relay.stop();
}
