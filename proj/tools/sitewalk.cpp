#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sitewalk/building_model.hpp"
#include "sitewalk/errors.hpp"
#include "sitewalk/gateway.hpp"
#include "sitewalk/mission_client.hpp"
#include "sitewalk/nav_grid.hpp"
#include "sitewalk/planner.hpp"

using namespace sitewalk;

namespace {

enum Exit
{
    kOk = 0,
    kFailure = 1,
    kPlanning = 2,
    kConnectivity = 3,
    kAuth = 4,
    kTimeout = 5,
};

struct Common
{
    std::string model;
    std::string drps;
    std::string relay = "127.0.0.1:7600";
    std::string token;
    std::string project;
    std::string robotPose;
    std::string missionId;
    std::string createdAt;
    std::string date;
    double speed = kDefaultSpeed;
    double dwell = kDefaultDwell;
    double robotRadius = kDefaultRobotRadius;
    bool dryRun = false;
};

std::optional<Pose2D> parse_pose(const std::string& text)
{
    if (text.empty())
        return std::nullopt;
    double x = 0, y = 0, theta = 0;
    char tail = 0;
    const int n = std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &x, &y, &theta, &tail);
    if (n != 2 && n != 3)
        throw ParseError("--robot-pose expects x,y[,theta]");
    return Pose2D(x, y, theta);
}

std::unique_ptr<RelayClient> open_relay(const Common& c)
{
    if (c.project.empty())
        throw ParseError("--project is required");
    auto relay = std::make_unique<RelayClient>(parse_endpoint(c.relay), c.token, c.project);
    relay->connect();
    return relay;
}

Mission plan_mission(const Common& c, const BuildingModel& model, MissionClient* client)
{
    const std::vector<Drp> drps = c.drps.empty() ? std::vector<Drp> {} : load_drps_file(c.drps);
    const NavGrid grid = build_nav_grid(WalkableRegion(model, c.robotRadius));

    MissionOptions options;
    options.speed = c.speed;
    options.dwell_per_drp = c.dwell;
    // Dry runs get fixed identifiers
    options.mission_id = !c.missionId.empty() ? c.missionId : c.dryRun ? "mission" : make_mission_id();
    if (!c.date.empty() && !is_valid_date(c.date))
        throw ParseError("--date expects YYYY-MM-DD");
    if (!c.createdAt.empty())
        options.created_at = c.createdAt;
    else if (!c.date.empty())
        options.created_at = c.date + "T00:00:00Z";
    else
        options.created_at = c.dryRun ? "1970-01-01T00:00:00Z" : utc_timestamp_now();
    if (!is_valid_timestamp(options.created_at))
        throw ParseError("--created-at expects YYYY-MM-DDThh:mm:ssZ");

    std::optional<Pose2D> pose = parse_pose(c.robotPose);
    if (!pose && (c.dryRun || !client))
        pose = model.spawn;
    if (!pose && !client)
        throw ParseError("no robot pose: pass --robot-pose or give the model a spawn");
    if (client)
        return client->plan(grid, drps, pose, options);
    return compose_mission(grid, *pose, drps, options);
}

std::string pose_text(const Pose2D& p) { return fmt::format("({:.3f}, {:.3f}, {:.3f})", p.x(), p.y(), p.theta()); }

void print_records(const std::vector<InspectionRecord>& records)
{
    fmt::print("{:<28} {:>4}  {:<16} {:<40} {}\n", "mission", "seq", "drp", "capture", "pose");
    for (const InspectionRecord& r : records)
        for (const Capture& c : r.captures)
            fmt::print("{:<28} {:>4}  {:<16} {:<40} {}\n", r.mission_id, c.sequence, c.drp_id, c.capture_id,
                       pose_text(c.pose_at_capture));
}

void save_payloads(const std::vector<InspectionRecord>& records, const std::string& dir)
{
    if (dir.empty())
        return;
    std::filesystem::create_directories(dir);
    for (const InspectionRecord& r : records)
        for (const Capture& c : r.captures) {
            std::ofstream out(std::filesystem::path(dir) / (c.capture_id + ".png"), std::ios::binary);
            out.write(reinterpret_cast<const char*>(c.payload.data()), static_cast<std::streamsize>(c.payload.size()));
        }
}

int run_plan(const Common& c)
{
    const BuildingModel model = load_building_model_file(c.model);
    std::unique_ptr<RelayClient> relay;
    std::unique_ptr<MissionClient> client;
    if (!c.dryRun && c.robotPose.empty()) {
        relay = open_relay(c);
        client = std::make_unique<MissionClient>(*relay);
    }
    const Mission mission = plan_mission(c, model, client.get());
    std::cout << serialize_mission(mission) << "\n";
    fmt::print(stderr, "{} waypoints, {} DRPs, length {:.3f} m, estimated {:.1f} s\n", mission.waypoints.size(),
               mission.drp_count(), mission.length(), mission.estimated_duration());
    return kOk;
}

int run_dispatch(const Common& c, double timeout, const std::string& saveDir)
{
    const BuildingModel model = load_building_model_file(c.model);
    auto relay = open_relay(c);
    MissionClient client(*relay);
    const Mission mission = plan_mission(c, model, &client);
    fmt::print(stderr, "dispatching {}: {} DRPs, length {:.3f} m, estimated {:.1f} s\n", mission.mission_id,
               mission.drp_count(), mission.length(), mission.estimated_duration());

    DispatchOptions options;
    if (timeout > 0)
        options.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout * 1000));
    std::size_t lastWaypoint = static_cast<std::size_t>(-1);
    options.on_progress = [&](const ProgressUpdate& p) {
        if (p.waypoint_index == lastWaypoint)
            return;
        lastWaypoint = p.waypoint_index;
        fmt::print(stderr, "t={:7.1f}s waypoint {}/{} captures {}/{} {}{}\n", p.t, p.waypoint_index + 1,
                   p.waypoint_count, p.captures_taken, p.drp_count, pose_text(p.estimated_pose),
                   p.localization_degraded ? " degraded" : "");
    };
    const MissionResult result = client.dispatch_and_collect(mission, options);
    fmt::print(stderr, "completed in {:.1f} s simulated, {:.3f} m travelled\n", result.total_time,
               result.distance_travelled);
    print_records({ result.record });
    save_payloads({ result.record }, saveDir);
    return kOk;
}

int run_fetch(const Common& c, const std::string& date, const std::string& saveDir)
{
    auto relay = open_relay(c);
    MissionClient client(*relay);
    if (date.empty()) {
        for (const std::string& d : client.dates())
            fmt::print("{}\n", d);
        return kOk;
    }
    if (!is_valid_date(date))
        throw ParseError("--date expects YYYY-MM-DD");
    const auto records = client.fetch(date, !saveDir.empty());
    print_records(records);
    save_payloads(records, saveDir);
    return kOk;
}

int run_serve(const Common& c, const std::string& listen, const std::string& gatewayToken, const std::string& schedule,
              double timeout)
{
    GatewayConfig config;
    config.listen = parse_endpoint(listen);
    config.token = gatewayToken;
    config.relay = parse_endpoint(c.relay);
    config.relay_token = c.token;
    config.project_id = c.project;
    config.mission.speed = c.speed;
    config.mission.dwell_per_drp = c.dwell;
    config.robot_radius = c.robotRadius;
    if (!schedule.empty())
        config.schedule = schedule;
    if (timeout > 0)
        config.mission_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout * 1000));
    if (config.token.empty())
        throw ParseError("--gateway-token is required");

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Gateway gateway(std::move(config), load_building_model_file(c.model));
    gateway.start();
    fmt::print("gateway listening on {}:{}\n", parse_endpoint(listen).host, gateway.port());
    std::fflush(stdout);
    int sig = 0;
    sigwait(&signals, &sig);
    gateway.stop();
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Plan, dispatch and review site inspection missions" };
    app.require_subcommand(1);
    Common c;

    auto addModel = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--model", c.model, "Building model JSON")->check(CLI::ExistingFile);
        if (required)
            opt->required();
    };
    auto addRelay = [&](CLI::App* sub) {
        sub->add_option("--relay", c.relay, "Relay address host:port")->capture_default_str();
        sub->add_option("--token", c.token, "Client token");
        sub->add_option("--project", c.project, "Project id");
    };
    auto addPlanning = [&](CLI::App* sub) {
        sub->add_option("--drp", c.drps, "DRP list JSON [{\"id\",\"x\",\"y\"}]")->check(CLI::ExistingFile);
        sub->add_option("--robot-pose", c.robotPose, "x,y[,theta]; queried from the robot when omitted");
        sub->add_option("--mission-id", c.missionId);
        sub->add_option("--created-at", c.createdAt, "YYYY-MM-DDThh:mm:ssZ");
        sub->add_option("--date", c.date, "Inspection date YYYY-MM-DD, when --created-at is not given");
        sub->add_option("--speed", c.speed, "m/s")->capture_default_str();
        sub->add_option("--dwell", c.dwell, "seconds per DRP")->capture_default_str();
        sub->add_option("--robot-radius", c.robotRadius)->capture_default_str();
    };

    auto* plan = app.add_subcommand("plan", "Compose a mission and print its document");
    addModel(plan, true);
    addRelay(plan);
    addPlanning(plan);
    plan->add_flag("--dry-run", c.dryRun, "Never contact the relay");

    double timeout = 0;
    std::string saveDir;
    auto* dispatch = app.add_subcommand("dispatch", "Plan, dispatch and wait for the captures");
    addModel(dispatch, true);
    addRelay(dispatch);
    addPlanning(dispatch);
    dispatch->add_option("--timeout", timeout, "Seconds; defaults to the middleware's deadline");
    dispatch->add_option("--save", saveDir, "Write capture PNGs to this directory");

    std::string date;
    auto* fetch = app.add_subcommand("fetch", "List stored captures of a date, or the dates");
    addRelay(fetch);
    fetch->add_option("--date", date, "YYYY-MM-DD; lists dates when omitted");
    fetch->add_option("--save", saveDir, "Write capture PNGs to this directory");

    std::string listen = "127.0.0.1:8080";
    std::string gatewayToken;
    std::string schedule;
    auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
    addModel(serve, true);
    addRelay(serve);
    serve->add_option("--speed", c.speed)->capture_default_str();
    serve->add_option("--dwell", c.dwell)->capture_default_str();
    serve->add_option("--listen", listen)->capture_default_str();
    serve->add_option("--gateway-token", gatewayToken, "Bearer token for HTTP callers")->required();
    serve->add_option("--schedule", schedule, "Static schedule document")->check(CLI::ExistingFile);
    serve->add_option("--timeout", timeout, "Mission deadline override in seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kFailure;
    }

    try {
        if (*plan)
            return run_plan(c);
        if (*dispatch)
            return run_dispatch(c, timeout, saveDir);
        if (*fetch)
            return run_fetch(c, date, saveDir);
        if (*serve)
            return run_serve(c, listen, gatewayToken, schedule, timeout);
    } catch (const NoPathError& e) {
        fmt::print(stderr, "no path: {}\n", e.what());
        return kPlanning;
    } catch (const RemoteError& e) {
        fmt::print(stderr, "{}\n", e.what());
        if (e.code() == "UNAUTHORIZED" || e.code() == "FORBIDDEN")
            return kAuth;
        if (e.code() == "NO_ROBOT_ONLINE")
            return kConnectivity;
        return kFailure;
    } catch (const ConnectionError& e) {
        fmt::print(stderr, "connection: {}\n", e.what());
        return kConnectivity;
    } catch (const MissionTimeout& e) {
        fmt::print(stderr, "timeout: {}\n", e.what());
        return kTimeout;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kFailure;
    }
    return kFailure;
}
