#include "sitewalk/robot_sim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sitewalk/codec.hpp"
#include "sitewalk/errors.hpp"

namespace sitewalk {

SimWorld::SimWorld(const BuildingModel& m, SimConfig c) :
    model(m), region(m, c.robot_radius), config(c)
{
    if (!(c.dt > 0.0))
        throw SimulationInvariantError("dt must be positive");
}

void localize(SimState& state, const SimState& previous, const SimWorld& world, std::mt19937_64& rng)
{
    const auto visible = visible_fiducials(state.true_pose, world.model, world.config.visibility_range);
    if (visible.empty()) {
        const Pose2D motion = relative_to(previous.true_pose, state.true_pose);
        state.estimated_pose = compose(previous.estimated_pose, motion);
        state.localization_degraded = true;
        state.fix_fiducial.clear();
        return;
    }

    const FiducialSpec& f = *world.model.find_fiducial(visible.front());
    FiducialObservation obs = observe_fiducial(f.id, state.true_pose, f.installed_pose());

    const SimConfig& cfg = world.config;
    if (cfg.observation_noise_position > 0.0 || cfg.observation_noise_heading > 0.0) {
        std::normal_distribution<double> posNoise(0.0, cfg.observation_noise_position);
        std::normal_distribution<double> headingNoise(0.0, cfg.observation_noise_heading);
        const Pose2D& r = obs.relative_pose;
        const double nx = cfg.observation_noise_position > 0.0 ? posNoise(rng) : 0.0;
        const double ny = cfg.observation_noise_position > 0.0 ? posNoise(rng) : 0.0;
        const double nt = cfg.observation_noise_heading > 0.0 ? headingNoise(rng) : 0.0;
        obs.relative_pose = Pose2D(r.x() + nx, r.y() + ny, r.theta() + nt);
        obs.range = norm(obs.relative_pose.position());
    }

    state.estimated_pose = pose_from_fiducial(obs, f.pose);
    state.localization_degraded = false;
    state.fix_fiducial = f.id;
}

SimState initial_state(const Mission& mission, const SimWorld& world, std::mt19937_64& rng)
{
    if (mission.waypoints.empty())
        throw SimulationInvariantError("mission has no waypoints");

    SimState s;
    s.true_pose = Pose2D(mission.waypoints.front().point, 0.0);
    if (mission.waypoints.size() > 1) {
        const Point2 d = mission.waypoints[1].point - mission.waypoints[0].point;
        if (norm(d) > 0.0)
            s.true_pose = Pose2D(mission.waypoints.front().point, std::atan2(d.y, d.x));
    }
    s.estimated_pose = s.true_pose;
    const SimState seed = s;
    localize(s, seed, world, rng);
    return s;
}

namespace {

constexpr double kArrivalEps = 1e-12;

void check_region(const SimState& s, const SimWorld& world)
{
    const Point2 p = s.true_pose.position();
    const double limit = world.config.robot_radius - world.config.region_tolerance;
    if (!world.region.on_floor(p) || !(world.region.clearance(p) > limit))
        throw SimulationInvariantError(
            fmt::format("robot left the walkable region at ({:.3f}, {:.3f})", p.x, p.y));
}

/* Waypoint reached: dwell at DRPs, otherwise move on */
void arrive(SimState& s, const Mission& mission, bool& dwellStartedNow)
{
    if (mission.waypoints[s.waypoint_index].is_drp) {
        s.phase = SimPhase::Dwelling;
        s.dwell_remaining = mission.dwell_per_drp;
        dwellStartedNow = true;
        return;
    }
    ++s.waypoint_index;
    if (s.waypoint_index == mission.waypoints.size())
        s.phase = SimPhase::Done;
}

void fire_capture(SimState& s, const Mission& mission, std::optional<Capture>* capture)
{
    const MissionWaypoint& w = mission.waypoints[s.waypoint_index];
    if (capture) {
        Capture c = capture_panorama(mission.mission_id, w.drp_id.value_or(""), s.estimated_pose,
                                     s.captures_taken);
        c.timestamp = s.elapsed;
        *capture = std::move(c);
    }
    ++s.captures_taken;
    s.dwell_remaining = 0.0;
    ++s.waypoint_index;
    s.phase = s.waypoint_index == mission.waypoints.size() ? SimPhase::Done : SimPhase::Moving;
}

} // namespace

SimState step(const SimState& state, const Mission& mission, const SimWorld& world, double dt,
              std::mt19937_64& rng, std::optional<Capture>* capture)
{
    if (!(dt > 0.0))
        throw SimulationInvariantError("dt must be positive");
    if (state.phase == SimPhase::Done)
        throw SimulationInvariantError("mission already complete");

    SimState s = state;
    s.elapsed += dt;
    bool dwellStartedNow = false;

    if (s.phase == SimPhase::Moving) {
        // Waypoints already under the robot are passed without spending time.
        while (s.phase == SimPhase::Moving &&
               distance(s.true_pose.position(), mission.waypoints[s.waypoint_index].point) <= kArrivalEps)
            arrive(s, mission, dwellStartedNow);

        if (s.phase == SimPhase::Moving) {
            const Point2 here = s.true_pose.position();
            const Point2 target = mission.waypoints[s.waypoint_index].point;
            const Point2 delta = target - here;
            const double remaining = norm(delta);
            const double heading = std::atan2(delta.y, delta.x);
            const double travel = mission.speed * dt;

            if (travel >= remaining - kArrivalEps) {
                s.true_pose = Pose2D(target, heading);
                s.distance_travelled += remaining;
                arrive(s, mission, dwellStartedNow);
            } else {
                s.true_pose = Pose2D(here + (travel / remaining) * delta, heading);
                s.distance_travelled += travel;
            }
            check_region(s, world);
        }
    } else if (s.phase == SimPhase::Dwelling) {
        s.dwell_remaining -= dt;
    }

    localize(s, state, world, rng);

    if (s.phase == SimPhase::Dwelling && !dwellStartedNow && s.dwell_remaining <= 1e-9)
        fire_capture(s, mission, capture);
    else if (s.phase == SimPhase::Dwelling && dwellStartedNow && s.dwell_remaining <= 0.0)
        fire_capture(s, mission, capture);

    return s;
}

Simulator::Simulator(Mission mission, const BuildingModel& model, SimConfig config, std::uint64_t seed) :
    mMission(std::move(mission)), mWorld(model, config), mRng(seed)
{
    mState = initial_state(mMission, mWorld, mRng);
    record();
}

void Simulator::record()
{
    TelemetrySample t;
    t.t = mState.elapsed;
    t.estimated_pose = mState.estimated_pose;
    t.true_pose = mState.true_pose;
    t.localization_degraded = mState.localization_degraded;
    t.fiducial_id = mState.fix_fiducial;
    t.waypoint_index = mState.waypoint_index;
    mLog.telemetry.push_back(std::move(t));

    mLog.total_time = mState.elapsed;
    mLog.distance_travelled = mState.distance_travelled;
    mLog.max_localization_error = std::max(
        mLog.max_localization_error, distance(mState.estimated_pose.position(), mState.true_pose.position()));
}

std::optional<Capture> Simulator::advance()
{
    std::optional<Capture> fired;
    mState = step(mState, mMission, mWorld, mWorld.config.dt, mRng, &fired);
    if (fired)
        mLog.captures.push_back(*fired);
    record();
    return fired;
}

MissionLog execute_mission(const Mission& mission, const BuildingModel& model, std::uint64_t seed,
                           const SimConfig& config)
{
    Simulator sim(mission, model, config, seed);
    while (!sim.done())
        sim.advance();
    return sim.take_log();
}

namespace {

nlohmann::ordered_json pose_json(const Pose2D& p)
{
    // Six-decimal strings keep the rendering independent of float printing.
    return { { "x", fixed6(p.x()) }, { "y", fixed6(p.y()) }, { "theta", fixed6(p.theta()) } };
}

} // namespace

std::string serialize_mission_log(const MissionLog& log)
{
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["total_time"] = fixed6(log.total_time);
    doc["distance_travelled"] = fixed6(log.distance_travelled);
    doc["max_localization_error"] = fixed6(log.max_localization_error);

    ordered_json captures = ordered_json::array();
    for (const Capture& c : log.captures) {
        ordered_json jc;
        jc["capture_id"] = c.capture_id;
        jc["mission_id"] = c.mission_id;
        jc["drp_id"] = c.drp_id;
        jc["sequence"] = c.sequence;
        jc["pose"] = pose_json(c.pose_at_capture);
        jc["timestamp"] = fixed6(c.timestamp);
        jc["payload_b64"] = base64_encode(c.payload);
        captures.push_back(std::move(jc));
    }
    doc["captures"] = std::move(captures);

    ordered_json telemetry = ordered_json::array();
    for (const TelemetrySample& t : log.telemetry) {
        ordered_json jt;
        jt["t"] = fixed6(t.t);
        jt["estimated"] = pose_json(t.estimated_pose);
        jt["truth"] = pose_json(t.true_pose);
        jt["degraded"] = t.localization_degraded;
        jt["fiducial"] = t.fiducial_id;
        jt["waypoint_index"] = t.waypoint_index;
        telemetry.push_back(std::move(jt));
    }
    doc["telemetry"] = std::move(telemetry);
    return doc.dump();
}

} // namespace sitewalk
