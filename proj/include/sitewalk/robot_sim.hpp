#ifndef SITEWALK_ROBOT_SIM_HPP
#define SITEWALK_ROBOT_SIM_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sitewalk/building_model.hpp"
#include "sitewalk/capture.hpp"
#include "sitewalk/localization.hpp"
#include "sitewalk/mission.hpp"
#include "sitewalk/pose.hpp"

namespace sitewalk {

struct SimConfig
{
    double dt = 0.05;
    double visibility_range = kDefaultVisibilityRange;
    double robot_radius = kDefaultRobotRadius;
    /* Slack on the walkable-region check; grid paths may graze the inflated
     * obstacle boundary by up to about one nav cell */
    double region_tolerance = 0.1;
    /* Standard deviation of the fiducial observation noise */
    double observation_noise_position = 0.0;
    double observation_noise_heading = 0.0;
};

enum class SimPhase
{
    Moving,
    Dwelling,
    Done,
};

struct SimState
{
    Pose2D true_pose;
    Pose2D estimated_pose;
    /* Index of the waypoint being approached or dwelt at */
    std::size_t waypoint_index = 0;
    double elapsed = 0.0;
    SimPhase phase = SimPhase::Moving;
    double dwell_remaining = 0.0;
    bool localization_degraded = false;
    /* Fiducial used for the latest fix; empty while dead reckoning */
    std::string fix_fiducial;
    std::size_t captures_taken = 0;
    double distance_travelled = 0.0;
};

/* Model plus derived data the integrator needs */
struct SimWorld
{
    SimWorld(const BuildingModel& model, SimConfig config);

    const BuildingModel& model;
    WalkableRegion region;
    SimConfig config;
};

struct TelemetrySample
{
    double t = 0.0;
    Pose2D estimated_pose;
    Pose2D true_pose;
    bool localization_degraded = false;
    std::string fiducial_id;
    std::size_t waypoint_index = 0;
};

struct MissionLog
{
    std::vector<Capture> captures;
    std::vector<TelemetrySample> telemetry;
    double total_time = 0.0;
    double distance_travelled = 0.0;
    double max_localization_error = 0.0;
};

/* Fix the estimated pose from the nearest visible fiducial, or dead-reckon
 * from `previous` by the motion between `previousTruth` and `state.true_pose` */
void localize(SimState& state, const SimState& previous, const SimWorld& world, std::mt19937_64& rng);

/* Initial state at the mission's first waypoint, localized */
SimState initial_state(const Mission& mission, const SimWorld& world, std::mt19937_64& rng);

/*
 * Advance one tick of `dt` seconds. Motion never overshoots a waypoint;
 * reaching a DRP switches to dwelling, and the capture fires when the dwell
 * runs out. A fired capture is written to `capture`.
 * Throws SimulationInvariantError when the robot leaves the walkable region.
 */
SimState step(const SimState& state, const Mission& mission, const SimWorld& world, double dt,
              std::mt19937_64& rng, std::optional<Capture>* capture = nullptr);

/* Stepped simulation of one mission */
class Simulator
{
public:
    Simulator(Mission mission, const BuildingModel& model, SimConfig config, std::uint64_t seed);

    const SimState& state() const { return mState; }
    const Mission& mission() const { return mMission; }
    bool done() const { return mState.phase == SimPhase::Done; }

    /* Returns the capture fired during this tick, if any */
    std::optional<Capture> advance();

    const MissionLog& log() const { return mLog; }
    MissionLog take_log() { return std::move(mLog); }

private:
    void record();

    Mission mMission;
    SimWorld mWorld;
    std::mt19937_64 mRng;
    SimState mState;
    MissionLog mLog;
};

MissionLog execute_mission(const Mission& mission, const BuildingModel& model, std::uint64_t seed,
                           const SimConfig& config = {});

/* Byte-stable JSON rendering (payloads base64) */
std::string serialize_mission_log(const MissionLog& log);

} // namespace sitewalk

#endif // SITEWALK_ROBOT_SIM_HPP
