#ifndef SITEWALK_MIDDLEWARE_HPP
#define SITEWALK_MIDDLEWARE_HPP

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "sitewalk/building_model.hpp"
#include "sitewalk/capture.hpp"
#include "sitewalk/mission.hpp"
#include "sitewalk/robot_sim.hpp"
#include "sitewalk/wire.hpp"

namespace sitewalk {

enum class MiddlewareState
{
    Idle,
    Executing,
    Uploading,
};

std::string_view to_string(MiddlewareState state);

struct PoseReport
{
    Pose2D pose;
    bool localization_degraded = false;
    /* Seconds of simulated time since the current mission started (0 when idle) */
    double mission_time = 0.0;
    /* Unix time of the report (s) */
    double timestamp = 0.0;
    MiddlewareState state = MiddlewareState::Idle;
    std::optional<std::string> mission_id;
};

nlohmann::json pose_report_to_json(const PoseReport& report);
PoseReport pose_report_from_json(const nlohmann::json& j);

struct ProgressUpdate
{
    std::string mission_id;
    double t = 0.0;
    Pose2D estimated_pose;
    bool localization_degraded = false;
    std::size_t waypoint_index = 0;
    std::size_t waypoint_count = 0;
    std::size_t captures_taken = 0;
    std::size_t drp_count = 0;
};

nlohmann::json progress_to_json(const ProgressUpdate& p);
ProgressUpdate progress_from_json(const nlohmann::json& j);

struct CaptureBundle
{
    std::string mission_id;
    std::string inspection_date;
    double total_time = 0.0;
    double distance_travelled = 0.0;
    std::vector<Capture> captures;
};

nlohmann::json bundle_to_json(const CaptureBundle& b);
CaptureBundle bundle_from_json(const nlohmann::json& j);

struct MiddlewareOptions
{
    SimConfig sim;
    std::uint64_t seed = 1;
    /* Simulated seconds between progress reports */
    double progress_interval = 0.2;
    /* Simulated seconds per wall-clock second; 0 runs unpaced */
    double time_scale = 0.0;
    /* Abort after this multiple of the estimated mission duration */
    double timeout_factor = 3.0;
    /* Start pose; the model's spawn when unset */
    std::optional<Pose2D> start_pose;
};

/*
 * Site-side mission executor: accepts one mission at a time, runs it on the
 * simulator in a worker thread, buffers captures and hands the complete
 * bundle over once the mission is done. Pose queries may arrive from any
 * thread and read a consistent snapshot.
 */
class MiddlewareCore
{
public:
    struct Callbacks
    {
        /* Runs before execution starts, so nothing precedes the acknowledgement */
        std::function<void(const Mission&)> accepted;
        std::function<void(const ProgressUpdate&)> progress;
        std::function<void(const CaptureBundle&)> bundle;
        std::function<void(const std::string& missionId, const std::string& message)> failed;
    };

    MiddlewareCore(BuildingModel model, MiddlewareOptions options);
    ~MiddlewareCore();

    MiddlewareCore(const MiddlewareCore&) = delete;
    MiddlewareCore& operator=(const MiddlewareCore&) = delete;

    /*
     * Parse, validate and start executing. Returns the accepted mission.
     * Throws BusyError when not idle and MissionParseError for a bad
     * document; neither changes the state.
     */
    Mission handle_mission(std::string_view document, Callbacks callbacks);

    PoseReport answer_robot_state() const;
    MiddlewareState state() const;

    /* Stops the worker without reporting anything, as a crash would */
    void kill();
    /* Wait until idle; false on timeout */
    bool wait_idle(double seconds) const;

    const BuildingModel& model() const { return mModel; }
    const MiddlewareOptions& options() const { return mOptions; }

private:
    void run(Mission mission, Callbacks callbacks);
    void publish(const SimState& s, const Mission& mission);
    void finish(MiddlewareState next);

    BuildingModel mModel;
    MiddlewareOptions mOptions;

    mutable std::shared_mutex mStateMutex;
    mutable std::condition_variable_any mIdleCv;
    MiddlewareState mState = MiddlewareState::Idle;
    Pose2D mTruePose;
    Pose2D mEstimatedPose;
    bool mDegraded = false;
    double mMissionTime = 0.0;
    std::optional<std::string> mMissionId;
    std::vector<Capture> mBuffer;

    std::atomic<bool> mKill { false };
    std::thread mWorker;
};

struct MiddlewareConfig
{
    Endpoint relay;
    std::string token;
    std::string project_id;
    std::string model_path;
    MiddlewareOptions options;
};

/* {"relay","token","project_id","model","seed","time_scale","progress_interval","dt","timeout_factor","start_pose"} */
MiddlewareConfig parse_middleware_config(std::string_view document);
MiddlewareConfig load_middleware_config(const std::string& path);

/*
 * MiddlewareCore attached to a relay session. Outgoing messages go through a
 * queue drained by a writer thread, so telemetry never blocks the control
 * loop.
 */
class MiddlewareNode
{
public:
    MiddlewareNode(Endpoint relay, std::string token, std::string project, BuildingModel model,
                   MiddlewareOptions options);
    ~MiddlewareNode();

    /* Connects and authenticates; throws ConnectionError or RemoteError */
    void start();
    /* Graceful shutdown */
    void stop();
    /* Abrupt loss: drops the connection and the in-flight mission */
    void kill();

    bool running() const { return mRunning.load(); }
    MiddlewareCore& core() { return mCore; }

private:
    void read_loop();
    void write_loop();
    void send(Envelope e);
    void handle(const Envelope& env);

    Endpoint mRelay;
    std::string mToken;
    std::string mProject;
    MiddlewareCore mCore;

    Socket mSocket;
    std::atomic<bool> mRunning { false };
    std::thread mReader;
    std::thread mWriter;
    std::mutex mQueueMutex;
    std::condition_variable mQueueCv;
    std::deque<std::string> mQueue;
    bool mClosing = false;
};

} // namespace sitewalk

#endif // SITEWALK_MIDDLEWARE_HPP
