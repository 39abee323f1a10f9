#include "sitewalk/middleware.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "sitewalk/errors.hpp"
#include "sitewalk/inspection.hpp"
#include "sitewalk/localization.hpp"

namespace sitewalk {

std::string_view to_string(MiddlewareState state)
{
    switch (state) {
    case MiddlewareState::Idle: return "idle";
    case MiddlewareState::Executing: return "executing";
    case MiddlewareState::Uploading: return "uploading";
    }
    return "idle";
}

namespace {

nlohmann::json pose_json(const Pose2D& p) { return { { "x", p.x() }, { "y", p.y() }, { "theta", p.theta() } }; }

Pose2D pose_from(const nlohmann::json& j)
{
    return { j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>() };
}

double unix_now()
{
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

} // namespace

nlohmann::json pose_report_to_json(const PoseReport& r)
{
    return { { "pose", pose_json(r.pose) },
             { "localization_degraded", r.localization_degraded },
             { "mission_time", r.mission_time },
             { "timestamp", r.timestamp },
             { "state", to_string(r.state) },
             { "mission_id", r.mission_id ? nlohmann::json(*r.mission_id) : nlohmann::json() } };
}

PoseReport pose_report_from_json(const nlohmann::json& j)
{
    try {
        PoseReport r;
        r.pose = pose_from(j.at("pose"));
        r.localization_degraded = j.at("localization_degraded").get<bool>();
        r.mission_time = j.value("mission_time", 0.0);
        r.timestamp = j.value("timestamp", 0.0);
        const std::string state = j.value("state", "idle");
        r.state = state == "executing" ? MiddlewareState::Executing
                : state == "uploading" ? MiddlewareState::Uploading
                                       : MiddlewareState::Idle;
        if (const auto it = j.find("mission_id"); it != j.end() && it->is_string())
            r.mission_id = it->get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("robot state: ") + e.what());
    }
}

nlohmann::json progress_to_json(const ProgressUpdate& p)
{
    return { { "mission_id", p.mission_id },
             { "t", p.t },
             { "pose", pose_json(p.estimated_pose) },
             { "localization_degraded", p.localization_degraded },
             { "waypoint_index", p.waypoint_index },
             { "waypoint_count", p.waypoint_count },
             { "captures_taken", p.captures_taken },
             { "drp_count", p.drp_count } };
}

ProgressUpdate progress_from_json(const nlohmann::json& j)
{
    try {
        ProgressUpdate p;
        p.mission_id = j.at("mission_id").get<std::string>();
        p.t = j.at("t").get<double>();
        p.estimated_pose = pose_from(j.at("pose"));
        p.localization_degraded = j.at("localization_degraded").get<bool>();
        p.waypoint_index = j.at("waypoint_index").get<std::size_t>();
        p.waypoint_count = j.at("waypoint_count").get<std::size_t>();
        p.captures_taken = j.at("captures_taken").get<std::size_t>();
        p.drp_count = j.at("drp_count").get<std::size_t>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("progress: ") + e.what());
    }
}

nlohmann::json bundle_to_json(const CaptureBundle& b)
{
    nlohmann::json captures = nlohmann::json::array();
    for (const Capture& c : b.captures)
        captures.push_back(capture_to_json(c));
    return { { "mission_id", b.mission_id },
             { "inspection_date", b.inspection_date },
             { "total_time", b.total_time },
             { "distance_travelled", b.distance_travelled },
             { "captures", std::move(captures) } };
}

CaptureBundle bundle_from_json(const nlohmann::json& j)
{
    try {
        CaptureBundle b;
        b.mission_id = j.at("mission_id").get<std::string>();
        b.inspection_date = j.at("inspection_date").get<std::string>();
        b.total_time = j.value("total_time", 0.0);
        b.distance_travelled = j.value("distance_travelled", 0.0);
        for (const auto& c : j.at("captures"))
            b.captures.push_back(capture_from_json(c));
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("bundle: ") + e.what());
    }
}

MiddlewareCore::MiddlewareCore(BuildingModel model, MiddlewareOptions options) :
    mModel(std::move(model)), mOptions(std::move(options))
{
    const auto start = mOptions.start_pose ? mOptions.start_pose : mModel.spawn;
    if (!start)
        throw ValidationError("spawn", "no start pose configured and the model has no spawn");
    mTruePose = *start;
    mEstimatedPose = *start;
    mDegraded = visible_fiducials(*start, mModel, mOptions.sim.visibility_range).empty();
}

MiddlewareCore::~MiddlewareCore() { kill(); }

MiddlewareState MiddlewareCore::state() const
{
    std::shared_lock lock(mStateMutex);
    return mState;
}

PoseReport MiddlewareCore::answer_robot_state() const
{
    std::shared_lock lock(mStateMutex);
    PoseReport r;
    r.pose = mEstimatedPose;
    r.localization_degraded = mDegraded;
    r.mission_time = mMissionTime;
    r.timestamp = unix_now();
    r.state = mState;
    r.mission_id = mMissionId;
    return r;
}

Mission MiddlewareCore::handle_mission(std::string_view document, Callbacks callbacks)
{
    std::unique_lock lock(mStateMutex);
    if (mState != MiddlewareState::Idle)
        throw BusyError("a mission is already in progress");
    Mission mission = parse_mission(document);

    // The previous worker has already reported and set idle; reap it.
    if (mWorker.joinable()) {
        lock.unlock();
        mWorker.join();
        lock.lock();
        if (mState != MiddlewareState::Idle)
            throw BusyError("a mission is already in progress");
    }
    mState = MiddlewareState::Executing;
    mMissionId = mission.mission_id;
    mMissionTime = 0.0;
    mBuffer.clear();
    mKill = false;
    if (callbacks.accepted)
        callbacks.accepted(mission);
    mWorker = std::thread([this, mission, cb = std::move(callbacks)]() mutable { run(std::move(mission), std::move(cb)); });
    return mission;
}

void MiddlewareCore::publish(const SimState& s, const Mission&)
{
    std::unique_lock lock(mStateMutex);
    mTruePose = s.true_pose;
    mEstimatedPose = s.estimated_pose;
    mDegraded = s.localization_degraded;
    mMissionTime = s.elapsed;
}

void MiddlewareCore::finish(MiddlewareState next)
{
    {
        std::unique_lock lock(mStateMutex);
        mState = next;
        if (next == MiddlewareState::Idle) {
            mBuffer.clear();
            mMissionId.reset();
            mMissionTime = 0.0;
        }
    }
    mIdleCv.notify_all();
}

void MiddlewareCore::run(Mission mission, Callbacks cb)
{
    using Clock = std::chrono::steady_clock;
    const double estimated = std::max(mission.estimated_duration(), 1.0);
    const double simLimit = mOptions.timeout_factor * estimated;
    const auto wallStart = Clock::now();
    const auto wallLimit = mOptions.time_scale > 0.0
        ? std::optional(wallStart + std::chrono::duration<double>(simLimit / mOptions.time_scale))
        : std::nullopt;

    auto fail = [&](const std::string& message) {
        if (cb.failed)
            cb.failed(mission.mission_id, message);
        finish(MiddlewareState::Idle);
    };

    auto report = [&](const SimState& s) {
        if (!cb.progress)
            return;
        ProgressUpdate p;
        p.mission_id = mission.mission_id;
        p.t = s.elapsed;
        p.estimated_pose = s.estimated_pose;
        p.localization_degraded = s.localization_degraded;
        p.waypoint_index = s.waypoint_index;
        p.waypoint_count = mission.waypoints.size();
        p.captures_taken = s.captures_taken;
        p.drp_count = mission.drp_count();
        cb.progress(p);
    };

    try {
        Simulator sim(mission, mModel, mOptions.sim, mOptions.seed);
        publish(sim.state(), mission);
        report(sim.state());
        double nextReport = mOptions.progress_interval;

        while (!sim.done()) {
            if (mKill)
                return;
            if (auto c = sim.advance()) {
                std::unique_lock lock(mStateMutex);
                mBuffer.push_back(std::move(*c));
            }
            const SimState& s = sim.state();
            publish(s, mission);
            if (s.elapsed + 1e-9 >= nextReport || sim.done()) {
                report(s);
                while (nextReport <= s.elapsed + 1e-9)
                    nextReport += mOptions.progress_interval;
            }
            if (s.elapsed > simLimit || (wallLimit && Clock::now() > *wallLimit)) {
                fail(ExecutionError("mission exceeded its time limit").what());
                return;
            }
            if (mOptions.time_scale > 0.0)
                std::this_thread::sleep_until(wallStart + std::chrono::duration_cast<Clock::duration>(
                                                              std::chrono::duration<double>(s.elapsed / mOptions.time_scale)));
        }

        CaptureBundle bundle;
        {
            std::unique_lock lock(mStateMutex);
            mState = MiddlewareState::Uploading;
            bundle.captures = mBuffer;
        }
        if (mKill)
            return;
        if (bundle.captures.size() != mission.drp_count()) {
            fail(ExecutionError("capture count does not match the mission's DRPs").what());
            return;
        }
        bundle.mission_id = mission.mission_id;
        bundle.inspection_date = mission.inspection_date();
        bundle.total_time = sim.log().total_time;
        bundle.distance_travelled = sim.log().distance_travelled;
        if (cb.bundle)
            cb.bundle(bundle);
        finish(MiddlewareState::Idle);
    } catch (const SimulationInvariantError& e) {
        fail(ExecutionError(e.what()).what());
    }
}

void MiddlewareCore::kill()
{
    mKill = true;
    if (mWorker.joinable())
        mWorker.join();
    finish(MiddlewareState::Idle);
    mKill = false;
}

bool MiddlewareCore::wait_idle(double seconds) const
{
    std::unique_lock lock(mStateMutex);
    return mIdleCv.wait_for(lock, std::chrono::duration<double>(seconds),
                            [&] { return mState == MiddlewareState::Idle; });
}

MiddlewareConfig parse_middleware_config(std::string_view document)
{
    MiddlewareConfig c;
    try {
        const auto j = nlohmann::json::parse(document);
        c.relay = parse_endpoint(j.at("relay").get<std::string>());
        c.token = j.at("token").get<std::string>();
        c.project_id = j.at("project_id").get<std::string>();
        c.model_path = j.at("model").get<std::string>();
        c.options.seed = j.value("seed", c.options.seed);
        c.options.time_scale = j.value("time_scale", c.options.time_scale);
        c.options.progress_interval = j.value("progress_interval", c.options.progress_interval);
        c.options.timeout_factor = j.value("timeout_factor", c.options.timeout_factor);
        c.options.sim.dt = j.value("dt", c.options.sim.dt);
        c.options.sim.visibility_range = j.value("visibility_range", c.options.sim.visibility_range);
        c.options.sim.robot_radius = j.value("robot_radius", c.options.sim.robot_radius);
        if (j.contains("start_pose"))
            c.options.start_pose = pose_from(j.at("start_pose"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("middleware config: ") + e.what());
    }
    if (!(c.options.progress_interval > 0.0) || c.options.time_scale < 0.0 || !(c.options.timeout_factor > 0.0))
        throw ParseError("middleware config: progress_interval and timeout_factor must be positive");
    return c;
}

MiddlewareConfig load_middleware_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return parse_middleware_config(s.str());
}

MiddlewareNode::MiddlewareNode(Endpoint relay, std::string token, std::string project, BuildingModel model,
                               MiddlewareOptions options) :
    mRelay(std::move(relay)), mToken(std::move(token)), mProject(std::move(project)),
    mCore(std::move(model), std::move(options))
{
}

MiddlewareNode::~MiddlewareNode() { stop(); }

void MiddlewareNode::start()
{
    mSocket = connect_tcp(mRelay);
    Envelope hello;
    hello.type = MessageType::Hello;
    hello.message_id = make_message_id();
    hello.sender_role = Role::Middleware;
    hello.project_id = mProject;
    hello.body = { { "token", mToken } };
    write_frame(mSocket, encode_envelope(hello));

    const auto frame = read_frame(mSocket);
    if (!frame)
        throw ConnectionError("relay closed the connection during HELLO");
    const Envelope reply = decode_envelope(*frame);
    if (reply.type == MessageType::Error)
        throw remote_error(reply);
    if (reply.type != MessageType::HelloAck)
        throw ProtocolError("expected HELLO_ACK");

    mClosing = false;
    mRunning = true;
    mWriter = std::thread([this] { write_loop(); });
    mReader = std::thread([this] { read_loop(); });
}

void MiddlewareNode::send(Envelope e)
{
    e.sender_role = Role::Middleware;
    e.project_id = mProject;
    if (e.message_id.empty())
        e.message_id = make_message_id();
    {
        std::lock_guard lock(mQueueMutex);
        if (mClosing)
            return;
        mQueue.push_back(encode_envelope(e));
    }
    mQueueCv.notify_one();
}

void MiddlewareNode::write_loop()
{
    for (;;) {
        std::string frame;
        {
            std::unique_lock lock(mQueueMutex);
            mQueueCv.wait(lock, [&] { return mClosing || !mQueue.empty(); });
            if (mQueue.empty())
                break;
            frame = std::move(mQueue.front());
            mQueue.pop_front();
        }
        try {
            write_frame(mSocket, frame);
        } catch (const Error&) {
            break;
        }
    }
    mSocket.shutdown();
}

void MiddlewareNode::read_loop()
{
    try {
        while (auto frame = read_frame(mSocket)) {
            try {
                handle(decode_envelope(*frame));
            } catch (const ProtocolError&) {
            }
        }
    } catch (const Error&) {
    }
    mRunning = false;
}

void MiddlewareNode::handle(const Envelope& env)
{
    auto reply = [&](MessageType type, nlohmann::json body) {
        Envelope e;
        e.type = type;
        e.correlation_id = env.message_id;
        e.body = std::move(body);
        send(std::move(e));
    };

    if (env.type == MessageType::RobotStateRequest) {
        reply(MessageType::RobotState, pose_report_to_json(mCore.answer_robot_state()));
        return;
    }
    if (env.type != MessageType::MissionDispatch)
        return;

    const std::string dispatchId = env.message_id;
    const auto doc = env.body.find("mission");
    if (doc == env.body.end() || !doc->is_string()) {
        reply(MessageType::Error, error_body("MISSION_PARSE_ERROR", "dispatch body has no mission document"));
        return;
    }

    MiddlewareCore::Callbacks cb;
    cb.progress = [this, dispatchId](const ProgressUpdate& p) {
        Envelope e;
        e.type = MessageType::MissionProgress;
        e.correlation_id = dispatchId;
        e.body = progress_to_json(p);
        send(std::move(e));
    };
    cb.bundle = [this, dispatchId](const CaptureBundle& b) {
        Envelope e;
        e.type = MessageType::CaptureBundle;
        e.correlation_id = dispatchId;
        e.body = bundle_to_json(b);
        send(std::move(e));
    };
    cb.failed = [this, dispatchId](const std::string& missionId, const std::string& message) {
        Envelope e;
        e.type = MessageType::Error;
        e.correlation_id = dispatchId;
        e.body = error_body("EXECUTION_FAILED", message);
        e.body["mission_id"] = missionId;
        send(std::move(e));
    };

    cb.accepted = [&](const Mission& m) {
        const double estimated = m.estimated_duration();
        const auto& opt = mCore.options();
        nlohmann::json ack { { "mission_id", m.mission_id },
                             { "drp_count", m.drp_count() },
                             { "estimated_duration", estimated },
                             { "time_scale", opt.time_scale } };
        if (opt.time_scale > 0.0)
            ack["deadline_s"] = opt.timeout_factor * std::max(estimated, 1.0) / opt.time_scale;
        reply(MessageType::MissionAck, std::move(ack));
    };

    try {
        mCore.handle_mission(doc->get<std::string>(), std::move(cb));
    } catch (const BusyError& e) {
        reply(MessageType::Error, error_body("BUSY", e.what()));
    } catch (const MissionParseError& e) {
        reply(MessageType::Error, error_body("MISSION_PARSE_ERROR", e.what()));
    }
}

void MiddlewareNode::stop()
{
    if (!mReader.joinable() && !mWriter.joinable())
        return;
    mCore.kill();
    {
        std::lock_guard lock(mQueueMutex);
        mClosing = true;
    }
    mQueueCv.notify_one();
    if (mWriter.joinable())
        mWriter.join();
    mSocket.shutdown();
    if (mReader.joinable())
        mReader.join();
    mSocket.close();
    mRunning = false;
}

void MiddlewareNode::kill()
{
    mCore.kill();
    {
        std::lock_guard lock(mQueueMutex);
        mClosing = true;
        mQueue.clear();
    }
    mQueueCv.notify_one();
    mSocket.shutdown();
    if (mWriter.joinable())
        mWriter.join();
    if (mReader.joinable())
        mReader.join();
    mSocket.close();
    mRunning = false;
}

} // namespace sitewalk
