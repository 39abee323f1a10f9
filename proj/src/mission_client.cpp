#include "sitewalk/mission_client.hpp"

#include <ctime>
#include <random>

#include <fmt/format.h>

#include "sitewalk/errors.hpp"

namespace sitewalk {

using Clock = std::chrono::steady_clock;

std::optional<Received> RelayClient::Inbox::pop(Clock::time_point deadline)
{
    std::unique_lock lock(mMutex);
    mCv.wait_until(lock, deadline, [&] { return mClosed || !mItems.empty(); });
    if (!mItems.empty()) {
        Received r = std::move(mItems.front());
        mItems.pop_front();
        return r;
    }
    if (mClosed)
        throw ConnectionError("relay connection lost");
    return std::nullopt;
}

RelayClient::RelayClient(Endpoint relay, std::string token, std::string project) :
    mRelay(std::move(relay)), mToken(std::move(token)), mProject(std::move(project))
{
}

RelayClient::~RelayClient() { close(); }

void RelayClient::connect()
{
    mSocket = connect_tcp(mRelay);
    Envelope hello;
    hello.type = MessageType::Hello;
    hello.message_id = make_message_id();
    hello.sender_role = Role::Client;
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
    mSessionId = string_field(reply.body, "session_id");

    mConnected = true;
    mReader = std::thread([this] { read_loop(); });
}

void RelayClient::close()
{
    mSocket.shutdown();
    if (mReader.joinable())
        mReader.join();
    mSocket.close();
}

void RelayClient::read_loop()
{
    try {
        while (auto frame = read_frame(mSocket)) {
            Received r;
            try {
                r.envelope = decode_envelope(*frame);
            } catch (const ProtocolError&) {
                continue;
            }
            r.frame = std::move(*frame);

            std::shared_ptr<Inbox> inbox;
            std::function<void(const Received&)> handler;
            {
                std::lock_guard lock(mMutex);
                if (r.envelope.correlation_id)
                    if (const auto it = mInboxes.find(*r.envelope.correlation_id); it != mInboxes.end())
                        inbox = it->second;
                if (!inbox)
                    handler = mUnsolicited;
            }
            if (inbox) {
                {
                    std::lock_guard lock(inbox->mMutex);
                    inbox->mItems.push_back(std::move(r));
                }
                inbox->mCv.notify_all();
            } else if (handler) {
                handler(r);
            }
        }
    } catch (const Error&) {
    }

    mConnected = false;
    std::lock_guard lock(mMutex);
    for (auto& [id, inbox] : mInboxes) {
        {
            std::lock_guard inner(inbox->mMutex);
            inbox->mClosed = true;
        }
        inbox->mCv.notify_all();
    }
}

std::shared_ptr<RelayClient::Inbox> RelayClient::send(Envelope& e)
{
    if (!mConnected)
        throw ConnectionError("not connected to the relay");
    if (e.message_id.empty())
        e.message_id = make_message_id();
    e.sender_role = Role::Client;
    e.project_id = mProject;

    auto inbox = std::make_shared<Inbox>();
    {
        std::lock_guard lock(mMutex);
        mInboxes[e.message_id] = inbox;
    }
    try {
        std::lock_guard lock(mWriteMutex);
        write_frame(mSocket, encode_envelope(e));
    } catch (...) {
        release(e.message_id);
        throw;
    }
    return inbox;
}

void RelayClient::release(const std::string& messageId)
{
    std::lock_guard lock(mMutex);
    mInboxes.erase(messageId);
}

Received RelayClient::request(Envelope e, std::chrono::milliseconds timeout)
{
    auto inbox = send(e);
    std::optional<Received> r;
    try {
        r = inbox->pop(Clock::now() + timeout);
    } catch (...) {
        release(e.message_id);
        throw;
    }
    release(e.message_id);
    if (!r)
        throw ConnectionError(fmt::format("no reply to {} within {} ms", to_string(e.type), timeout.count()));
    if (r->envelope.type == MessageType::Error)
        throw remote_error(r->envelope);
    return std::move(*r);
}

void RelayClient::on_unsolicited(std::function<void(const Received&)> handler)
{
    std::lock_guard lock(mMutex);
    mUnsolicited = std::move(handler);
}

PoseReport MissionClient::robot_state(std::chrono::milliseconds timeout)
{
    Envelope e;
    e.type = MessageType::RobotStateRequest;
    const Received r = mRelay.request(std::move(e), timeout);
    if (r.envelope.type != MessageType::RobotState)
        throw ProtocolError("expected ROBOT_STATE");
    return pose_report_from_json(r.envelope.body);
}

Mission MissionClient::plan(const NavGrid& grid, std::span<const Drp> drps, std::optional<Pose2D> robotPose,
                            const MissionOptions& options)
{
    if (!robotPose)
        robotPose = robot_state().pose;
    return compose_mission(grid, *robotPose, drps, options);
}

MissionClient::Active MissionClient::dispatch(const Mission& mission, const DispatchOptions& options)
{
    Envelope e;
    e.type = MessageType::MissionDispatch;
    e.body = { { "mission", serialize_mission(mission) }, { "mission_id", mission.mission_id } };

    Active active;
    active.mission = mission;
    active.inbox = mRelay.send(e);
    active.dispatch_id = e.message_id;

    std::optional<Received> r;
    try {
        r = active.inbox->pop(Clock::now() + options.ack_timeout);
    } catch (...) {
        mRelay.release(active.dispatch_id);
        throw;
    }
    if (!r) {
        mRelay.release(active.dispatch_id);
        throw MissionTimeout("no acknowledgement for mission " + mission.mission_id);
    }
    if (r->envelope.type == MessageType::Error) {
        mRelay.release(active.dispatch_id);
        throw remote_error(r->envelope);
    }
    if (r->envelope.type != MessageType::MissionAck) {
        mRelay.release(active.dispatch_id);
        throw ProtocolError(fmt::format("expected MISSION_ACK, got {}", to_string(r->envelope.type)));
    }

    const auto& ack = r->envelope.body;
    double seconds = 0.0;
    try {
        active.estimated_duration = ack.value("estimated_duration", mission.estimated_duration());
        seconds = ack.contains("deadline_s") ? ack.at("deadline_s").get<double>()
                                             : 3.0 * std::max(active.estimated_duration, 1.0);
    } catch (const nlohmann::json::exception& e) {
        mRelay.release(active.dispatch_id);
        throw ProtocolError(std::string("mission ack: ") + e.what());
    }
    auto wait = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    if (options.timeout)
        wait = *options.timeout;
    active.deadline = Clock::now() + wait;
    return active;
}

MissionResult MissionClient::collect(Active& active, const DispatchOptions& options)
{
    struct Release
    {
        RelayClient& relay;
        const std::string& id;
        ~Release() { relay.release(id); }
    } release { mRelay, active.dispatch_id };

    for (;;) {
        const auto r = active.inbox->pop(active.deadline);
        if (!r)
            throw MissionTimeout(fmt::format("mission {} did not complete before its deadline", active.mission.mission_id));
        const Envelope& env = r->envelope;
        switch (env.type) {
        case MessageType::MissionProgress:
            if (options.on_progress)
                options.on_progress(progress_from_json(env.body));
            break;
        case MessageType::Error:
            throw remote_error(env);
        case MessageType::CaptureBundle: {
            CaptureBundle bundle = bundle_from_json(env.body);
            const auto expected = active.mission.drp_ids();
            if (bundle.captures.size() != expected.size())
                throw ProtocolError("bundle capture count differs from the mission's DRP count");
            for (std::size_t i = 0; i < expected.size(); ++i)
                if (bundle.captures[i].drp_id != expected[i])
                    throw ProtocolError("bundle capture order differs from the mission's DRP order");
            MissionResult result;
            result.mission = active.mission;
            result.record.project_id = mRelay.project();
            result.record.inspection_date = bundle.inspection_date;
            result.record.mission_id = bundle.mission_id;
            result.record.captures = std::move(bundle.captures);
            result.total_time = bundle.total_time;
            result.distance_travelled = bundle.distance_travelled;
            return result;
        }
        default:
            break;
        }
    }
}

MissionResult MissionClient::dispatch_and_collect(const Mission& mission, const DispatchOptions& options)
{
    Active active = dispatch(mission, options);
    return collect(active, options);
}

nlohmann::json MissionClient::query(nlohmann::json body)
{
    Envelope e;
    e.type = MessageType::QueryCaptures;
    e.body = std::move(body);
    const Received r = mRelay.request(std::move(e), std::chrono::milliseconds(10000));
    if (r.envelope.type != MessageType::CapturesResult)
        throw ProtocolError("expected CAPTURES_RESULT");
    return r.envelope.body;
}

std::vector<InspectionRecord> MissionClient::fetch(const std::string& date, bool withPayload)
{
    const auto body = query({ { "date", date }, { "include_payload", withPayload } });
    std::vector<InspectionRecord> out;
    try {
        for (const auto& r : body.at("records"))
            out.push_back(record_from_json(r));
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("captures result: ") + e.what());
    }
    return out;
}

std::vector<std::string> MissionClient::dates()
{
    const auto body = query(nlohmann::json::object());
    try {
        return body.at("dates").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("captures result: ") + e.what());
    }
}

std::optional<Capture> MissionClient::capture(const std::string& captureId)
{
    const auto body = query({ { "capture_id", captureId } });
    const auto it = body.find("capture");
    if (it == body.end() || it->is_null())
        return std::nullopt;
    return capture_from_json(*it);
}

std::string utc_timestamp_now()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm {};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string make_mission_id()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm {};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    static std::mt19937 rng { std::random_device {}() };
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    return fmt::format("m-{}-{:04x}", buf, rng() & 0xffffu);
}

} // namespace sitewalk
