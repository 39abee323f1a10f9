#ifndef SITEWALK_MISSION_CLIENT_HPP
#define SITEWALK_MISSION_CLIENT_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sitewalk/inspection.hpp"
#include "sitewalk/middleware.hpp"
#include "sitewalk/planner.hpp"
#include "sitewalk/wire.hpp"

namespace sitewalk {

struct Received
{
    Envelope envelope;
    /* The frame exactly as it came off the wire */
    std::string frame;
};

/*
 * One authenticated relay session. A reader thread routes every incoming
 * frame to the inbox registered under its correlation id; anything else goes
 * to the unsolicited handler.
 */
class RelayClient
{
public:
    class Inbox
    {
    public:
        /* nullopt on timeout; throws ConnectionError once the session is gone */
        std::optional<Received> pop(std::chrono::steady_clock::time_point deadline);

    private:
        friend class RelayClient;
        std::mutex mMutex;
        std::condition_variable mCv;
        std::deque<Received> mItems;
        bool mClosed = false;
    };

    RelayClient(Endpoint relay, std::string token, std::string project);
    ~RelayClient();

    RelayClient(const RelayClient&) = delete;
    RelayClient& operator=(const RelayClient&) = delete;

    /* HELLO round trip; throws ConnectionError or RemoteError (UNAUTHORIZED) */
    void connect();
    void close();
    bool connected() const { return mConnected.load(); }

    const std::string& project() const { return mProject; }
    const std::string& session_id() const { return mSessionId; }

    /* Sends `e` (message id and routing fields filled in) and returns the
     * inbox collecting everything correlated to it */
    std::shared_ptr<Inbox> send(Envelope& e);
    void release(const std::string& messageId);

    /* Single reply; ERROR replies are thrown as RemoteError */
    Received request(Envelope e, std::chrono::milliseconds timeout);

    void on_unsolicited(std::function<void(const Received&)> handler);

private:
    void read_loop();

    Endpoint mRelay;
    std::string mToken;
    std::string mProject;
    std::string mSessionId;

    Socket mSocket;
    std::mutex mWriteMutex;
    std::thread mReader;
    std::atomic<bool> mConnected { false };

    std::mutex mMutex;
    std::map<std::string, std::shared_ptr<Inbox>> mInboxes;
    std::function<void(const Received&)> mUnsolicited;
};

struct DispatchOptions
{
    std::function<void(const ProgressUpdate&)> on_progress;
    /* Wait for MISSION_ACK (or the relay's refusal) this long */
    std::chrono::milliseconds ack_timeout { 10000 };
    /* Overrides the deadline announced in the acknowledgement */
    std::optional<std::chrono::milliseconds> timeout;
};

struct MissionResult
{
    Mission mission;
    InspectionRecord record;
    double total_time = 0.0;
    double distance_travelled = 0.0;
};

class MissionClient
{
public:
    struct Active
    {
        Mission mission;
        std::string dispatch_id;
        std::shared_ptr<RelayClient::Inbox> inbox;
        std::chrono::steady_clock::time_point deadline;
        double estimated_duration = 0.0;
    };

    explicit MissionClient(RelayClient& relay) : mRelay(relay) { }

    PoseReport robot_state(std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

    /* Uses the robot's reported pose when `robotPose` is unset */
    Mission plan(const NavGrid& grid, std::span<const Drp> drps, std::optional<Pose2D> robotPose,
                 const MissionOptions& options);

    /* Sends MISSION_DISPATCH and waits for the acknowledgement */
    Active dispatch(const Mission& mission, const DispatchOptions& options = {});
    /* Consumes progress until the bundle; throws MissionTimeout or RemoteError */
    MissionResult collect(Active& active, const DispatchOptions& options = {});
    MissionResult dispatch_and_collect(const Mission& mission, const DispatchOptions& options = {});

    std::vector<InspectionRecord> fetch(const std::string& date, bool withPayload = true);
    std::vector<std::string> dates();
    std::optional<Capture> capture(const std::string& captureId);

private:
    nlohmann::json query(nlohmann::json body);

    RelayClient& mRelay;
};

/* m-YYYYMMDDThhmmssZ-xxxx */
std::string make_mission_id();
/* Current UTC time as YYYY-MM-DDThh:mm:ssZ */
std::string utc_timestamp_now();

} // namespace sitewalk

#endif // SITEWALK_MISSION_CLIENT_HPP
