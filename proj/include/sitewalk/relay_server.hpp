#ifndef SITEWALK_RELAY_SERVER_HPP
#define SITEWALK_RELAY_SERVER_HPP

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sitewalk/inspection.hpp"
#include "sitewalk/wire.hpp"

namespace sitewalk {

struct AuthToken
{
    std::string token;
    Role role = Role::Client;
    std::string project_id;
};

struct RelayConfig
{
    Endpoint listen { "127.0.0.1", 7600 };
    std::vector<AuthToken> tokens;
    std::filesystem::path storage = "relay-store.jsonl";
    /* Outbound frames queued per session before PROGRESS starts dropping */
    std::size_t outbound_limit = 256;
};

/* {"listen","storage","outbound_limit","tokens":[{"token","role","project_id"}]}; throws ParseError */
RelayConfig parse_relay_config(std::string_view document);
RelayConfig load_relay_config(const std::string& path);

enum class MissionStatus
{
    Dispatched,
    Acknowledged,
    Completed,
    Failed,
};

std::string_view to_string(MissionStatus status);

/*
 * Authenticating message relay between client and middleware sessions.
 *
 * Each connection gets a reader thread and a writer thread. Routing and
 * persistence run on the sender's reader thread under one relay lock, so they
 * are linearizable per project; delivery goes through the receiver's bounded
 * outbound queue, so a slow reader never stalls other sessions. Frames are
 * forwarded verbatim.
 */
class RelayServer
{
public:
    explicit RelayServer(RelayConfig config);
    ~RelayServer();

    RelayServer(const RelayServer&) = delete;
    RelayServer& operator=(const RelayServer&) = delete;

    /* Binds and starts accepting; throws ConnectionError / StorageError */
    void start();
    void stop();

    std::uint16_t port() const;
    Endpoint endpoint() const { return { mConfig.listen.host, port() }; }

    /* PROGRESS frames dropped because a session queue was full */
    std::uint64_t dropped_progress() const { return mDroppedProgress.load(); }
    std::size_t session_count() const;
    std::optional<MissionStatus> mission_status(const std::string& project, const std::string& missionId) const;

    const CaptureStore& store() const { return *mStore; }

private:
    struct Session;
    struct MissionEntry
    {
        std::string dispatch_message_id;
        MissionStatus status = MissionStatus::Dispatched;
        std::shared_ptr<Session> middleware;
    };

    void accept_loop();
    void serve(std::shared_ptr<Session> session);
    void handle(const std::shared_ptr<Session>& session, const std::string& frame);
    void handle_hello(const std::shared_ptr<Session>& session, const Envelope& env);
    void handle_query(const std::shared_ptr<Session>& session, const Envelope& env);
    void reject(const std::shared_ptr<Session>& session, const Envelope* env, std::string_view code,
                std::string_view message, bool close);
    void drop(const std::shared_ptr<Session>& session);
    std::vector<std::shared_ptr<Session>> peers(const std::string& project, Role role) const;
    Envelope reply_to(const Envelope& request, MessageType type, nlohmann::json body) const;

    RelayConfig mConfig;
    std::unique_ptr<CaptureStore> mStore;
    std::unique_ptr<Listener> mListener;
    std::thread mAcceptThread;
    std::atomic<bool> mRunning { false };
    std::atomic<std::uint64_t> mDroppedProgress { 0 };

    mutable std::mutex mMutex;
    std::vector<std::shared_ptr<Session>> mSessions;
    std::map<std::pair<std::string, std::string>, MissionEntry> mMissions;
    std::uint64_t mNextSession = 0;
};

} // namespace sitewalk

#endif // SITEWALK_RELAY_SERVER_HPP
