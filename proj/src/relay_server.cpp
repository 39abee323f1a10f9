#include "sitewalk/relay_server.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <span>
#include <sstream>

#include <fmt/format.h>

#include "sitewalk/errors.hpp"
#include "sitewalk/mission.hpp"

namespace sitewalk {

RelayConfig parse_relay_config(std::string_view document)
{
    RelayConfig c;
    try {
        const auto j = nlohmann::json::parse(document);
        if (j.contains("listen"))
            c.listen = parse_endpoint(j.at("listen").get<std::string>());
        if (j.contains("storage"))
            c.storage = j.at("storage").get<std::string>();
        if (j.contains("outbound_limit"))
            c.outbound_limit = j.at("outbound_limit").get<std::size_t>();
        for (const auto& t : j.value("tokens", nlohmann::json::array())) {
            AuthToken a;
            a.token = t.at("token").get<std::string>();
            const auto role = parse_role(t.at("role").get<std::string>());
            if (!role)
                throw ParseError("token role must be client or middleware");
            a.role = *role;
            a.project_id = t.at("project_id").get<std::string>();
            for (const AuthToken& other : c.tokens)
                if (other.token == a.token)
                    throw ParseError("duplicate token in relay config");
            c.tokens.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("relay config: ") + e.what());
    }
    return c;
}

RelayConfig load_relay_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return parse_relay_config(s.str());
}

std::string_view to_string(MissionStatus status)
{
    switch (status) {
    case MissionStatus::Dispatched: return "dispatched";
    case MissionStatus::Acknowledged: return "acknowledged";
    case MissionStatus::Completed: return "completed";
    case MissionStatus::Failed: return "failed";
    }
    return "failed";
}

struct RelayServer::Session
{
    explicit Session(Socket s) : socket(std::move(s)) { }

    Socket socket;
    std::uint64_t id = 0;
    bool authenticated = false;
    Role role = Role::Client;
    std::string project;

    std::mutex queueMutex;
    std::condition_variable queueCv;
    std::deque<std::string> queue;
    bool closing = false;
    std::thread writer;
    std::thread reader;

    /* Queue a frame; false when it was dropped */
    bool enqueue(std::string frame, bool droppable, std::size_t limit)
    {
        {
            std::lock_guard lock(queueMutex);
            if (closing)
                return false;
            if (droppable && queue.size() >= limit)
                return false;
            queue.push_back(std::move(frame));
        }
        queueCv.notify_one();
        return true;
    }

    /* Flush what is queued, then hang up */
    void close_after_flush()
    {
        {
            std::lock_guard lock(queueMutex);
            closing = true;
        }
        queueCv.notify_one();
    }

    void write_loop()
    {
        for (;;) {
            std::string frame;
            {
                std::unique_lock lock(queueMutex);
                queueCv.wait(lock, [&] { return closing || !queue.empty(); });
                if (queue.empty())
                    break;
                frame = std::move(queue.front());
                queue.pop_front();
            }
            try {
                write_frame(socket, frame);
            } catch (const Error&) {
                break;
            }
        }
        socket.shutdown();
    }
};

RelayServer::RelayServer(RelayConfig config) : mConfig(std::move(config)) { }

RelayServer::~RelayServer() { stop(); }

void RelayServer::start()
{
    mStore = std::make_unique<CaptureStore>(mConfig.storage);
    mListener = std::make_unique<Listener>(mConfig.listen);
    mRunning = true;
    mAcceptThread = std::thread([this] { accept_loop(); });
}

std::uint16_t RelayServer::port() const { return mListener ? mListener->port() : 0; }

void RelayServer::stop()
{
    if (!mRunning.exchange(false))
        return;
    mListener->close();
    if (mAcceptThread.joinable())
        mAcceptThread.join();

    // Sessions remove themselves as their readers exit; a session still
    // listed has not closed its socket yet.
    for (;;) {
        {
            std::lock_guard lock(mMutex);
            if (mSessions.empty())
                break;
            for (const auto& s : mSessions) {
                s->socket.shutdown();
                s->close_after_flush();
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    std::lock_guard lock(mMutex);
    mListener.reset();
}

std::size_t RelayServer::session_count() const
{
    std::lock_guard lock(mMutex);
    return mSessions.size();
}

std::optional<MissionStatus> RelayServer::mission_status(const std::string& project, const std::string& missionId) const
{
    std::lock_guard lock(mMutex);
    const auto it = mMissions.find({ project, missionId });
    if (it == mMissions.end())
        return std::nullopt;
    return it->second.status;
}

void RelayServer::accept_loop()
{
    while (mRunning) {
        Socket s = mListener->accept();
        if (!s.valid())
            break;
        auto session = std::make_shared<Session>(std::move(s));
        {
            std::lock_guard lock(mMutex);
            session->id = ++mNextSession;
            mSessions.push_back(session);
        }
        session->writer = std::thread([session] { session->write_loop(); });
        session->reader = std::thread([this, session] { serve(session); });
        session->reader.detach();
    }
}

void RelayServer::serve(std::shared_ptr<Session> session)
{
    try {
        while (auto frame = read_frame(session->socket))
            handle(session, *frame);
    } catch (const ProtocolError& e) {
        reject(session, nullptr, "BAD_FRAME", e.what(), true);
    } catch (const std::exception&) {
        // I/O failure or a peer-triggered fault: either way this session ends
    }
    drop(session);
    session->close_after_flush();
    if (session->writer.joinable())
        session->writer.join();
    {
        std::lock_guard lock(mMutex);
        std::erase(mSessions, session);
    }
    session->socket.close();
}

void RelayServer::drop(const std::shared_ptr<Session>& session)
{
    std::lock_guard lock(mMutex);
    for (auto& [key, entry] : mMissions)
        if (entry.middleware == session &&
            (entry.status == MissionStatus::Dispatched || entry.status == MissionStatus::Acknowledged)) {
            entry.status = MissionStatus::Failed;
            entry.middleware.reset();
        }
    session->authenticated = false;
}

Envelope RelayServer::reply_to(const Envelope& request, MessageType type, nlohmann::json body) const
{
    Envelope e;
    e.type = type;
    e.message_id = make_message_id();
    e.correlation_id = request.message_id;
    // Relay-originated replies speak as the recipient's counterpart.
    e.sender_role = request.sender_role == Role::Client ? Role::Middleware : Role::Client;
    e.project_id = request.project_id;
    body["origin"] = "relay";
    e.body = std::move(body);
    return e;
}

void RelayServer::reject(const std::shared_ptr<Session>& session, const Envelope* env, std::string_view code,
                         std::string_view message, bool close)
{
    Envelope e;
    if (env) {
        e = reply_to(*env, MessageType::Error, error_body(code, message));
    } else {
        e.type = MessageType::Error;
        e.message_id = make_message_id();
        e.sender_role = session->role == Role::Client ? Role::Middleware : Role::Client;
        e.project_id = session->project;
        e.body = error_body(code, message);
        e.body["origin"] = "relay";
    }
    session->enqueue(encode_envelope(e), false, mConfig.outbound_limit);
    if (close) {
        session->close_after_flush();
        std::lock_guard lock(mMutex);
        session->authenticated = false;
    }
}

std::vector<std::shared_ptr<RelayServer::Session>> RelayServer::peers(const std::string& project, Role role) const
{
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& s : mSessions)
        if (s->authenticated && s->role == role && s->project == project)
            out.push_back(s);
    return out;
}

void RelayServer::handle_hello(const std::shared_ptr<Session>& session, const Envelope& env)
{
    const std::string token = string_field(env.body, "token");
    const AuthToken* match = nullptr;
    for (const AuthToken& t : mConfig.tokens)
        if (!token.empty() && t.token == token)
            match = &t;
    if (!match || match->role != env.sender_role || match->project_id != env.project_id) {
        reject(session, &env, "UNAUTHORIZED", "unknown token or role/project mismatch", true);
        return;
    }

    {
        std::lock_guard lock(mMutex);
        if (match->role == Role::Middleware && !peers(match->project_id, Role::Middleware).empty()) {
            // Reply outside the lock; reject takes it again.
        } else {
            session->authenticated = true;
            session->role = match->role;
            session->project = match->project_id;
            Envelope ack = reply_to(env, MessageType::HelloAck,
                                    { { "session_id", fmt::format("s{}", session->id) },
                                      { "role", to_string(match->role) },
                                      { "project_id", match->project_id } });
            session->enqueue(encode_envelope(ack), false, mConfig.outbound_limit);
            return;
        }
    }
    reject(session, &env, "CONFLICT", "a middleware session is already open for this project", true);
}

void RelayServer::handle_query(const std::shared_ptr<Session>& session, const Envelope& env)
{
    const auto flag = env.body.find("include_payload");
    const bool withPayload = flag == env.body.end() || !flag->is_boolean() || flag->get<bool>();
    nlohmann::json body;
    if (const auto it = env.body.find("capture_id"); it != env.body.end() && it->is_string()) {
        const auto c = mStore->find_capture(session->project, it->get<std::string>());
        body["capture"] = c ? capture_to_json(*c, withPayload) : nlohmann::json();
    } else if (const auto it = env.body.find("date"); it != env.body.end()) {
        if (!it->is_string() || !is_valid_date(it->get<std::string>())) {
            reject(session, &env, "BAD_REQUEST", "date must be YYYY-MM-DD", false);
            return;
        }
        nlohmann::json records = nlohmann::json::array();
        for (const InspectionRecord& r : mStore->query(session->project, it->get<std::string>()))
            records.push_back(record_to_json(r, withPayload));
        body["date"] = *it;
        body["records"] = std::move(records);
    } else {
        body["dates"] = mStore->dates(session->project);
    }
    session->enqueue(encode_envelope(reply_to(env, MessageType::CapturesResult, std::move(body))), false,
                     mConfig.outbound_limit);
}

void RelayServer::handle(const std::shared_ptr<Session>& session, const std::string& frame)
{
    Envelope env;
    try {
        env = decode_envelope(frame);
    } catch (const ProtocolError& e) {
        reject(session, nullptr, "BAD_ENVELOPE", e.what(), !session->authenticated);
        return;
    }

    bool authenticated;
    {
        std::lock_guard lock(mMutex);
        authenticated = session->authenticated;
    }
    if (!authenticated) {
        if (env.type == MessageType::Hello)
            handle_hello(session, env);
        else
            reject(session, &env, "UNAUTHORIZED", "HELLO required first", true);
        return;
    }

    if (env.project_id != session->project) {
        reject(session, &env, "FORBIDDEN", "project does not match the session", false);
        return;
    }

    static constexpr MessageType kClientTypes[] = { MessageType::RobotStateRequest, MessageType::MissionDispatch,
                                                    MessageType::QueryCaptures };
    static constexpr MessageType kMiddlewareTypes[] = { MessageType::RobotState, MessageType::MissionAck,
                                                        MessageType::MissionProgress, MessageType::CaptureBundle,
                                                        MessageType::Error };
    const auto allowed = session->role == Role::Client ? std::span<const MessageType>(kClientTypes)
                                                       : std::span<const MessageType>(kMiddlewareTypes);
    if (env.sender_role != session->role || std::find(allowed.begin(), allowed.end(), env.type) == allowed.end()) {
        reject(session, &env, "ILLEGAL_TYPE",
               fmt::format("{} may not send {}", to_string(session->role), to_string(env.type)), false);
        return;
    }
    if (is_reply(env.type) && !env.correlation_id) {
        reject(session, &env, "BAD_ENVELOPE", "reply without correlation_id", false);
        return;
    }

    if (env.type == MessageType::QueryCaptures) {
        handle_query(session, env);
        return;
    }

    std::unique_lock lock(mMutex);
    if (session->role == Role::Client) {
        const auto robots = peers(session->project, Role::Middleware);
        if (robots.empty()) {
            lock.unlock();
            reject(session, &env, "NO_ROBOT_ONLINE", "no middleware connected for this project", false);
            return;
        }
        if (env.type == MessageType::MissionDispatch) {
            if (const auto it = env.body.find("mission_id"); it != env.body.end() && it->is_string())
                mMissions[{ session->project, it->get<std::string>() }] = { env.message_id, MissionStatus::Dispatched,
                                                                             robots.front() };
        }
        for (const auto& r : robots)
            r->enqueue(frame, false, mConfig.outbound_limit);
        return;
    }

    std::string missionId;
    if (const auto it = env.body.find("mission_id"); it != env.body.end() && it->is_string())
        missionId = it->get<std::string>();
    auto status = [&](MissionStatus s) {
        if (const auto it = mMissions.find({ session->project, missionId }); it != mMissions.end())
            it->second.status = s;
    };

    switch (env.type) {
    case MessageType::MissionAck:
        status(MissionStatus::Acknowledged);
        break;
    case MessageType::Error:
        if (!missionId.empty())
            status(MissionStatus::Failed);
        break;
    case MessageType::CaptureBundle: {
        InspectionRecord record;
        try {
            record.project_id = session->project;
            record.mission_id = env.body.at("mission_id").get<std::string>();
            record.inspection_date = env.body.at("inspection_date").get<std::string>();
            for (const auto& c : env.body.at("captures"))
                record.captures.push_back(capture_from_json(c));
        } catch (const std::exception& e) {
            lock.unlock();
            reject(session, &env, "BAD_ENVELOPE", e.what(), false);
            return;
        }
        try {
            mStore->put(record);
        } catch (const StorageError& e) {
            lock.unlock();
            reject(session, &env, "STORAGE_ERROR", e.what(), false);
            return;
        }
        status(MissionStatus::Completed);
        break;
    }
    default:
        break;
    }

    const bool droppable = env.type == MessageType::MissionProgress;
    for (const auto& c : peers(session->project, Role::Client))
        if (!c->enqueue(frame, droppable, mConfig.outbound_limit) && droppable)
            ++mDroppedProgress;
}

} // namespace sitewalk
