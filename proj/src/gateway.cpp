#include "sitewalk/gateway.hpp"

#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "sitewalk/errors.hpp"
#include "sitewalk/mission_client.hpp"

namespace sitewalk {

namespace {

nlohmann::json pose_json(const Pose2D& p) { return { { "x", p.x() }, { "y", p.y() }, { "theta", p.theta() } }; }

double unix_now()
{
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message)
{
    send_json(res, status, error_body(code, message));
}

int status_for(const RemoteError& e)
{
    if (e.code() == "NO_ROBOT_ONLINE")
        return 503;
    if (e.code() == "BUSY")
        return 409;
    if (e.code() == "UNAUTHORIZED" || e.code() == "FORBIDDEN")
        return 403;
    return 502;
}

struct Event
{
    std::uint64_t seq = 0;
    std::string name;
    std::string data;
};

} // namespace

struct Gateway::Impl
{
    GatewayConfig config;
    BuildingModel model;
    NavGrid grid;
    RelayClient relay;
    MissionClient client;
    httplib::Server server;
    std::thread listenThread;
    std::uint16_t boundPort = 0;

    std::mutex dispatchMutex;
    std::thread collector;

    std::mutex mutex;
    std::condition_variable eventCv;
    std::deque<Event> events;
    std::uint64_t nextSeq = 1;
    bool stopping = false;

    // Session view
    std::optional<Pose2D> robotPose;
    bool degraded = false;
    double poseTimestamp = 0.0;
    std::optional<ProgressUpdate> active;
    std::optional<std::string> activeMission;
    nlohmann::json lastResult;
    nlohmann::json lastError;

    Impl(GatewayConfig c, BuildingModel m) :
        config(std::move(c)), model(std::move(m)),
        grid(build_nav_grid(WalkableRegion(model, config.robot_radius))),
        relay(config.relay, config.relay_token, config.project_id), client(relay)
    {
    }

    nlohmann::json view_locked() const
    {
        nlohmann::json v;
        if (robotPose)
            v["robot_pose"] = { { "pose", pose_json(*robotPose) },
                                { "localization_degraded", degraded },
                                { "timestamp", poseTimestamp } };
        else
            v["robot_pose"] = nullptr;
        if (activeMission) {
            nlohmann::json a { { "mission_id", *activeMission } };
            if (active)
                a.update(progress_to_json(*active));
            v["active_mission"] = a;
        } else {
            v["active_mission"] = nullptr;
        }
        v["last_result"] = lastResult;
        v["last_error"] = lastError;
        return v;
    }

    void publish_locked(std::string name, const nlohmann::json& data)
    {
        events.push_back({ nextSeq++, std::move(name), data.dump() });
        while (events.size() > 1024)
            events.pop_front();
        eventCv.notify_all();
    }

    void publish(std::string name, const nlohmann::json& data)
    {
        std::lock_guard lock(mutex);
        publish_locked(std::move(name), data);
    }

    bool authorized(const httplib::Request& req) const
    {
        if (req.has_param("token") && req.get_param_value("token") == config.token)
            return true;
        const std::string header = req.get_header_value("Authorization");
        return header == "Bearer " + config.token;
    }

    void routes()
    {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (config.token.empty() || !authorized(req)) {
                send_error(res, 401, "UNAUTHORIZED", "missing or invalid gateway token");
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });

        server.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(serialize_building_model(model), "application/json");
        });

        server.Get("/state", [this](const httplib::Request&, httplib::Response& res) { get_state(res); });

        server.Post("/missions", [this](const httplib::Request& req, httplib::Response& res) { post_mission(req, res); });

        server.Get("/events", [this](const httplib::Request&, httplib::Response& res) { get_events(res); });

        server.Get("/captures", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string date = req.get_param_value("date");
            if (!is_valid_date(date)) {
                send_error(res, 400, "BAD_REQUEST", "date must be YYYY-MM-DD");
                return;
            }
            relay_call(res, [&] {
                nlohmann::json records = nlohmann::json::array();
                for (const InspectionRecord& r : client.fetch(date, false)) {
                    nlohmann::json j = record_to_json(r, false);
                    for (auto& c : j["captures"])
                        c["image"] = fmt::format("/captures/{}/image", c["capture_id"].get<std::string>());
                    records.push_back(std::move(j));
                }
                send_json(res, 200, { { "date", date }, { "records", std::move(records) } });
            });
        });

        server.Get(R"(/captures/([^/]+)/image)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            relay_call(res, [&] {
                const auto c = client.capture(id);
                if (!c) {
                    send_error(res, 404, "NOT_FOUND", "unknown capture " + id);
                    return;
                }
                res.set_content(std::string(c->payload.begin(), c->payload.end()), "image/png");
            });
        });

        server.Get("/dates", [this](const httplib::Request&, httplib::Response& res) {
            relay_call(res, [&] { send_json(res, 200, { { "dates", client.dates() } }); });
        });

        server.Get("/schedule", [this](const httplib::Request&, httplib::Response& res) {
            if (!config.schedule) {
                send_error(res, 404, "NOT_FOUND", "no schedule configured");
                return;
            }
            std::ifstream in(*config.schedule, std::ios::binary);
            if (!in) {
                send_error(res, 500, "STORAGE_ERROR", "cannot read the schedule document");
                return;
            }
            std::ostringstream s;
            s << in.rdbuf();
            res.set_content(s.str(), "application/json");
        });
    }

    template <typename Fn>
    void relay_call(httplib::Response& res, Fn&& fn)
    {
        try {
            fn();
        } catch (const RemoteError& e) {
            send_error(res, status_for(e), e.code(), e.what());
        } catch (const Error& e) {
            send_error(res, 502, "RELAY_UNAVAILABLE", e.what());
        }
    }

    void get_state(httplib::Response& res)
    {
        bool idle;
        {
            std::lock_guard lock(mutex);
            idle = !activeMission;
        }
        if (idle) {
            try {
                const PoseReport r = client.robot_state(std::chrono::milliseconds(1000));
                std::lock_guard lock(mutex);
                robotPose = r.pose;
                degraded = r.localization_degraded;
                poseTimestamp = r.timestamp;
            } catch (const Error&) {
            }
        }
        std::lock_guard lock(mutex);
        send_json(res, 200, view_locked());
    }

    void post_mission(const httplib::Request& req, httplib::Response& res)
    {
        std::vector<Drp> drps;
        std::optional<Pose2D> pose;
        MissionOptions options = config.mission;
        try {
            const auto body = nlohmann::json::parse(req.body);
            drps = parse_drps(body.at("drps").dump());
            if (const auto it = body.find("robot_pose"); it != body.end() && !it->is_null())
                pose = Pose2D(it->at("x").get<double>(), it->at("y").get<double>(), it->value("theta", 0.0));
            options.mission_id = body.value("mission_id", make_mission_id());
            options.created_at = body.value("created_at", utc_timestamp_now());
            if (!is_valid_timestamp(options.created_at))
                throw ParseError("created_at must be YYYY-MM-DDThh:mm:ssZ");
        } catch (const std::exception& e) {
            send_error(res, 400, "BAD_REQUEST", e.what());
            return;
        }

        std::lock_guard dispatchLock(dispatchMutex);
        {
            std::lock_guard lock(mutex);
            if (activeMission) {
                send_error(res, 409, "MISSION_ACTIVE", "mission " + *activeMission + " is still running");
                return;
            }
        }
        if (collector.joinable())
            collector.join();

        Mission mission;
        MissionClient::Active handle;
        try {
            mission = client.plan(grid, drps, pose, options);
            DispatchOptions dispatchOptions;
            dispatchOptions.timeout = config.mission_timeout;
            handle = client.dispatch(mission, dispatchOptions);
        } catch (const NoPathError& e) {
            send_json(res, 422, { { "code", "NO_PATH" }, { "message", e.what() }, { "subject", e.subject() } });
            return;
        } catch (const RemoteError& e) {
            send_error(res, status_for(e), e.code(), e.what());
            return;
        } catch (const MissionTimeout& e) {
            send_error(res, 504, "TIMEOUT", e.what());
            return;
        } catch (const Error& e) {
            send_error(res, 502, "RELAY_UNAVAILABLE", e.what());
            return;
        }

        {
            std::lock_guard lock(mutex);
            activeMission = mission.mission_id;
            active.reset();
            lastError = nullptr;
            publish_locked("mission", { { "mission_id", mission.mission_id }, { "drp_ids", mission.drp_ids() } });
        }
        const double estimated = handle.estimated_duration;
        collector = std::thread([this, handle = std::move(handle)]() mutable { collect(handle); });

        send_json(res, 202, { { "mission_id", mission.mission_id },
                              { "inspection_date", mission.inspection_date() },
                              { "drp_ids", mission.drp_ids() },
                              { "length", mission.length() },
                              { "estimated_duration", estimated } });
    }

    void collect(MissionClient::Active& handle)
    {
        DispatchOptions options;
        options.on_progress = [this](const ProgressUpdate& p) {
            std::lock_guard lock(mutex);
            active = p;
            robotPose = p.estimated_pose;
            degraded = p.localization_degraded;
            poseTimestamp = unix_now();
            publish_locked("progress", progress_to_json(p));
        };
        try {
            const MissionResult result = client.collect(handle, options);
            nlohmann::json items = nlohmann::json::array();
            for (const Capture& c : result.record.captures)
                items.push_back({ { "drp_id", c.drp_id },
                                  { "capture_id", c.capture_id },
                                  { "sequence", c.sequence },
                                  { "pose", pose_json(c.pose_at_capture) },
                                  { "image", fmt::format("/captures/{}/image", c.capture_id) } });
            std::lock_guard lock(mutex);
            lastResult = { { "mission_id", result.record.mission_id },
                           { "inspection_date", result.record.inspection_date },
                           { "total_time", result.total_time },
                           { "items", std::move(items) } };
            activeMission.reset();
            active.reset();
            publish_locked("result", lastResult);
        } catch (const std::exception& e) {
            std::string code = "ERROR";
            if (const auto* remote = dynamic_cast<const RemoteError*>(&e))
                code = remote->code();
            else if (dynamic_cast<const MissionTimeout*>(&e))
                code = "TIMEOUT";
            std::lock_guard lock(mutex);
            lastError = { { "mission_id", handle.mission.mission_id }, { "code", code }, { "message", e.what() } };
            activeMission.reset();
            active.reset();
            publish_locked("error", lastError);
        }
    }

    void get_events(httplib::Response& res)
    {
        std::uint64_t cursor;
        {
            std::lock_guard lock(mutex);
            cursor = nextSeq;
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, cursor, first = true](std::size_t, httplib::DataSink& sink) mutable {
            std::string out;
            {
                std::unique_lock lock(mutex);
                if (first) {
                    out += fmt::format("event: state\ndata: {}\n\n", view_locked().dump());
                    first = false;
                } else {
                    eventCv.wait_for(lock, config.event_period,
                                     [&] { return stopping || (!events.empty() && events.back().seq >= cursor); });
                    if (stopping) {
                        lock.unlock();
                        sink.done();
                        return false;
                    }
                    bool any = false;
                    for (const Event& e : events)
                        if (e.seq >= cursor) {
                            out += fmt::format("id: {}\nevent: {}\ndata: {}\n\n", e.seq, e.name, e.data);
                            cursor = e.seq + 1;
                            any = true;
                        }
                    if (!any)
                        out += activeMission ? fmt::format("event: state\ndata: {}\n\n", view_locked().dump())
                                             : std::string(": keepalive\n\n");
                }
            }
            return sink.is_writable() && sink.write(out.data(), out.size());
        });
    }
};

Gateway::Gateway(GatewayConfig config, BuildingModel model) :
    mImpl(std::make_unique<Impl>(std::move(config), std::move(model)))
{
}

Gateway::~Gateway() { stop(); }

void Gateway::start()
{
    Impl& d = *mImpl;
    d.relay.connect();
    d.relay.on_unsolicited([&d](const Received& r) {
        // Missions dispatched by other clients still move the robot
        if (r.envelope.type == MessageType::MissionProgress) {
            try {
                const ProgressUpdate p = progress_from_json(r.envelope.body);
                std::lock_guard lock(d.mutex);
                d.robotPose = p.estimated_pose;
                d.degraded = p.localization_degraded;
                d.poseTimestamp = unix_now();
            } catch (const Error&) {
            }
        }
    });
    d.routes();
    const int port = d.config.listen.port == 0 ? d.server.bind_to_any_port(d.config.listen.host)
                                               : (d.server.bind_to_port(d.config.listen.host, d.config.listen.port)
                                                      ? d.config.listen.port
                                                      : -1);
    if (port <= 0)
        throw ConnectionError(fmt::format("cannot bind {}:{}", d.config.listen.host, d.config.listen.port));
    d.boundPort = static_cast<std::uint16_t>(port);
    d.listenThread = std::thread([&d] { d.server.listen_after_bind(); });
    d.server.wait_until_ready();
}

void Gateway::stop()
{
    if (!mImpl)
        return;
    Impl& d = *mImpl;
    {
        std::lock_guard lock(d.mutex);
        d.stopping = true;
    }
    d.eventCv.notify_all();
    d.server.stop();
    if (d.listenThread.joinable())
        d.listenThread.join();
    d.relay.close();
    if (d.collector.joinable())
        d.collector.join();
}

void Gateway::wait()
{
    if (mImpl->listenThread.joinable())
        mImpl->listenThread.join();
}

std::uint16_t Gateway::port() const { return mImpl->boundPort; }

} // namespace sitewalk
