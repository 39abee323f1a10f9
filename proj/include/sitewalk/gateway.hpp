#ifndef SITEWALK_GATEWAY_HPP
#define SITEWALK_GATEWAY_HPP

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sitewalk/building_model.hpp"
#include "sitewalk/planner.hpp"
#include "sitewalk/wire.hpp"

namespace sitewalk {

struct GatewayConfig
{
    /* Port 0 picks an ephemeral port */
    Endpoint listen { "127.0.0.1", 8080 };
    /* Bearer token HTTP callers must present */
    std::string token;

    Endpoint relay;
    std::string relay_token;
    std::string project_id;

    /* Served verbatim at GET /schedule when set */
    std::optional<std::filesystem::path> schedule;
    MissionOptions mission;
    double robot_radius = kDefaultRobotRadius;
    /* Overrides the mission deadline announced by the middleware */
    std::optional<std::chrono::milliseconds> mission_timeout;
    /* Heartbeat period of GET /events while a mission is active */
    std::chrono::milliseconds event_period { 200 };
};

/*
 * Local HTTP front for one client relay session:
 *
 *   GET  /model                     building model document
 *   GET  /state                     session view
 *   POST /missions                  {"drps":[{"id","x","y"}], "robot_pose"?, "mission_id"?, "created_at"?}
 *   GET  /events                    server-sent events: state, progress, result, error
 *   GET  /captures?date=YYYY-MM-DD  records of that day
 *   GET  /captures/{id}/image       PNG payload
 *   GET  /dates                     days having records
 *   GET  /schedule                  optional static document
 *
 * Every request needs "Authorization: Bearer <token>" or "?token=<token>".
 */
class Gateway
{
public:
    Gateway(GatewayConfig config, BuildingModel model);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /* Connects to the relay and starts serving; throws ConnectionError / RemoteError */
    void start();
    void stop();
    std::uint16_t port() const;

    /* Blocks until stop() */
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> mImpl;
};

} // namespace sitewalk

#endif // SITEWALK_GATEWAY_HPP
