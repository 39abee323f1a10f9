#ifndef SITEWALK_TESTS_NET_HARNESS_HPP
#define SITEWALK_TESTS_NET_HARNESS_HPP

#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "sitewalk/errors.hpp"
#include "sitewalk/middleware.hpp"
#include "sitewalk/mission_client.hpp"
#include "sitewalk/relay_server.hpp"
#include "sitewalk/wire.hpp"

namespace harness {

using namespace sitewalk;

/* Fresh directory under the system temp dir, removed on destruction */
struct TempDir
{
    std::filesystem::path path;

    TempDir()
    {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("sitewalk-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline RelayConfig relay_config(const std::filesystem::path& storage, std::size_t outboundLimit = 256)
{
    RelayConfig c;
    c.listen = { "127.0.0.1", 0 };
    c.storage = storage;
    c.outbound_limit = outboundLimit;
    c.tokens = { { "client-a", Role::Client, "alpha" },
                 { "mw-a", Role::Middleware, "alpha" },
                 { "client-a2", Role::Client, "alpha" },
                 { "client-b", Role::Client, "beta" },
                 { "mw-b", Role::Middleware, "beta" } };
    return c;
}

/* A hand-driven protocol peer speaking raw frames */
struct RawPeer
{
    Socket socket;
    Role role;
    std::string project;

    RawPeer(const Endpoint& relay, Role r, std::string p) : socket(connect_tcp(relay)), role(r), project(std::move(p)) { }

    Envelope envelope(MessageType type, nlohmann::json body = nlohmann::json::object(),
                      std::optional<std::string> correlation = std::nullopt) const
    {
        Envelope e;
        e.type = type;
        e.message_id = make_message_id();
        e.correlation_id = std::move(correlation);
        e.sender_role = role;
        e.project_id = project;
        e.body = std::move(body);
        return e;
    }

    std::string send(const Envelope& e)
    {
        const std::string frame = encode_envelope(e);
        write_frame(socket, frame);
        return frame;
    }

    void send_raw(const std::string& frame) { write_frame(socket, frame); }

    std::optional<std::string> read_raw() { return read_frame(socket); }

    Envelope read()
    {
        auto f = read_frame(socket);
        if (!f)
            throw ConnectionError("peer closed");
        return decode_envelope(*f);
    }

    /* HELLO round trip; returns the reply */
    Envelope hello(const std::string& token)
    {
        send(envelope(MessageType::Hello, { { "token", token } }));
        return read();
    }

    /* True when the relay hung up (EOF or reset) */
    bool closed_by_peer()
    {
        try {
            return !read_frame(socket).has_value();
        } catch (const ConnectionError&) {
            return true;
        }
    }
};

inline Capture fake_capture(const std::string& mission, std::size_t seq, const std::string& drp)
{
    Capture c;
    c.mission_id = mission;
    c.sequence = seq;
    c.drp_id = drp;
    c.capture_id = make_capture_id(mission, seq, drp);
    c.pose_at_capture = Pose2D(1.0 + static_cast<double>(seq), 2.0, 0.5);
    c.timestamp = 10.0 * static_cast<double>(seq);
    c.payload = { static_cast<std::uint8_t>(seq), 0x89, 'P', 'N', 'G', 0, 255 };
    return c;
}

inline nlohmann::json fake_bundle(const std::string& mission, const std::string& date, std::size_t count)
{
    CaptureBundle b;
    b.mission_id = mission;
    b.inspection_date = date;
    for (std::size_t i = 0; i < count; ++i)
        b.captures.push_back(fake_capture(mission, i, "d" + std::to_string(i)));
    return bundle_to_json(b);
}

template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = std::chrono::milliseconds(3000))
{
    const auto end = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < end) {
        if (pred())
            return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return pred();
}

} // namespace harness

#endif // SITEWALK_TESTS_NET_HARNESS_HPP
