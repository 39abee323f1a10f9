#ifndef SITEWALK_WIRE_HPP
#define SITEWALK_WIRE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sitewalk/errors.hpp"

namespace sitewalk {

/* Connected or listening TCP socket; closes on destruction */
class Socket
{
public:
    Socket() = default;
    explicit Socket(int fd) : mFd(fd) { }
    ~Socket() { close(); }
    Socket(Socket&& other) noexcept : mFd(other.release()) { }
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return mFd; }
    bool valid() const { return mFd >= 0; }
    int release();

    /* Wakes any thread blocked in recv/accept on this socket */
    void shutdown();
    void close();

    /* Throws ConnectionError */
    void send_all(std::string_view data);
    /* false on orderly EOF before the first byte; throws ConnectionError on
     * EOF in the middle */
    bool recv_exact(char* out, std::size_t size);

private:
    int mFd = -1;
};

struct Endpoint
{
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

/* "host:port"; throws ParseError */
Endpoint parse_endpoint(std::string_view text);

Socket connect_tcp(const Endpoint& endpoint);

class Listener
{
public:
    /* Port 0 picks an ephemeral port */
    explicit Listener(const Endpoint& endpoint);

    std::uint16_t port() const { return mPort; }
    /* Invalid socket once the listener is closed */
    Socket accept();
    void close() { mSocket.shutdown(); }

private:
    Socket mSocket;
    std::uint16_t mPort = 0;
};

constexpr std::size_t kMaxFrameSize = 64u << 20;

/* 4-byte big-endian length prefix, then the payload */
void write_frame(Socket& socket, std::string_view payload);
/* nullopt on clean EOF between frames. Throws ProtocolError for an oversized
 * frame, ConnectionError for a truncated one */
std::optional<std::string> read_frame(Socket& socket, std::size_t maxSize = kMaxFrameSize);

enum class MessageType
{
    Hello,
    HelloAck,
    RobotStateRequest,
    RobotState,
    MissionDispatch,
    MissionAck,
    MissionProgress,
    CaptureBundle,
    QueryCaptures,
    CapturesResult,
    Error,
};

enum class Role
{
    Client,
    Middleware,
};

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);
std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

/* Types answering an earlier message; they must carry a correlation id */
bool is_reply(MessageType type);

struct Envelope
{
    MessageType type = MessageType::Error;
    std::string message_id;
    std::optional<std::string> correlation_id;
    Role sender_role = Role::Client;
    std::string project_id;
    nlohmann::json body = nlohmann::json::object();
};

std::string encode_envelope(const Envelope& envelope);
/* Throws ProtocolError */
Envelope decode_envelope(std::string_view frame);

/* Unique within the process and unlikely to collide across processes */
std::string make_message_id();

/* ERROR envelope body */
nlohmann::json error_body(std::string_view code, std::string_view message);

/* body[key] when it is a string, otherwise `fallback` */
std::string string_field(const nlohmann::json& body, const std::string& key, std::string_view fallback = "");

/* RemoteError carrying the code and message of an ERROR envelope */
RemoteError remote_error(const Envelope& error);

} // namespace sitewalk

#endif // SITEWALK_WIRE_HPP
