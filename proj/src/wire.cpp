#include "sitewalk/wire.hpp"

#include <array>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <random>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include "sitewalk/errors.hpp"

namespace sitewalk {

Socket& Socket::operator=(Socket&& other) noexcept
{
    if (this != &other) {
        close();
        mFd = other.release();
    }
    return *this;
}

int Socket::release()
{
    const int fd = mFd;
    mFd = -1;
    return fd;
}

void Socket::shutdown()
{
    if (mFd >= 0)
        ::shutdown(mFd, SHUT_RDWR);
}

void Socket::close()
{
    if (mFd >= 0) {
        ::close(mFd);
        mFd = -1;
    }
}

void Socket::send_all(std::string_view data)
{
    while (!data.empty()) {
        const ssize_t n = ::send(mFd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw ConnectionError(fmt::format("send: {}", std::strerror(errno)));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

bool Socket::recv_exact(char* out, std::size_t size)
{
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(mFd, out + got, size - got, 0);
        if (n == 0) {
            if (got == 0)
                return false;
            throw ConnectionError("peer closed mid-frame");
        }
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw ConnectionError(fmt::format("recv: {}", std::strerror(errno)));
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

Endpoint parse_endpoint(std::string_view text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon + 1 == text.size())
        throw ParseError(fmt::format("endpoint '{}' is not host:port", text));
    unsigned port = 0;
    const auto digits = text.substr(colon + 1);
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || end != digits.data() + digits.size() || port > 65535)
        throw ParseError(fmt::format("endpoint '{}' has a bad port", text));
    Endpoint e;
    e.host = std::string(text.substr(0, colon));
    if (e.host.empty())
        e.host = "127.0.0.1";
    e.port = static_cast<std::uint16_t>(port);
    return e;
}

namespace {

addrinfo* resolve(const Endpoint& endpoint, bool passive)
{
    addrinfo hints {};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive)
        hints.ai_flags = AI_PASSIVE;
    addrinfo* result = nullptr;
    const std::string port = std::to_string(endpoint.port);
    if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result); rc != 0)
        throw ConnectionError(fmt::format("resolve {}: {}", endpoint.host, gai_strerror(rc)));
    return result;
}

} // namespace

Socket connect_tcp(const Endpoint& endpoint)
{
    addrinfo* info = resolve(endpoint, false);
    std::string lastError = "no address";
    for (addrinfo* a = info; a; a = a->ai_next) {
        Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
        if (!s.valid())
            continue;
        if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) == 0) {
            const int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            ::freeaddrinfo(info);
            return s;
        }
        lastError = std::strerror(errno);
    }
    ::freeaddrinfo(info);
    throw ConnectionError(fmt::format("connect {}:{}: {}", endpoint.host, endpoint.port, lastError));
}

Listener::Listener(const Endpoint& endpoint)
{
    addrinfo* info = resolve(endpoint, true);
    mSocket = Socket(::socket(info->ai_family, info->ai_socktype | SOCK_CLOEXEC, info->ai_protocol));
    if (!mSocket.valid()) {
        ::freeaddrinfo(info);
        throw ConnectionError(fmt::format("socket: {}", std::strerror(errno)));
    }
    const int one = 1;
    ::setsockopt(mSocket.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(mSocket.fd(), info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc != 0 || ::listen(mSocket.fd(), 64) != 0)
        throw ConnectionError(fmt::format("listen {}:{}: {}", endpoint.host, endpoint.port, std::strerror(errno)));

    sockaddr_in bound {};
    socklen_t len = sizeof bound;
    ::getsockname(mSocket.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    mPort = ntohs(bound.sin_port);
}

Socket Listener::accept()
{
    for (;;) {
        const int fd = ::accept4(mSocket.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return Socket(fd);
        }
        if (errno == EINTR || errno == ECONNABORTED)
            continue;
        return Socket();
    }
}

void write_frame(Socket& socket, std::string_view payload)
{
    if (payload.size() > kMaxFrameSize)
        throw ProtocolError("frame too large");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string frame;
    frame.reserve(4 + payload.size());
    frame.push_back(static_cast<char>(n >> 24));
    frame.push_back(static_cast<char>(n >> 16));
    frame.push_back(static_cast<char>(n >> 8));
    frame.push_back(static_cast<char>(n));
    frame.append(payload);
    socket.send_all(frame);
}

std::optional<std::string> read_frame(Socket& socket, std::size_t maxSize)
{
    std::array<unsigned char, 4> head {};
    if (!socket.recv_exact(reinterpret_cast<char*>(head.data()), head.size()))
        return std::nullopt;
    const std::size_t n = (std::size_t { head[0] } << 24) | (std::size_t { head[1] } << 16) |
                          (std::size_t { head[2] } << 8) | std::size_t { head[3] };
    if (n > maxSize)
        throw ProtocolError(fmt::format("frame of {} bytes exceeds the {} byte limit", n, maxSize));
    std::string payload(n, '\0');
    if (n > 0 && !socket.recv_exact(payload.data(), n))
        throw ConnectionError("peer closed mid-frame");
    return payload;
}

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 11> kTypeNames { {
    { MessageType::Hello, "HELLO" },
    { MessageType::HelloAck, "HELLO_ACK" },
    { MessageType::RobotStateRequest, "ROBOT_STATE_REQUEST" },
    { MessageType::RobotState, "ROBOT_STATE" },
    { MessageType::MissionDispatch, "MISSION_DISPATCH" },
    { MessageType::MissionAck, "MISSION_ACK" },
    { MessageType::MissionProgress, "MISSION_PROGRESS" },
    { MessageType::CaptureBundle, "CAPTURE_BUNDLE" },
    { MessageType::QueryCaptures, "QUERY_CAPTURES" },
    { MessageType::CapturesResult, "CAPTURES_RESULT" },
    { MessageType::Error, "ERROR" },
} };

} // namespace

std::string_view to_string(MessageType type)
{
    for (const auto& [t, name] : kTypeNames)
        if (t == type)
            return name;
    return "ERROR";
}

std::optional<MessageType> parse_message_type(std::string_view text)
{
    for (const auto& [t, name] : kTypeNames)
        if (name == text)
            return t;
    return std::nullopt;
}

std::string_view to_string(Role role) { return role == Role::Client ? "client" : "middleware"; }

std::optional<Role> parse_role(std::string_view text)
{
    if (text == "client")
        return Role::Client;
    if (text == "middleware")
        return Role::Middleware;
    return std::nullopt;
}

bool is_reply(MessageType type)
{
    switch (type) {
    case MessageType::HelloAck:
    case MessageType::RobotState:
    case MessageType::MissionAck:
    case MessageType::MissionProgress:
    case MessageType::CaptureBundle:
    case MessageType::CapturesResult:
    case MessageType::Error:
        return true;
    default:
        return false;
    }
}

std::string encode_envelope(const Envelope& e)
{
    nlohmann::ordered_json j;
    j["type"] = to_string(e.type);
    j["message_id"] = e.message_id;
    j["correlation_id"] = e.correlation_id ? nlohmann::ordered_json(*e.correlation_id) : nlohmann::ordered_json();
    j["sender_role"] = to_string(e.sender_role);
    j["project_id"] = e.project_id;
    j["body"] = e.body;
    return j.dump();
}

Envelope decode_envelope(std::string_view frame)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(frame);
    } catch (const nlohmann::json::exception& ex) {
        throw ProtocolError(std::string("envelope is not JSON: ") + ex.what());
    }
    if (!j.is_object())
        throw ProtocolError("envelope is not an object");

    auto text = [&](const char* key) -> std::string {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_string())
            throw ProtocolError(fmt::format("envelope field '{}' missing or not a string", key));
        return it->get<std::string>();
    };

    Envelope e;
    const auto type = parse_message_type(text("type"));
    if (!type)
        throw ProtocolError("unknown message type");
    e.type = *type;
    e.message_id = text("message_id");
    if (e.message_id.empty())
        throw ProtocolError("empty message_id");
    const auto role = parse_role(text("sender_role"));
    if (!role)
        throw ProtocolError("unknown sender_role");
    e.sender_role = *role;
    e.project_id = text("project_id");

    if (const auto it = j.find("correlation_id"); it != j.end() && !it->is_null()) {
        if (!it->is_string())
            throw ProtocolError("correlation_id must be a string");
        e.correlation_id = it->get<std::string>();
    }
    if (const auto it = j.find("body"); it != j.end()) {
        if (!it->is_object())
            throw ProtocolError("body must be an object");
        e.body = std::move(*it);
    }
    return e;
}

std::string make_message_id()
{
    static const std::uint64_t prefix = std::random_device {}() ^ (std::uint64_t { std::random_device {}() } << 32);
    static std::atomic<std::uint64_t> counter { 0 };
    return fmt::format("{:016x}-{}", prefix, ++counter);
}

nlohmann::json error_body(std::string_view code, std::string_view message)
{
    return { { "code", std::string(code) }, { "message", std::string(message) } };
}

std::string string_field(const nlohmann::json& body, const std::string& key, std::string_view fallback)
{
    if (body.is_object())
        if (const auto it = body.find(key); it != body.end() && it->is_string())
            return it->get<std::string>();
    return std::string(fallback);
}

RemoteError remote_error(const Envelope& error)
{
    return RemoteError(string_field(error.body, "code", "ERROR"), string_field(error.body, "message"));
}

} // namespace sitewalk
