#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace tribo::gw {

/// Owning TCP socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.release()) {}
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept;
    void close() noexcept;
    /// Unblocks readers and writers on other threads without releasing the descriptor.
    void shutdown() noexcept;

    /// Writes everything or throws IoError.
    void send_all(std::span<const std::uint8_t> bytes);
    void send_all(std::string_view text);
    /// Waits up to `timeout` for data. Returns bytes read, 0 on orderly close,
    /// nullopt on timeout. Throws IoError on failure.
    std::optional<std::size_t> recv_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
};

struct Listener {
    Socket socket;
    std::uint16_t port = 0;  // actual bound port
};

/// Binds and listens; port 0 picks an ephemeral port.
Listener listen_tcp(const std::string& host, std::uint16_t port, int backlog = 64);
/// Accepts one connection or returns an invalid socket after `timeout`.
Socket accept_for(const Socket& listener, std::chrono::milliseconds timeout);
/// Throws IoError when the connection is refused or the host is bad.
Socket connect_tcp(const std::string& host, std::uint16_t port);

}  // namespace tribo::gw
