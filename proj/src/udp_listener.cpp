#include "flowsentry/udp_listener.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "flowsentry/netflow_v5.hpp"

namespace flowsentry {

UdpListener::UdpListener(const std::string& bind_addr, std::uint16_t port,
                         BoundedQueue<FlowRecord>& out)
    : out_(out) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw BindFailure(std::string("socket: ") + std::strerror(errno));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw BindFailure("bad bind address: " + bind_addr);
    }
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw BindFailure("bind " + bind_addr + ":" + std::to_string(port) + ": " +
                          std::strerror(err));
    }

    // Short receive timeout so stop() is honored promptly.
    timeval tv{0, 100'000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

UdpListener::~UdpListener() {
    stop();
    if (fd_ >= 0) ::close(fd_);
}

void UdpListener::start() {
    if (thread_.joinable()) return;
    stopping_.store(false);
    thread_ = std::thread([this] { run(); });
}

void UdpListener::stop() {
    stopping_.store(true);
    if (thread_.joinable()) thread_.join();
}

void UdpListener::run() {
    std::uint8_t buf[65536];
    while (!stopping_.load()) {
        ssize_t n = ::recvfrom(fd_, buf, sizeof(buf), 0, nullptr, nullptr);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
            break;  // socket gone
        }
        stats_.datagrams.fetch_add(1, std::memory_order_relaxed);
        handle_datagram(buf, static_cast<std::size_t>(n));
    }
}

void UdpListener::handle_datagram(const std::uint8_t* data, std::size_t len) {
    NetflowV5Datagram datagram;
    try {
        datagram = decode_netflow_v5({data, len});
    } catch (const CodecError&) {
        stats_.decode_errors.fetch_add(1, std::memory_order_relaxed);
        return;
    }

    const auto& h = datagram.header;
    if (have_sequence_) {
        auto gap = static_cast<std::int32_t>(h.flow_sequence - expected_sequence_);
        if (gap != 0) stats_.last_sequence_gap.store(gap, std::memory_order_relaxed);
    }
    have_sequence_ = true;
    expected_sequence_ = h.flow_sequence + h.count;

    for (const auto& raw : datagram.records) {
        FlowRecord record = to_flow_record(h, raw);
        if (validation_error(record)) {
            stats_.records_rejected.fetch_add(1, std::memory_order_relaxed);
            continue;
        }
        if (!out_.push(std::move(record))) return;  // queue closed, shutting down
        stats_.records_ok.fetch_add(1, std::memory_order_relaxed);
    }
}

}  // namespace flowsentry
