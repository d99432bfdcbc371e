#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>

#include "flowsentry/flow.hpp"
#include "flowsentry/queue.hpp"

namespace flowsentry {

struct IngestStats {
    std::atomic<std::uint64_t> datagrams{0};
    std::atomic<std::uint64_t> records_ok{0};
    std::atomic<std::uint64_t> records_rejected{0};
    std::atomic<std::uint64_t> decode_errors{0};
    std::atomic<std::int64_t> last_sequence_gap{0};
};

class BindFailure : public std::runtime_error {
  public:
    explicit BindFailure(const std::string& what) : std::runtime_error(what) {}
};

// NetFlow v5 collector socket. One receiver thread decodes datagrams,
// validates records and pushes them onto the shared queue. Malformed input
// is counted, never fatal; sequence gaps are recorded from flow_sequence.
class UdpListener {
  public:
    // Binds immediately (throws BindFailure); call start() to begin receiving.
    UdpListener(const std::string& bind_addr, std::uint16_t port, BoundedQueue<FlowRecord>& out);
    ~UdpListener();

    UdpListener(const UdpListener&) = delete;
    UdpListener& operator=(const UdpListener&) = delete;

    void start();
    void stop();

    // Actual bound port (useful when constructed with port 0).
    std::uint16_t port() const { return port_; }
    const IngestStats& stats() const { return stats_; }

  private:
    void run();
    void handle_datagram(const std::uint8_t* data, std::size_t len);

    int fd_ = -1;
    std::uint16_t port_ = 0;
    BoundedQueue<FlowRecord>& out_;
    IngestStats stats_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    bool have_sequence_ = false;
    std::uint32_t expected_sequence_ = 0;
};

}  // namespace flowsentry
