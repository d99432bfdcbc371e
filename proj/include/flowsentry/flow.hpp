#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "flowsentry/ipv4.hpp"
#include "flowsentry/timeutil.hpp"

namespace flowsentry {

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

// The 7-tuple identifying a unidirectional flow. Ports are zero for
// protocols that have none; for ICMP the destination port slot packs
// type*256 + code, the dominant collector convention.
struct FlowKey {
    IPv4Addr src_addr;
    IPv4Addr dst_addr;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t protocol = 0;
    std::uint16_t ingress_ifindex = 0;
    std::uint8_t tos = 0;

    auto operator<=>(const FlowKey&) const = default;
};

// One exported flow record: key, timing and volume counters.
struct FlowRecord {
    FlowKey key;
    TimestampMs start_time = 0;
    DurationMs duration = 0;  // >= 0
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;

    auto operator<=>(const FlowRecord&) const = default;
};

constexpr TimestampMs end_time(const FlowRecord& r) { return r.start_time + r.duration; }

class InvalidRecord : public std::runtime_error {
  public:
    explicit InvalidRecord(const std::string& reason) : std::runtime_error(reason) {}
};

// nullopt when the record satisfies every invariant, else the reason.
std::optional<std::string> validation_error(const FlowRecord& r);

// Returns the record unchanged or throws InvalidRecord.
const FlowRecord& validate(const FlowRecord& r);

}  // namespace flowsentry

template <>
struct std::hash<flowsentry::FlowKey> {
    std::size_t operator()(const flowsentry::FlowKey& k) const noexcept {
        std::uint64_t h = k.src_addr.value;
        h = h * 0x9e3779b97f4a7c15ull + k.dst_addr.value;
        h = h * 0x9e3779b97f4a7c15ull +
            ((std::uint64_t{k.src_port} << 48) | (std::uint64_t{k.dst_port} << 32) |
             (std::uint64_t{k.protocol} << 24) | (std::uint64_t{k.ingress_ifindex} << 8) |
             k.tos);
        return std::hash<std::uint64_t>{}(h);
    }
};
