#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowsentry/flow.hpp"

namespace flowsentry {

// NetFlow v5 wire format: 24-byte header followed by count 48-byte records,
// all integers big-endian.

struct NetflowV5Header {
    std::uint16_t version = 5;
    std::uint16_t count = 0;
    std::uint32_t sys_uptime_ms = 0;
    std::uint32_t unix_secs = 0;
    std::uint32_t unix_nsecs = 0;
    std::uint32_t flow_sequence = 0;
    std::uint8_t engine_type = 0;
    std::uint8_t engine_id = 0;
    std::uint16_t sampling_interval = 0;  // parsed, never applied

    auto operator<=>(const NetflowV5Header&) const = default;
};

// One export record with every field preserved so that decode/encode round
// trips are byte-exact; nexthop/AS/mask fields never reach FlowRecord.
struct NetflowV5Record {
    std::uint32_t srcaddr = 0;
    std::uint32_t dstaddr = 0;
    std::uint32_t nexthop = 0;
    std::uint16_t input = 0;
    std::uint16_t output = 0;
    std::uint32_t packets = 0;
    std::uint32_t octets = 0;
    std::uint32_t first_switched_ms = 0;  // sysuptime clock
    std::uint32_t last_switched_ms = 0;
    std::uint16_t srcport = 0;
    std::uint16_t dstport = 0;
    std::uint8_t pad1 = 0;
    std::uint8_t tcp_flags = 0;
    std::uint8_t protocol = 0;
    std::uint8_t tos = 0;
    std::uint16_t src_as = 0;
    std::uint16_t dst_as = 0;
    std::uint8_t src_mask = 0;
    std::uint8_t dst_mask = 0;
    std::uint16_t pad2 = 0;

    auto operator<=>(const NetflowV5Record&) const = default;
};

struct NetflowV5Datagram {
    NetflowV5Header header;
    std::vector<NetflowV5Record> records;
};

inline constexpr std::size_t kV5HeaderSize = 24;
inline constexpr std::size_t kV5RecordSize = 48;
inline constexpr std::uint16_t kV5MaxRecords = 30;

class CodecError : public std::runtime_error {
  public:
    enum class Kind { BadVersion, BadCount, TruncatedDatagram, TooManyRecords, Overflow };

    CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

// Throws CodecError on malformed input. header.count always matches
// records.size() on success.
NetflowV5Datagram decode_netflow_v5(std::span<const std::uint8_t> datagram);

// Byte-exact inverse of decode_netflow_v5. Throws CodecError when the record
// count is 0 or exceeds 30 or does not match header.count.
std::vector<std::uint8_t> encode_netflow_v5(const NetflowV5Datagram& datagram);

// Millisecond export timestamp of the datagram (unix_secs/unix_nsecs).
TimestampMs export_time_ms(const NetflowV5Header& header);

// Reconstructs absolute flow times from the sysuptime-relative record clock.
// A first/last value more than half a wrap (~24.8 days) away from sys_uptime
// is resolved toward the nearest interpretation.
FlowRecord to_flow_record(const NetflowV5Header& header, const NetflowV5Record& record);

// Inverse mapping for export/simulation. Throws CodecError{Overflow} when a
// counter exceeds its 32-bit field or the start time is unrepresentable
// relative to the header clock.
NetflowV5Record make_v5_record(const NetflowV5Header& header, const FlowRecord& record);

// Packs FlowRecords into one datagram using the header fields of meta
// (count is taken from records.size()).
std::vector<std::uint8_t> encode_netflow_v5(const NetflowV5Header& meta,
                                            std::span<const FlowRecord> records);

}  // namespace flowsentry
