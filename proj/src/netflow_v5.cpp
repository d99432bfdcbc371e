#include "flowsentry/netflow_v5.hpp"

#include <limits>

namespace flowsentry {

namespace {

struct ByteReader {
    const std::uint8_t* p;

    std::uint8_t u8() { return *p++; }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                          (std::uint32_t{p[2]} << 8) | p[3];
        p += 4;
        return v;
    }
};

struct ByteWriter {
    std::vector<std::uint8_t>& out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    }
};

NetflowV5Record read_record(ByteReader& r) {
    NetflowV5Record rec;
    rec.srcaddr = r.u32();
    rec.dstaddr = r.u32();
    rec.nexthop = r.u32();
    rec.input = r.u16();
    rec.output = r.u16();
    rec.packets = r.u32();
    rec.octets = r.u32();
    rec.first_switched_ms = r.u32();
    rec.last_switched_ms = r.u32();
    rec.srcport = r.u16();
    rec.dstport = r.u16();
    rec.pad1 = r.u8();
    rec.tcp_flags = r.u8();
    rec.protocol = r.u8();
    rec.tos = r.u8();
    rec.src_as = r.u16();
    rec.dst_as = r.u16();
    rec.src_mask = r.u8();
    rec.dst_mask = r.u8();
    rec.pad2 = r.u16();
    return rec;
}

void write_record(ByteWriter& w, const NetflowV5Record& rec) {
    w.u32(rec.srcaddr);
    w.u32(rec.dstaddr);
    w.u32(rec.nexthop);
    w.u16(rec.input);
    w.u16(rec.output);
    w.u32(rec.packets);
    w.u32(rec.octets);
    w.u32(rec.first_switched_ms);
    w.u32(rec.last_switched_ms);
    w.u16(rec.srcport);
    w.u16(rec.dstport);
    w.u8(rec.pad1);
    w.u8(rec.tcp_flags);
    w.u8(rec.protocol);
    w.u8(rec.tos);
    w.u16(rec.src_as);
    w.u16(rec.dst_as);
    w.u8(rec.src_mask);
    w.u8(rec.dst_mask);
    w.u16(rec.pad2);
}

// Signed distance from sys_uptime to t on the wrapping 32-bit ms clock,
// resolved to the nearest interpretation.
std::int64_t uptime_delta(std::uint32_t t, std::uint32_t sys_uptime) {
    std::int64_t d = std::int64_t{t} - std::int64_t{sys_uptime};
    constexpr std::int64_t kWrap = std::int64_t{1} << 32;
    if (d >= kWrap / 2) d -= kWrap;
    if (d < -kWrap / 2) d += kWrap;
    return d;
}

}  // namespace

NetflowV5Datagram decode_netflow_v5(std::span<const std::uint8_t> datagram) {
    if (datagram.size() < kV5HeaderSize)
        throw CodecError(CodecError::Kind::TruncatedDatagram,
                         "datagram shorter than v5 header (" +
                             std::to_string(datagram.size()) + " bytes)");
    ByteReader r{datagram.data()};
    NetflowV5Header h;
    h.version = r.u16();
    if (h.version != 5)
        throw CodecError(CodecError::Kind::BadVersion,
                         "unsupported NetFlow version " + std::to_string(h.version));
    h.count = r.u16();
    if (h.count < 1 || h.count > kV5MaxRecords)
        throw CodecError(CodecError::Kind::BadCount,
                         "record count " + std::to_string(h.count) + " outside 1..30");
    h.sys_uptime_ms = r.u32();
    h.unix_secs = r.u32();
    h.unix_nsecs = r.u32();
    h.flow_sequence = r.u32();
    h.engine_type = r.u8();
    h.engine_id = r.u8();
    h.sampling_interval = r.u16();

    const std::size_t expected = kV5HeaderSize + kV5RecordSize * h.count;
    if (datagram.size() != expected)
        throw CodecError(CodecError::Kind::TruncatedDatagram,
                         "datagram length " + std::to_string(datagram.size()) +
                             ", expected " + std::to_string(expected));

    NetflowV5Datagram out;
    out.header = h;
    out.records.reserve(h.count);
    for (std::uint16_t i = 0; i < h.count; ++i) out.records.push_back(read_record(r));
    return out;
}

std::vector<std::uint8_t> encode_netflow_v5(const NetflowV5Datagram& datagram) {
    const auto n = datagram.records.size();
    if (n == 0)
        throw CodecError(CodecError::Kind::BadCount, "v5 datagram requires at least 1 record");
    if (n > kV5MaxRecords)
        throw CodecError(CodecError::Kind::TooManyRecords,
                         std::to_string(n) + " records exceed the v5 ceiling of 30");
    if (datagram.header.count != n)
        throw CodecError(CodecError::Kind::BadCount, "header count does not match record count");

    std::vector<std::uint8_t> bytes;
    bytes.reserve(kV5HeaderSize + kV5RecordSize * n);
    ByteWriter w{bytes};
    const auto& h = datagram.header;
    w.u16(h.version);
    w.u16(h.count);
    w.u32(h.sys_uptime_ms);
    w.u32(h.unix_secs);
    w.u32(h.unix_nsecs);
    w.u32(h.flow_sequence);
    w.u8(h.engine_type);
    w.u8(h.engine_id);
    w.u16(h.sampling_interval);
    for (const auto& rec : datagram.records) write_record(w, rec);
    return bytes;
}

TimestampMs export_time_ms(const NetflowV5Header& header) {
    return TimestampMs{header.unix_secs} * 1000 + header.unix_nsecs / 1'000'000;
}

FlowRecord to_flow_record(const NetflowV5Header& header, const NetflowV5Record& record) {
    const TimestampMs export_ms = export_time_ms(header);
    FlowRecord out;
    out.key.src_addr = IPv4Addr{record.srcaddr};
    out.key.dst_addr = IPv4Addr{record.dstaddr};
    out.key.src_port = record.srcport;
    out.key.dst_port = record.dstport;
    out.key.protocol = record.protocol;
    out.key.ingress_ifindex = record.input;
    out.key.tos = record.tos;
    out.start_time = export_ms + uptime_delta(record.first_switched_ms, header.sys_uptime_ms);
    // last >= first on the wrapping clock; plain u32 subtraction handles a wrap.
    out.duration = DurationMs{record.last_switched_ms - record.first_switched_ms};
    out.packets = record.packets;
    out.bytes = record.octets;
    return out;
}

NetflowV5Record make_v5_record(const NetflowV5Header& header, const FlowRecord& record) {
    constexpr std::uint64_t kU32Max = std::numeric_limits<std::uint32_t>::max();
    if (record.packets > kU32Max || record.bytes > kU32Max)
        throw CodecError(CodecError::Kind::Overflow, "packet/byte counter exceeds 32 bits");
    if (record.duration < 0 || static_cast<std::uint64_t>(record.duration) > kU32Max)
        throw CodecError(CodecError::Kind::Overflow, "duration exceeds the 32-bit ms clock");

    const TimestampMs export_ms = export_time_ms(header);
    const std::int64_t rel = record.start_time - export_ms;
    constexpr std::int64_t kHalfWrap = std::int64_t{1} << 31;
    if (rel >= kHalfWrap || rel < -kHalfWrap)
        throw CodecError(CodecError::Kind::Overflow,
                         "start time too far from the export time for the v5 clock");

    NetflowV5Record rec;
    rec.srcaddr = record.key.src_addr.value;
    rec.dstaddr = record.key.dst_addr.value;
    rec.input = record.key.ingress_ifindex;
    rec.packets = static_cast<std::uint32_t>(record.packets);
    rec.octets = static_cast<std::uint32_t>(record.bytes);
    rec.first_switched_ms =
        static_cast<std::uint32_t>(std::uint64_t{header.sys_uptime_ms} + std::uint64_t(rel));
    rec.last_switched_ms =
        static_cast<std::uint32_t>(rec.first_switched_ms + std::uint64_t(record.duration));
    rec.srcport = record.key.src_port;
    rec.dstport = record.key.dst_port;
    rec.protocol = record.key.protocol;
    rec.tos = record.key.tos;
    return rec;
}

std::vector<std::uint8_t> encode_netflow_v5(const NetflowV5Header& meta,
                                            std::span<const FlowRecord> records) {
    NetflowV5Datagram d;
    d.header = meta;
    if (records.size() > kV5MaxRecords)
        throw CodecError(CodecError::Kind::TooManyRecords,
                         std::to_string(records.size()) + " records exceed the v5 ceiling of 30");
    d.header.count = static_cast<std::uint16_t>(records.size());
    d.records.reserve(records.size());
    for (const auto& r : records) d.records.push_back(make_v5_record(d.header, r));
    return encode_netflow_v5(d);
}

}  // namespace flowsentry
