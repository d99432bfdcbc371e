#include <doctest.h>

#include <random>

#include "flowsentry/netflow_v5.hpp"

using namespace flowsentry;

namespace {

// Structurally valid datagram with otherwise random bytes.
std::vector<std::uint8_t> random_datagram(std::mt19937_64& rng, std::uint16_t count) {
    std::vector<std::uint8_t> bytes(kV5HeaderSize + kV5RecordSize * count);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    bytes[0] = 0;
    bytes[1] = 5;  // version
    bytes[2] = static_cast<std::uint8_t>(count >> 8);
    bytes[3] = static_cast<std::uint8_t>(count);
    return bytes;
}

NetflowV5Header header_at(TimestampMs export_ms, std::uint32_t sys_uptime) {
    NetflowV5Header h;
    h.sys_uptime_ms = sys_uptime;
    h.unix_secs = static_cast<std::uint32_t>(export_ms / 1000);
    h.unix_nsecs = static_cast<std::uint32_t>((export_ms % 1000) * 1'000'000);
    return h;
}

FlowRecord sample_record() {
    FlowRecord r;
    r.key.src_addr = *parse_ipv4("192.0.2.1");
    r.key.dst_addr = *parse_ipv4("10.32.0.9");
    r.key.src_port = 51000;
    r.key.dst_port = 80;
    r.key.protocol = kProtoTcp;
    r.key.ingress_ifindex = 2;
    r.key.tos = 0;
    r.start_time = 1'304'250'000'000;
    r.duration = 20'000;
    r.packets = 15;
    r.bytes = 9000;
    return r;
}

}  // namespace

TEST_CASE("decode rejects count zero") {
    std::mt19937_64 rng(1);
    auto bytes = random_datagram(rng, 1);
    bytes.resize(kV5HeaderSize);
    bytes[2] = 0;
    bytes[3] = 0;
    CHECK_THROWS_AS(decode_netflow_v5(bytes), CodecError);
    try {
        decode_netflow_v5(bytes);
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::BadCount);
    }
}

TEST_CASE("decode rejects impossible datagram lengths") {
    std::mt19937_64 rng(2);
    auto bytes = random_datagram(rng, 1);
    bytes.resize(71);  // 71 != 24 + 48k
    try {
        decode_netflow_v5(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::TruncatedDatagram);
    }

    std::vector<std::uint8_t> tiny(10, 0);
    CHECK_THROWS_AS(decode_netflow_v5(tiny), CodecError);
}

TEST_CASE("decode rejects foreign versions") {
    std::mt19937_64 rng(3);
    auto bytes = random_datagram(rng, 1);
    bytes[1] = 9;
    try {
        decode_netflow_v5(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::BadVersion);
    }
}

TEST_CASE("encode is the byte-exact inverse of decode") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto count = static_cast<std::uint16_t>(1 + rng() % kV5MaxRecords);
        const auto bytes = random_datagram(rng, count);
        const auto datagram = decode_netflow_v5(bytes);
        CHECK(datagram.header.count == count);
        CHECK(datagram.records.size() == count);
        CHECK(encode_netflow_v5(datagram) == bytes);
    }
}

TEST_CASE("record count limits on encode") {
    NetflowV5Datagram d;
    d.header.count = 0;
    try {
        encode_netflow_v5(d);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::BadCount);
    }

    std::vector<FlowRecord> many(31, sample_record());
    const auto h = header_at(sample_record().start_time, 500'000);
    try {
        encode_netflow_v5(h, many);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::TooManyRecords);
    }

    std::vector<FlowRecord> one(1, sample_record());
    CHECK(encode_netflow_v5(h, one).size() == 72);  // 24 + 48
}

TEST_CASE("flow records survive the wire round trip field-for-field") {
    std::mt19937_64 rng(5);
    const TimestampMs export_ms = 1'304'250'600'123;
    const auto meta = header_at(export_ms, 86'400'000);

    std::vector<FlowRecord> records;
    for (int i = 0; i < 30; ++i) {
        FlowRecord r = sample_record();
        r.key.src_addr = IPv4Addr{static_cast<std::uint32_t>(rng())};
        r.key.dst_addr = IPv4Addr{static_cast<std::uint32_t>(rng())};
        r.key.src_port = static_cast<std::uint16_t>(rng());
        r.key.dst_port = static_cast<std::uint16_t>(rng());
        r.key.ingress_ifindex = static_cast<std::uint16_t>(rng());
        r.key.tos = static_cast<std::uint8_t>(rng());
        r.start_time = export_ms - static_cast<TimestampMs>(rng() % 3'600'000);
        r.duration = static_cast<DurationMs>(rng() % 1'800'000);
        r.packets = 1 + rng() % 100000;
        r.bytes = r.packets + rng() % 10'000'000;
        records.push_back(r);
    }

    const auto bytes = encode_netflow_v5(meta, records);
    const auto decoded = decode_netflow_v5(bytes);
    REQUIRE(decoded.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(to_flow_record(decoded.header, decoded.records[i]) == records[i]);
}

TEST_CASE("sysuptime wraparound resolves to the nearest interpretation") {
    // first_switched sits 6 s behind sys_uptime across a 32-bit wrap.
    const TimestampMs export_ms = 1'304'250'000'000;
    auto h = header_at(export_ms, 1000);
    NetflowV5Record raw{};
    raw.first_switched_ms = 0xFFFFEC78;  // sys_uptime - 6000, wrapped
    raw.last_switched_ms = raw.first_switched_ms + 2000;
    raw.packets = 1;
    raw.octets = 100;
    const auto record = to_flow_record(h, raw);
    CHECK(record.start_time == export_ms - 6000);
    CHECK(record.duration == 2000);

    // And the encoder produces exactly that wrapped representation.
    const auto encoded = make_v5_record(h, record);
    CHECK(encoded.first_switched_ms == raw.first_switched_ms);
    CHECK(encoded.last_switched_ms == raw.last_switched_ms);
}

TEST_CASE("counters that do not fit 32 bits are refused") {
    const auto h = header_at(1'304'250'000'000, 0);
    FlowRecord r = sample_record();
    r.bytes = 0x1'0000'0000ull;
    try {
        make_v5_record(h, r);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::Overflow);
    }

    r = sample_record();
    r.start_time = h.unix_secs * TimestampMs{1000} - (TimestampMs{1} << 31) - 1;
    try {
        make_v5_record(h, r);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::Overflow);
    }
}
