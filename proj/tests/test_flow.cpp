#include <doctest.h>

#include <random>
#include <unordered_set>

#include "flowsentry/flow.hpp"

using namespace flowsentry;

namespace {

FlowRecord tcp_record() {
    FlowRecord r;
    r.key.src_addr = *parse_ipv4("10.0.0.1");
    r.key.dst_addr = *parse_ipv4("10.0.0.2");
    r.key.src_port = 80;
    r.key.dst_port = 443;
    r.key.protocol = kProtoTcp;
    r.start_time = 1000;
    r.duration = 250;
    r.packets = 3;
    r.bytes = 180;
    return r;
}

}  // namespace

TEST_CASE("end_time adds duration to start") {
    FlowRecord r = tcp_record();
    r.start_time = 1000;
    r.duration = 0;
    CHECK(end_time(r) == 1000);
    r.duration = 250;
    CHECK(end_time(r) == 1250);
    r.start_time = 2'999'999;
    r.duration = 1;
    CHECK(end_time(r) == 3'000'000);
}

TEST_CASE("validate accepts a well-formed TCP record unchanged") {
    const FlowRecord r = tcp_record();
    CHECK(validate(r) == r);
    CHECK(!validation_error(r));
}

TEST_CASE("validate rejects ports on a portless protocol") {
    FlowRecord r = tcp_record();
    r.key.protocol = 47;  // GRE
    r.key.src_port = 5;
    r.key.dst_port = 0;
    CHECK_THROWS_WITH_AS(validate(r), "port on portless protocol", InvalidRecord);
}

TEST_CASE("validate rejects impossible counters") {
    FlowRecord r = tcp_record();
    r.packets = 2;
    r.bytes = 1;
    CHECK_THROWS_WITH_AS(validate(r), "bytes < packets", InvalidRecord);
    r.packets = 0;
    r.bytes = 0;
    CHECK_THROWS_AS(validate(r), InvalidRecord);
}

TEST_CASE("ICMP carries type/code in dst_port but no src_port") {
    FlowRecord r = tcp_record();
    r.key.protocol = kProtoIcmp;
    r.key.src_port = 0;
    r.key.dst_port = 8 * 256;  // echo request
    CHECK(!validation_error(r));
    r.key.src_port = 1;
    CHECK(validation_error(r));
}

TEST_CASE("validate is idempotent on accepted records") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        FlowRecord r = tcp_record();
        r.key.src_addr = IPv4Addr{static_cast<std::uint32_t>(rng())};
        r.key.src_port = static_cast<std::uint16_t>(rng());
        r.key.dst_port = static_cast<std::uint16_t>(rng());
        r.packets = 1 + rng() % 1000;
        r.bytes = r.packets + rng() % 100000;
        r.duration = static_cast<DurationMs>(rng() % 100000);
        const FlowRecord once = validate(r);
        CHECK(validate(once) == once);
    }
}

TEST_CASE("FlowKey equality is field-wise and hashing is consistent") {
    const FlowKey a = tcp_record().key;
    FlowKey b = a;
    CHECK(a == b);
    CHECK(std::hash<FlowKey>{}(a) == std::hash<FlowKey>{}(b));

    b.tos = 12;  // any field difference breaks equality
    CHECK(a != b);
    b = a;
    b.ingress_ifindex = 3;
    CHECK(a != b);

    // Equal keys collapse in a hash set, distinct ones do not.
    std::unordered_set<FlowKey> keys;
    keys.insert(a);
    keys.insert(b);
    FlowKey c = a;
    keys.insert(c);
    CHECK(keys.size() == 2);
}
