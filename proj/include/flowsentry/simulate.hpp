#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flowsentry/flow.hpp"

namespace flowsentry {

// Synthetic flow generator for the baseline plus three attack signatures:
// a port scan (thousands of tiny flows), a LOIC-style DDoS (many short
// mid-size flows from several sources to one target) and a ping flood (one
// very long high-packet ICMP flow per source).
//
// Generation is fully deterministic under (spec, seed). Every scenario part
// draws from its own substream: substream_seed(seed, stream_tag, index)
// chains splitmix64 over the three inputs, and each baseline window uses
// index = window number, so windows can be generated independently and in
// parallel without changing the output. Cross-language fixtures should be
// recorded through the flow-CSV writer rather than by reimplementing the
// generator bit-for-bit.

class InvalidSpec : public std::runtime_error {
  public:
    explicit InvalidSpec(const std::string& what) : std::runtime_error(what) {}
};

struct BaselineSpec {
    std::uint32_t flows_per_window_min = 50'000;
    std::uint32_t flows_per_window_max = 60'000;
    double per_flow_rate_mean_bps = 2000.0;
    double per_flow_rate_sd_bps = 600.0;
    DurationMs window = 300'000;
    std::uint32_t source_pool = 2048;  // distinct campus-side sources
    std::uint32_t dst_pool = 512;
};

struct PortScanParams {
    IPv4Addr scanner;
    IPv4Prefix target_subnet;
    std::uint32_t flows_per_five_min = 15'000;
    DurationMs duration = 300'000;
};

struct LoicDdosParams {
    std::vector<IPv4Addr> sources;
    IPv4Addr target;
    std::uint32_t flows_per_min_per_source = 2'000;
    DurationMs duration = 600'000;
    std::uint32_t bytes_min = 200;
    std::uint32_t bytes_max = 5'000;
};

struct PingFloodParams {
    std::vector<IPv4Addr> sources;
    IPv4Addr target;
    DurationMs flow_duration = 1'800'000;
    std::uint64_t packets = 20'000;
};

using AttackParams = std::variant<PortScanParams, LoicDdosParams, PingFloodParams>;

struct AttackSpec {
    DurationMs start_offset = 0;
    AttackParams params;
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    TimestampMs start_time = 1'304'208'000'000;  // 2011-05-01 00:00:00 UTC
    DurationMs duration = 7'200'000;
    BaselineSpec baseline;
    std::vector<AttackSpec> attacks;
};

// Throws InvalidSpec listing the first violated constraint.
void validate_scenario(const ScenarioSpec& spec);

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t index);

std::uint64_t baseline_window_count(const ScenarioSpec& spec);

// One baseline window's flows; every flow lies inside the window.
std::vector<FlowRecord> gen_baseline_window(const ScenarioSpec& spec, std::uint64_t window_index);

std::vector<FlowRecord> gen_baseline(const ScenarioSpec& spec);

std::vector<FlowRecord> gen_portscan(const PortScanParams& params, TimestampMs start,
                                     std::uint64_t seed);
std::vector<FlowRecord> gen_loic_ddos(const LoicDdosParams& params, TimestampMs start,
                                      std::uint64_t seed);
std::vector<FlowRecord> gen_pingflood(const PingFloodParams& params, TimestampMs start,
                                      std::uint64_t seed);

// Baseline plus attacks, merged and sorted by start time.
std::vector<FlowRecord> gen_scenario(const ScenarioSpec& spec);

// JSON scenario files used by the CLI; see the README for the schema.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

}  // namespace flowsentry
