#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "flowsentry/flow.hpp"

namespace flowsentry {

// One time window's network state: the model's N and B(t).
struct IntervalSample {
    TimestampMs window_start = 0;
    DurationMs window_len = 0;
    std::uint64_t active_flows = 0;  // N
    double load_bps = 0.0;           // B, bits per second

    auto operator<=>(const IntervalSample&) const = default;
};

// Per-source evidence for one window, inspected by the classifier.
struct SourceStats {
    IPv4Addr src_addr;
    TimestampMs window_start = 0;
    std::uint64_t flow_count = 0;
    std::uint64_t tiny_flow_count = 0;  // flows with bytes <= tiny_flow_bytes
    DurationMs max_flow_duration = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t distinct_dst_addrs = 0;
    std::uint64_t distinct_dst_ports = 0;
};

// A record's membership in one window. byte_fraction is the share of the
// record's bytes attributed to the window; 0 for grace-only membership.
struct Assigned {
    std::size_t record_index = 0;
    double byte_fraction = 0.0;
};

using WindowAssignments = std::map<TimestampMs, std::vector<Assigned>>;

// Assigns each record to every epoch-aligned window its activity interval
// [start, end + grace) intersects. Byte fractions are proportional to the
// temporal overlap of [start, end] so that fractions over all windows sum
// to 1; the grace extension adds activity but never bytes. A zero-duration
// flow belongs wholly to the window containing its start.
WindowAssignments assign_to_windows(std::span<const FlowRecord> records, DurationMs window_len,
                                    DurationMs grace);

// Membership of records in the single window starting at window_start; same
// rules as assign_to_windows. Lets a live loop close one window at a time.
std::vector<Assigned> window_slice(std::span<const FlowRecord> records,
                                   TimestampMs window_start, DurationMs window_len,
                                   DurationMs grace);

// How N is counted. The experiment write-ups are read here as flows active
// in the window (grace included); counting only flows that completed inside
// it is the alternative reading of the completed-flow axis.
enum class FlowCountMode { ActiveInWindow, CompletedInWindow };

IntervalSample sample_interval(TimestampMs window_start, DurationMs window_len,
                               std::span<const FlowRecord> records,
                               std::span<const Assigned> assigned,
                               FlowCountMode mode = FlowCountMode::ActiveInWindow);

// One SourceStats per distinct source address, sorted by address.
std::vector<SourceStats> source_stats(TimestampMs window_start,
                                      std::span<const FlowRecord> records,
                                      std::span<const Assigned> assigned,
                                      std::uint64_t tiny_flow_bytes);

}  // namespace flowsentry
