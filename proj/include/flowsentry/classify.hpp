#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowsentry/aggregate.hpp"

namespace flowsentry {

struct Thresholds {
    std::uint64_t tiny_flow_bytes = 50;       // "very short" flow ceiling
    std::uint64_t high_flow_count = 1000;     // flows/source/window to count as "many"
    DurationMs long_flow_duration = 300'000;  // step-2 "very long stream" floor
    std::uint32_t ddos_min_sources = 3;       // DoS group size that becomes DDoS
    double tiny_fraction = 0.9;               // share of tiny flows that reads as scanning
    std::uint64_t long_flow_packets = 10'000;  // single-flow packet count that reads as a flood
};

enum class AttackKind { PortScan, DoS, DDoS };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view text);

struct SuspectReport {
    IPv4Addr src_addr;
    AttackKind kind = AttackKind::PortScan;
    TimestampMs window_start = 0;
    SourceStats evidence;
    std::string group_id;  // non-empty iff kind == DDoS
};

// Per-window attack classification:
//   1. sources with many flows: mostly tiny -> PortScan, otherwise DoS candidate
//   2. sources with a very long flow (or a very high single-flow packet
//      count) -> DoS candidate
// DoS candidates sharing a most-targeted destination are promoted to one
// DDoS group when the group reaches ddos_min_sources; a PortScan source is
// never double-reported as DoS in the same window. Output is sorted by
// source address and deterministic under permutation of the inputs.
std::vector<SuspectReport> classify_window(std::span<const SourceStats> stats,
                                           std::span<const FlowRecord> records,
                                           std::span<const Assigned> assigned,
                                           const Thresholds& thresholds);

// Appends fresh reports to the time-ordered history, suppressing a
// (src_addr, kind) pair already reported within dedupe_window and unioning
// DDoS groups for the same target under the earliest group_id.
std::vector<SuspectReport> merge_reports(std::vector<SuspectReport> history,
                                         std::span<const SuspectReport> fresh,
                                         DurationMs dedupe_window);

// One JSON object per line: the exported "list of suspicious IP addresses".
std::string report_line(const SuspectReport& report);
void write_reports(std::ostream& out, std::span<const SuspectReport> reports);

}  // namespace flowsentry
