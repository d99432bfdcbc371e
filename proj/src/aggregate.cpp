#include "flowsentry/aggregate.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace flowsentry {

namespace {

double byte_fraction_in(const FlowRecord& r, TimestampMs w, DurationMs window_len) {
    if (r.duration == 0) return window_start_for(r.start_time, window_len) == w ? 1.0 : 0.0;
    const TimestampMs lo = std::max(r.start_time, w);
    const TimestampMs hi = std::min(end_time(r), w + window_len);
    if (hi <= lo) return 0.0;
    return std::clamp(static_cast<double>(hi - lo) / static_cast<double>(r.duration), 0.0, 1.0);
}

}  // namespace

WindowAssignments assign_to_windows(std::span<const FlowRecord> records, DurationMs window_len,
                                    DurationMs grace) {
    WindowAssignments out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        // Activity interval [start, active_end); always non-empty.
        const TimestampMs active_end = std::max(end_time(r) + grace, r.start_time + 1);
        const TimestampMs first_window = window_start_for(r.start_time, window_len);
        const TimestampMs last_window = window_start_for(active_end - 1, window_len);
        for (TimestampMs w = first_window; w <= last_window; w += window_len)
            out[w].push_back(Assigned{i, byte_fraction_in(r, w, window_len)});
    }
    return out;
}

std::vector<Assigned> window_slice(std::span<const FlowRecord> records,
                                   TimestampMs window_start, DurationMs window_len,
                                   DurationMs grace) {
    std::vector<Assigned> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const TimestampMs active_end = std::max(end_time(r) + grace, r.start_time + 1);
        if (r.start_time >= window_start + window_len || active_end <= window_start) continue;
        out.push_back(Assigned{i, byte_fraction_in(r, window_start, window_len)});
    }
    return out;
}

IntervalSample sample_interval(TimestampMs window_start, DurationMs window_len,
                               std::span<const FlowRecord> records,
                               std::span<const Assigned> assigned, FlowCountMode mode) {
    IntervalSample sample;
    sample.window_start = window_start;
    sample.window_len = window_len;
    double bits = 0.0;
    std::uint64_t count = 0;
    for (const auto& a : assigned) {
        const auto& r = records[a.record_index];
        bits += static_cast<double>(r.bytes) * 8.0 * a.byte_fraction;
        if (mode == FlowCountMode::ActiveInWindow) {
            ++count;
        } else {
            const TimestampMs end = end_time(r);
            if (end >= window_start && end < window_start + window_len) ++count;
        }
    }
    sample.active_flows = count;
    sample.load_bps = bits / (static_cast<double>(window_len) / 1000.0);
    return sample;
}

std::vector<SourceStats> source_stats(TimestampMs window_start,
                                      std::span<const FlowRecord> records,
                                      std::span<const Assigned> assigned,
                                      std::uint64_t tiny_flow_bytes) {
    struct Acc {
        SourceStats stats;
        std::unordered_set<std::uint32_t> dst_addrs;
        std::unordered_set<std::uint16_t> dst_ports;
    };
    std::unordered_map<std::uint32_t, Acc> by_src;
    by_src.reserve(assigned.size() / 4 + 1);
    for (const auto& a : assigned) {
        const auto& r = records[a.record_index];
        auto& acc = by_src[r.key.src_addr.value];
        acc.stats.src_addr = r.key.src_addr;
        acc.stats.window_start = window_start;
        acc.stats.flow_count += 1;
        if (r.bytes <= tiny_flow_bytes) acc.stats.tiny_flow_count += 1;
        acc.stats.max_flow_duration = std::max(acc.stats.max_flow_duration, r.duration);
        acc.stats.total_bytes += r.bytes;
        acc.dst_addrs.insert(r.key.dst_addr.value);
        acc.dst_ports.insert(r.key.dst_port);
    }
    std::vector<SourceStats> out;
    out.reserve(by_src.size());
    for (auto& [addr, acc] : by_src) {
        acc.stats.distinct_dst_addrs = acc.dst_addrs.size();
        acc.stats.distinct_dst_ports = acc.dst_ports.size();
        out.push_back(acc.stats);
    }
    std::sort(out.begin(), out.end(),
              [](const SourceStats& a, const SourceStats& b) { return a.src_addr < b.src_addr; });
    return out;
}

}  // namespace flowsentry
