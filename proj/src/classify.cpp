#include "flowsentry/classify.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

namespace flowsentry {

namespace {

std::string ddos_group_id(IPv4Addr target, TimestampMs window_start) {
    return "ddos:" + to_string(target) + ":" + std::to_string(window_start);
}

std::optional<IPv4Addr> group_target(std::string_view group_id) {
    if (group_id.rfind("ddos:", 0) != 0) return std::nullopt;
    auto rest = group_id.substr(5);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    return parse_ipv4(rest.substr(0, colon));
}

}  // namespace

std::string_view to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::PortScan: return "PortScan";
        case AttackKind::DoS: return "DoS";
        case AttackKind::DDoS: return "DDoS";
    }
    return "?";
}

std::optional<AttackKind> parse_attack_kind(std::string_view text) {
    if (text == "PortScan") return AttackKind::PortScan;
    if (text == "DoS") return AttackKind::DoS;
    if (text == "DDoS") return AttackKind::DDoS;
    return std::nullopt;
}

std::vector<SuspectReport> classify_window(std::span<const SourceStats> stats,
                                           std::span<const FlowRecord> records,
                                           std::span<const Assigned> assigned,
                                           const Thresholds& thresholds) {
    // Per-source destination histogram and single-flow packet peak.
    struct PerSource {
        std::unordered_map<std::uint32_t, std::uint64_t> dst_count;
        std::uint64_t max_flow_packets = 0;
    };
    std::unordered_map<std::uint32_t, PerSource> per_source;
    per_source.reserve(stats.size());
    for (const auto& a : assigned) {
        const auto& r = records[a.record_index];
        auto& src = per_source[r.key.src_addr.value];
        src.dst_count[r.key.dst_addr.value] += 1;
        src.max_flow_packets = std::max(src.max_flow_packets, r.packets);
    }

    std::vector<SuspectReport> scans;
    struct Candidate {
        const SourceStats* stats;
        IPv4Addr top_target;
    };
    std::vector<Candidate> dos_candidates;

    for (const auto& s : stats) {
        bool is_scan = false;
        bool is_dos = false;
        if (s.flow_count >= thresholds.high_flow_count) {
            const double tiny_share = static_cast<double>(s.tiny_flow_count) /
                                      static_cast<double>(s.flow_count);
            if (tiny_share >= thresholds.tiny_fraction)
                is_scan = true;  // step 1a
            else
                is_dos = true;  // step 1b
        }
        const auto src_info = per_source.find(s.src_addr.value);
        const std::uint64_t max_packets =
            src_info == per_source.end() ? 0 : src_info->second.max_flow_packets;
        if (s.max_flow_duration > thresholds.long_flow_duration ||
            max_packets >= thresholds.long_flow_packets)
            is_dos = true;  // step 2

        if (is_scan) {
            SuspectReport report;
            report.src_addr = s.src_addr;
            report.kind = AttackKind::PortScan;
            report.window_start = s.window_start;
            report.evidence = s;
            scans.push_back(std::move(report));
        } else if (is_dos) {
            // Most-targeted destination; ties break toward the lowest address.
            IPv4Addr top{0};
            std::uint64_t top_count = 0;
            if (src_info != per_source.end()) {
                for (const auto& [dst, count] : src_info->second.dst_count) {
                    if (count > top_count || (count == top_count && dst < top.value)) {
                        top = IPv4Addr{dst};
                        top_count = count;
                    }
                }
            }
            dos_candidates.push_back(Candidate{&s, top});
        }
    }

    // Promotion: group candidates by their most-targeted destination.
    std::map<std::uint32_t, std::vector<const Candidate*>> groups;
    for (const auto& c : dos_candidates) groups[c.top_target.value].push_back(&c);

    std::vector<SuspectReport> reports = std::move(scans);
    for (const auto& [target, members] : groups) {
        const bool ddos = members.size() >= thresholds.ddos_min_sources;
        for (const auto* c : members) {
            SuspectReport report;
            report.src_addr = c->stats->src_addr;
            report.kind = ddos ? AttackKind::DDoS : AttackKind::DoS;
            report.window_start = c->stats->window_start;
            report.evidence = *c->stats;
            if (ddos) report.group_id = ddos_group_id(IPv4Addr{target}, c->stats->window_start);
            reports.push_back(std::move(report));
        }
    }

    std::sort(reports.begin(), reports.end(), [](const SuspectReport& a, const SuspectReport& b) {
        return a.src_addr < b.src_addr;
    });
    return reports;
}

std::vector<SuspectReport> merge_reports(std::vector<SuspectReport> history,
                                         std::span<const SuspectReport> fresh,
                                         DurationMs dedupe_window) {
    for (const auto& incoming : fresh) {
        bool suppressed = false;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (incoming.window_start - it->window_start >= dedupe_window) break;
            if (it->src_addr == incoming.src_addr && it->kind == incoming.kind) {
                suppressed = true;
                break;
            }
        }
        if (suppressed) continue;

        SuspectReport report = incoming;
        if (report.kind == AttackKind::DDoS) {
            // Union with an existing group for the same target.
            const auto target = group_target(report.group_id);
            for (const auto& prior : history) {
                if (prior.kind != AttackKind::DDoS) continue;
                if (incoming.window_start - prior.window_start >= dedupe_window) continue;
                if (target && group_target(prior.group_id) == target) {
                    report.group_id = prior.group_id;
                    break;
                }
            }
        }
        history.push_back(std::move(report));
    }
    return history;
}

std::string report_line(const SuspectReport& report) {
    nlohmann::ordered_json j;
    j["time"] = format_timestamp(report.window_start);
    j["src_addr"] = to_string(report.src_addr);
    j["kind"] = to_string(report.kind);
    if (!report.group_id.empty()) j["group_id"] = report.group_id;
    j["flow_count"] = report.evidence.flow_count;
    j["tiny_flow_count"] = report.evidence.tiny_flow_count;
    j["max_flow_duration_ms"] = report.evidence.max_flow_duration;
    j["total_bytes"] = report.evidence.total_bytes;
    j["distinct_dst_addrs"] = report.evidence.distinct_dst_addrs;
    j["distinct_dst_ports"] = report.evidence.distinct_dst_ports;
    return j.dump();
}

void write_reports(std::ostream& out, std::span<const SuspectReport> reports) {
    for (const auto& r : reports) out << report_line(r) << '\n';
}

}  // namespace flowsentry
