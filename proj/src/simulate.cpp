#include "flowsentry/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace flowsentry {

namespace {

constexpr std::uint64_t kStreamBaseline = 1;
constexpr std::uint64_t kStreamPortScan = 2;
constexpr std::uint64_t kStreamLoic = 3;
constexpr std::uint64_t kStreamPingFlood = 4;

constexpr std::uint32_t kBaselineSrcBase = 0x0A100000;  // 10.16.0.0
constexpr std::uint32_t kBaselineDstBase = 0x0A200000;  // 10.32.0.0

constexpr std::uint16_t kServicePorts[8] = {80, 443, 53, 25, 22, 110, 143, 8080};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Average per-flow rate over a window -> integral byte counter.
std::uint64_t bytes_for_rate(double rate_bps, DurationMs window) {
    double bytes = rate_bps * (static_cast<double>(window) / 1000.0) / 8.0;
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(bytes)));
}

void check(bool ok, const char* what) {
    if (!ok) throw InvalidSpec(what);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream_tag) ^ index);
}

void validate_scenario(const ScenarioSpec& spec) {
    const auto& b = spec.baseline;
    check(b.window > 0, "baseline.window must be positive");
    check(b.flows_per_window_min >= 1, "baseline.flows_per_window range must be positive");
    check(b.flows_per_window_max >= b.flows_per_window_min,
          "baseline.flows_per_window range is inverted");
    check(b.per_flow_rate_mean_bps > 0.0, "baseline.per_flow_rate_mean_bps must be positive");
    check(b.per_flow_rate_sd_bps >= 0.0, "baseline.per_flow_rate_sd_bps must be nonnegative");
    check(b.source_pool >= 1 && b.dst_pool >= 1, "baseline address pools must be nonempty");
    check(spec.duration >= b.window, "duration must cover at least one baseline window");

    for (const auto& attack : spec.attacks) {
        check(attack.start_offset >= 0, "attack start_offset must be nonnegative");
        if (const auto* scan = std::get_if<PortScanParams>(&attack.params)) {
            check(scan->flows_per_five_min >= 1, "portscan flows_per_five_min must be positive");
            check(scan->duration > 0, "portscan duration must be positive");
            check(attack.start_offset + scan->duration <= spec.duration,
                  "portscan extends past the scenario");
        } else if (const auto* loic = std::get_if<LoicDdosParams>(&attack.params)) {
            check(!loic->sources.empty(), "loic-ddos needs at least one source");
            check(loic->flows_per_min_per_source >= 1,
                  "loic-ddos flows_per_min_per_source must be positive");
            check(loic->duration > 0, "loic-ddos duration must be positive");
            check(loic->bytes_min >= 1 && loic->bytes_max >= loic->bytes_min,
                  "loic-ddos byte range is invalid");
            check(attack.start_offset + loic->duration <= spec.duration,
                  "loic-ddos extends past the scenario");
        } else if (const auto* ping = std::get_if<PingFloodParams>(&attack.params)) {
            check(!ping->sources.empty(), "pingflood needs at least one source");
            check(ping->flow_duration > 0, "pingflood flow_duration must be positive");
            check(ping->packets >= 1, "pingflood packets must be positive");
            check(attack.start_offset + ping->flow_duration <= spec.duration,
                  "pingflood extends past the scenario");
        }
    }
}

std::uint64_t baseline_window_count(const ScenarioSpec& spec) {
    return static_cast<std::uint64_t>(spec.duration / spec.baseline.window);
}

std::vector<FlowRecord> gen_baseline_window(const ScenarioSpec& spec,
                                            std::uint64_t window_index) {
    const auto& b = spec.baseline;
    std::mt19937_64 rng(substream_seed(spec.seed, kStreamBaseline, window_index));
    std::normal_distribution<double> rate_dist(b.per_flow_rate_mean_bps,
                                               b.per_flow_rate_sd_bps > 0.0
                                                   ? b.per_flow_rate_sd_bps
                                                   : 1.0);

    const std::uint32_t span = b.flows_per_window_max - b.flows_per_window_min + 1;
    const std::uint64_t count = b.flows_per_window_min + rng() % span;
    const TimestampMs window_start = spec.start_time + static_cast<TimestampMs>(window_index) *
                                                           b.window;
    const DurationMs min_dur = std::min<DurationMs>(1000, b.window);
    const DurationMs max_dur = std::min<DurationMs>(180'000, b.window);

    std::vector<FlowRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t bits = rng();
        FlowRecord r;
        r.key.src_addr = IPv4Addr{kBaselineSrcBase + static_cast<std::uint32_t>(
                                                         (bits & 0xffff) % b.source_pool)};
        r.key.dst_addr = IPv4Addr{kBaselineDstBase + static_cast<std::uint32_t>(
                                                         ((bits >> 16) & 0xffff) % b.dst_pool)};
        r.key.src_port = static_cast<std::uint16_t>(1024 + ((bits >> 32) & 0xffff) % 60000);
        r.key.dst_port = kServicePorts[(bits >> 48) & 0x7];
        r.key.protocol = ((bits >> 51) & 0xf) == 0 ? kProtoUdp : kProtoTcp;

        double rate = b.per_flow_rate_mean_bps;
        if (b.per_flow_rate_sd_bps > 0.0) {
            do {
                rate = rate_dist(rng);
            } while (rate <= 0.0);
        }
        r.bytes = bytes_for_rate(rate, b.window);
        r.packets = std::max<std::uint64_t>(1, r.bytes / 600);

        const std::uint64_t timing = rng();
        r.duration = min_dur + static_cast<DurationMs>((timing & 0xffffffff) %
                                                       static_cast<std::uint64_t>(
                                                           max_dur - min_dur + 1));
        r.start_time = window_start + static_cast<TimestampMs>(
                                          (timing >> 32) % static_cast<std::uint64_t>(
                                                               b.window - r.duration + 1));
        records.push_back(r);
    }
    return records;
}

std::vector<FlowRecord> gen_baseline(const ScenarioSpec& spec) {
    validate_scenario(spec);
    std::vector<FlowRecord> all;
    const std::uint64_t windows = baseline_window_count(spec);
    for (std::uint64_t w = 0; w < windows; ++w) {
        auto batch = gen_baseline_window(spec, w);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    return all;
}

std::vector<FlowRecord> gen_portscan(const PortScanParams& params, TimestampMs start,
                                     std::uint64_t seed) {
    check(params.flows_per_five_min >= 1, "portscan flows_per_five_min must be positive");
    check(params.duration > 0, "portscan duration must be positive");
    std::mt19937_64 rng(substream_seed(seed, kStreamPortScan, 0));

    const std::uint64_t total = std::max<std::uint64_t>(
        1, params.flows_per_five_min * static_cast<std::uint64_t>(params.duration) / 300'000);
    const std::uint64_t hosts = params.target_subnet.length >= 32
                                    ? 1
                                    : (std::uint64_t{1} << (32 - params.target_subnet.length));

    std::vector<FlowRecord> records;
    records.reserve(total);
    for (std::uint64_t i = 0; i < total; ++i) {
        const std::uint64_t bits = rng();
        FlowRecord r;
        r.key.src_addr = params.scanner;
        r.key.dst_addr = IPv4Addr{static_cast<std::uint32_t>(params.target_subnet.base.value +
                                                             i % hosts)};
        r.key.src_port = static_cast<std::uint16_t>(49152 + (bits & 0x3fff));
        r.key.dst_port = static_cast<std::uint16_t>(1 + i % 65535);  // port sweep
        r.key.protocol = kProtoTcp;
        r.start_time = start + static_cast<TimestampMs>(i * static_cast<std::uint64_t>(
                                                                params.duration) /
                                                        total);
        r.duration = static_cast<DurationMs>((bits >> 16) % 1000);  // under a second
        r.packets = 1;
        r.bytes = 28 + (bits >> 32) % 23;  // 28..50, connection setup only
        records.push_back(r);
    }
    return records;
}

std::vector<FlowRecord> gen_loic_ddos(const LoicDdosParams& params, TimestampMs start,
                                      std::uint64_t seed) {
    check(!params.sources.empty(), "loic-ddos needs at least one source");
    check(params.flows_per_min_per_source >= 1,
          "loic-ddos flows_per_min_per_source must be positive");
    check(params.duration > 0, "loic-ddos duration must be positive");
    check(params.bytes_min >= 1 && params.bytes_max >= params.bytes_min,
          "loic-ddos byte range is invalid");

    const std::uint64_t per_source = std::max<std::uint64_t>(
        1, params.flows_per_min_per_source * static_cast<std::uint64_t>(params.duration) /
               60'000);
    const DurationMs max_dur = std::min<DurationMs>(60'000, params.duration);

    std::vector<FlowRecord> records;
    records.reserve(per_source * params.sources.size());
    for (std::size_t s = 0; s < params.sources.size(); ++s) {
        std::mt19937_64 rng(substream_seed(seed, kStreamLoic, s));
        for (std::uint64_t j = 0; j < per_source; ++j) {
            const std::uint64_t bits = rng();
            FlowRecord r;
            r.key.src_addr = params.sources[s];
            r.key.dst_addr = params.target;
            r.key.src_port = static_cast<std::uint16_t>(49152 + (bits & 0x3fff));
            // HTTP-heavy port mix with a spread of high ports.
            switch ((bits >> 14) & 0x3) {
                case 0: r.key.dst_port = 80; break;
                case 1: r.key.dst_port = 443; break;
                case 2: r.key.dst_port = 8080; break;
                default:
                    r.key.dst_port = static_cast<std::uint16_t>(1024 + ((bits >> 16) & 0xffff) %
                                                                           64512);
            }
            r.key.protocol = ((bits >> 33) & 0x3) == 0 ? kProtoUdp : kProtoTcp;
            r.duration = 1000 + static_cast<DurationMs>((bits >> 35) %
                                                        static_cast<std::uint64_t>(max_dur -
                                                                                   999));
            const std::uint64_t start_span =
                static_cast<std::uint64_t>(params.duration - r.duration) + 1;
            r.start_time = start + static_cast<TimestampMs>(rng() % start_span);
            r.bytes = params.bytes_min + (bits >> 48) % (params.bytes_max - params.bytes_min + 1);
            r.packets = std::max<std::uint64_t>(1, r.bytes / 500);
            records.push_back(r);
        }
    }
    return records;
}

std::vector<FlowRecord> gen_pingflood(const PingFloodParams& params, TimestampMs start,
                                      std::uint64_t seed) {
    check(!params.sources.empty(), "pingflood needs at least one source");
    check(params.flow_duration > 0, "pingflood flow_duration must be positive");
    check(params.packets >= 1, "pingflood packets must be positive");

    std::vector<FlowRecord> records;
    records.reserve(params.sources.size());
    for (std::size_t s = 0; s < params.sources.size(); ++s) {
        std::mt19937_64 rng(substream_seed(seed, kStreamPingFlood, s));
        FlowRecord r;
        r.key.src_addr = params.sources[s];
        r.key.dst_addr = params.target;
        r.key.protocol = kProtoIcmp;
        r.key.src_port = 0;
        r.key.dst_port = 8 * 256;  // echo request, type 8 code 0
        // Small start jitter; the record itself only appears in the export
        // once the flow completes.
        r.start_time = start + static_cast<TimestampMs>(rng() % 1000);
        r.duration = params.flow_duration;
        r.packets = params.packets;
        r.bytes = params.packets * 64;  // 64-byte echo payloads
        records.push_back(r);
    }
    return records;
}

std::vector<FlowRecord> gen_scenario(const ScenarioSpec& spec) {
    validate_scenario(spec);
    std::vector<FlowRecord> all = gen_baseline(spec);
    for (std::size_t i = 0; i < spec.attacks.size(); ++i) {
        const auto& attack = spec.attacks[i];
        const TimestampMs start = spec.start_time + attack.start_offset;
        // Attack index salts the seed so repeated attacks differ.
        const std::uint64_t attack_seed = substream_seed(spec.seed, 100 + i, 0);
        std::vector<FlowRecord> batch;
        if (const auto* scan = std::get_if<PortScanParams>(&attack.params))
            batch = gen_portscan(*scan, start, attack_seed);
        else if (const auto* loic = std::get_if<LoicDdosParams>(&attack.params))
            batch = gen_loic_ddos(*loic, start, attack_seed);
        else if (const auto* ping = std::get_if<PingFloodParams>(&attack.params))
            batch = gen_pingflood(*ping, start, attack_seed);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    std::sort(all.begin(), all.end(), [](const FlowRecord& a, const FlowRecord& b) {
        if (a.start_time != b.start_time) return a.start_time < b.start_time;
        return a < b;
    });
    return all;
}

namespace {

IPv4Addr json_addr(const nlohmann::json& j, const char* field) {
    auto addr = parse_ipv4(j.at(field).get<std::string>());
    if (!addr) throw InvalidSpec(std::string("bad IPv4 address in ") + field);
    return *addr;
}

std::vector<IPv4Addr> json_sources(const nlohmann::json& j) {
    std::vector<IPv4Addr> sources;
    if (j.contains("sources")) {
        for (const auto& s : j.at("sources")) {
            auto addr = parse_ipv4(s.get<std::string>());
            if (!addr) throw InvalidSpec("bad IPv4 address in sources");
            sources.push_back(*addr);
        }
    } else if (j.contains("source_count")) {
        // Convenience: N attackers from the 203.0.113.0/24 test net.
        auto count = j.at("source_count").get<std::uint32_t>();
        for (std::uint32_t i = 0; i < count; ++i)
            sources.push_back(IPv4Addr{0xCB007100 + 1 + i});
    }
    return sources;
}

DurationMs json_duration_s(const nlohmann::json& j, const char* field, DurationMs fallback) {
    if (!j.contains(field)) return fallback;
    return static_cast<DurationMs>(std::llround(j.at(field).get<double>() * 1000.0));
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec spec;
    try {
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("start_time")) {
            auto t = parse_timestamp(j.at("start_time").get<std::string>());
            if (!t) throw InvalidSpec("bad start_time; expected YYYY-MM-DD HH:MM:SS.mmm");
            spec.start_time = *t;
        }
        spec.duration = json_duration_s(j, "duration_s", spec.duration);
        if (j.contains("baseline")) {
            const auto& b = j.at("baseline");
            auto& out = spec.baseline;
            if (b.contains("flows_per_window")) {
                out.flows_per_window_min = b.at("flows_per_window").at(0).get<std::uint32_t>();
                out.flows_per_window_max = b.at("flows_per_window").at(1).get<std::uint32_t>();
            }
            if (b.contains("per_flow_rate_mean_bps"))
                out.per_flow_rate_mean_bps = b.at("per_flow_rate_mean_bps").get<double>();
            if (b.contains("per_flow_rate_sd_bps"))
                out.per_flow_rate_sd_bps = b.at("per_flow_rate_sd_bps").get<double>();
            out.window = json_duration_s(b, "window_s", out.window);
            if (b.contains("source_pool")) out.source_pool = b.at("source_pool").get<std::uint32_t>();
            if (b.contains("dst_pool")) out.dst_pool = b.at("dst_pool").get<std::uint32_t>();
        }
        for (const auto& a : j.value("attacks", nlohmann::json::array())) {
            AttackSpec attack;
            attack.start_offset = json_duration_s(a, "start_s", 0);
            const auto kind = a.at("kind").get<std::string>();
            if (kind == "portscan") {
                PortScanParams p;
                p.scanner = json_addr(a, "scanner");
                auto subnet = parse_ipv4_prefix(a.at("target_subnet").get<std::string>());
                if (!subnet) throw InvalidSpec("bad target_subnet");
                p.target_subnet = *subnet;
                if (a.contains("flows_per_five_min"))
                    p.flows_per_five_min = a.at("flows_per_five_min").get<std::uint32_t>();
                p.duration = json_duration_s(a, "duration_s", p.duration);
                attack.params = p;
            } else if (kind == "loic-ddos") {
                LoicDdosParams p;
                p.sources = json_sources(a);
                p.target = json_addr(a, "target");
                if (a.contains("flows_per_min_per_source"))
                    p.flows_per_min_per_source =
                        a.at("flows_per_min_per_source").get<std::uint32_t>();
                p.duration = json_duration_s(a, "duration_s", p.duration);
                if (a.contains("bytes_min")) p.bytes_min = a.at("bytes_min").get<std::uint32_t>();
                if (a.contains("bytes_max")) p.bytes_max = a.at("bytes_max").get<std::uint32_t>();
                attack.params = p;
            } else if (kind == "pingflood") {
                PingFloodParams p;
                p.sources = json_sources(a);
                p.target = json_addr(a, "target");
                p.flow_duration = json_duration_s(a, "flow_duration_s", p.flow_duration);
                if (a.contains("packets")) p.packets = a.at("packets").get<std::uint64_t>();
                attack.params = p;
            } else {
                throw InvalidSpec("unknown attack kind: " + kind);
            }
            spec.attacks.push_back(std::move(attack));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("scenario json: ") + e.what());
    }
    validate_scenario(spec);
    return spec;
}

nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
    nlohmann::json j;
    j["seed"] = spec.seed;
    j["start_time"] = format_timestamp(spec.start_time);
    j["duration_s"] = spec.duration / 1000.0;
    j["baseline"] = {
        {"flows_per_window",
         {spec.baseline.flows_per_window_min, spec.baseline.flows_per_window_max}},
        {"per_flow_rate_mean_bps", spec.baseline.per_flow_rate_mean_bps},
        {"per_flow_rate_sd_bps", spec.baseline.per_flow_rate_sd_bps},
        {"window_s", spec.baseline.window / 1000.0},
        {"source_pool", spec.baseline.source_pool},
        {"dst_pool", spec.baseline.dst_pool},
    };
    j["attacks"] = nlohmann::json::array();
    for (const auto& attack : spec.attacks) {
        nlohmann::json a;
        a["start_s"] = attack.start_offset / 1000.0;
        if (const auto* scan = std::get_if<PortScanParams>(&attack.params)) {
            a["kind"] = "portscan";
            a["scanner"] = to_string(scan->scanner);
            a["target_subnet"] = to_string(scan->target_subnet);
            a["flows_per_five_min"] = scan->flows_per_five_min;
            a["duration_s"] = scan->duration / 1000.0;
        } else if (const auto* loic = std::get_if<LoicDdosParams>(&attack.params)) {
            a["kind"] = "loic-ddos";
            auto sources = nlohmann::json::array();
            for (auto s : loic->sources) sources.push_back(to_string(s));
            a["sources"] = sources;
            a["target"] = to_string(loic->target);
            a["flows_per_min_per_source"] = loic->flows_per_min_per_source;
            a["duration_s"] = loic->duration / 1000.0;
            a["bytes_min"] = loic->bytes_min;
            a["bytes_max"] = loic->bytes_max;
        } else if (const auto* ping = std::get_if<PingFloodParams>(&attack.params)) {
            a["kind"] = "pingflood";
            auto sources = nlohmann::json::array();
            for (auto s : ping->sources) sources.push_back(to_string(s));
            a["sources"] = sources;
            a["target"] = to_string(ping->target);
            a["flow_duration_s"] = ping->flow_duration / 1000.0;
            a["packets"] = ping->packets;
        }
        j["attacks"].push_back(a);
    }
    return j;
}

}  // namespace flowsentry
