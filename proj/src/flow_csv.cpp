#include "flowsentry/flow_csv.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

namespace flowsentry {

namespace {

bool split_fields(std::string_view line, std::array<std::string_view, 9>& fields) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        std::string_view field = comma == std::string_view::npos
                                     ? line.substr(pos)
                                     : line.substr(pos, comma - pos);
        if (n == fields.size()) return false;
        fields[n++] = field;
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return n == fields.size();
}

bool parse_u64(std::string_view text, std::uint64_t& out) {
    auto [next, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && next == text.data() + text.size() && !text.empty();
}

bool parse_u16(std::string_view text, std::uint16_t& out) {
    std::uint64_t v = 0;
    if (!parse_u64(text, v) || v > 0xffff) return false;
    out = static_cast<std::uint16_t>(v);
    return true;
}

// "S[.mmm]" seconds with at most millisecond resolution, parsed exactly.
bool parse_duration_s(std::string_view text, DurationMs& out) {
    auto dot = text.find('.');
    std::string_view whole = dot == std::string_view::npos ? text : text.substr(0, dot);
    std::uint64_t secs = 0;
    if (!parse_u64(whole, secs)) return false;
    std::uint64_t ms = 0;
    if (dot != std::string_view::npos) {
        std::string_view frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 3) return false;
        if (!parse_u64(frac, ms)) return false;
        for (std::size_t i = frac.size(); i < 3; ++i) ms *= 10;
    }
    out = static_cast<DurationMs>(secs * 1000 + ms);
    return true;
}

bool parse_protocol(std::string_view text, std::uint8_t& out) {
    if (text == "TCP") {
        out = kProtoTcp;
        return true;
    }
    if (text == "UDP") {
        out = kProtoUdp;
        return true;
    }
    if (text == "ICMP") {
        out = kProtoIcmp;
        return true;
    }
    std::uint64_t v = 0;
    if (!parse_u64(text, v) || v > 255) return false;
    out = static_cast<std::uint8_t>(v);
    return true;
}

std::string protocol_name(std::uint8_t proto) {
    switch (proto) {
        case kProtoTcp: return "TCP";
        case kProtoUdp: return "UDP";
        case kProtoIcmp: return "ICMP";
        default: return std::to_string(proto);
    }
}

bool parse_line(std::string_view line, FlowRecord& record, std::string& reason) {
    std::array<std::string_view, 9> f;
    if (!split_fields(line, f)) {
        reason = "expected 9 comma-separated fields";
        return false;
    }
    auto start = parse_timestamp(f[0]);
    if (!start) {
        reason = "bad start_time";
        return false;
    }
    FlowRecord r;
    r.start_time = *start;
    if (!parse_duration_s(f[1], r.duration)) {
        reason = "bad duration_s";
        return false;
    }
    if (!parse_protocol(f[2], r.key.protocol)) {
        reason = "bad protocol";
        return false;
    }
    for (auto idx : {3, 5}) {
        if (f[idx].find(':') != std::string_view::npos) {
            reason = "IPv6 address unsupported";
            return false;
        }
    }
    auto src = parse_ipv4(f[3]);
    auto dst = parse_ipv4(f[5]);
    if (!src || !dst) {
        reason = "bad IPv4 address";
        return false;
    }
    r.key.src_addr = *src;
    r.key.dst_addr = *dst;
    if (!parse_u16(f[4], r.key.src_port) || !parse_u16(f[6], r.key.dst_port)) {
        reason = "bad port";
        return false;
    }
    if (!parse_u64(f[7], r.packets) || !parse_u64(f[8], r.bytes)) {
        reason = "bad counter";
        return false;
    }
    if (auto err = validation_error(r)) {
        reason = *err;
        return false;
    }
    record = r;
    return true;
}

}  // namespace

FlowCsvReader::Next FlowCsvReader::next(FlowRecord& record, CsvLineError& error) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const bool was_first = first_line_;
        first_line_ = false;
        if (line.empty()) continue;
        if (was_first && line == kFlowCsvHeader) continue;
        std::string reason;
        if (parse_line(line, record, reason)) return Next::Record;
        error = CsvLineError{line_no_, reason};
        return Next::BadLine;
    }
    return Next::End;
}

CsvReadResult read_flow_csv(std::istream& in) {
    CsvReadResult result;
    FlowCsvReader reader(in);
    FlowRecord record;
    CsvLineError error;
    while (true) {
        switch (reader.next(record, error)) {
            case FlowCsvReader::Next::Record: result.records.push_back(record); break;
            case FlowCsvReader::Next::BadLine: result.errors.push_back(error); break;
            case FlowCsvReader::Next::End: return result;
        }
    }
}

void write_flow_csv_record(std::ostream& out, const FlowRecord& r) {
    char dur[32];
    std::snprintf(dur, sizeof(dur), "%lld.%03lld", static_cast<long long>(r.duration / 1000),
                  static_cast<long long>(r.duration % 1000));
    out << format_timestamp(r.start_time) << ',' << dur << ','
        << protocol_name(r.key.protocol) << ',' << to_string(r.key.src_addr) << ','
        << r.key.src_port << ',' << to_string(r.key.dst_addr) << ',' << r.key.dst_port << ','
        << r.packets << ',' << r.bytes << '\n';
}

void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records) {
    out << kFlowCsvHeader << '\n';
    for (const auto& r : records) write_flow_csv_record(out, r);
}

}  // namespace flowsentry
