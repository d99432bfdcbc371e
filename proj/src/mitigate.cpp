#include "flowsentry/mitigate.hpp"

#include <algorithm>
#include <istream>

#include <json.hpp>

namespace flowsentry {

namespace {

std::string_view event_name(JournalEvent::Type type) {
    switch (type) {
        case JournalEvent::Type::Add: return "add";
        case JournalEvent::Type::Refresh: return "refresh";
        case JournalEvent::Type::Expire: return "expire";
    }
    return "?";
}

std::optional<JournalEvent::Type> parse_event_name(std::string_view text) {
    if (text == "add") return JournalEvent::Type::Add;
    if (text == "refresh") return JournalEvent::Type::Refresh;
    if (text == "expire") return JournalEvent::Type::Expire;
    return std::nullopt;
}

}  // namespace

std::optional<RuleDialect> parse_rule_dialect(std::string_view text) {
    if (text == "linux-packet-filter") return RuleDialect::LinuxPacketFilter;
    if (text == "generic-deny-list") return RuleDialect::GenericDenyList;
    return std::nullopt;
}

std::string journal_line(const JournalEvent& event) {
    nlohmann::ordered_json j;
    j["t"] = event.time;
    j["event"] = event_name(event.type);
    j["addr"] = to_string(event.addr);
    j["kind"] = to_string(event.kind);
    j["expires_at"] = event.expires_at;
    j["hits"] = event.hit_count;
    return j.dump();
}

std::optional<JournalEvent> parse_journal_line(std::string_view line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    JournalEvent event;
    try {
        auto type = parse_event_name(j.at("event").get<std::string>());
        auto addr = parse_ipv4(j.at("addr").get<std::string>());
        auto kind = parse_attack_kind(j.at("kind").get<std::string>());
        if (!type || !addr || !kind) return std::nullopt;
        event.type = *type;
        event.addr = *addr;
        event.kind = *kind;
        event.time = j.at("t").get<TimestampMs>();
        event.expires_at = j.at("expires_at").get<TimestampMs>();
        event.hit_count = j.at("hits").get<std::uint32_t>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    return event;
}

std::vector<JournalEvent> Blacklist::update(std::span<const SuspectReport> reports,
                                            TimestampMs now, DurationMs block_ttl,
                                            std::span<const IPv4Prefix> whitelist) {
    std::vector<JournalEvent> events;
    for (const auto& report : reports) {
        const bool whitelisted =
            std::any_of(whitelist.begin(), whitelist.end(),
                        [&](const IPv4Prefix& p) { return p.contains(report.src_addr); });
        if (whitelisted) continue;

        JournalEvent event;
        event.time = now;
        event.addr = report.src_addr;

        auto it = entries_.find(report.src_addr);
        if (it == entries_.end()) {
            BlacklistEntry entry;
            entry.src_addr = report.src_addr;
            entry.kind = report.kind;
            entry.added_at = now;
            entry.expires_at = now + block_ttl;
            entry.hit_count = 1;
            entries_.emplace(report.src_addr, entry);
            event.type = JournalEvent::Type::Add;
            event.kind = entry.kind;
            event.expires_at = entry.expires_at;
            event.hit_count = entry.hit_count;
        } else {
            auto& entry = it->second;
            entry.hit_count += 1;
            entry.expires_at = std::max(entry.expires_at, now + block_ttl);
            event.type = JournalEvent::Type::Refresh;
            event.kind = entry.kind;
            event.expires_at = entry.expires_at;
            event.hit_count = entry.hit_count;
        }
        events.push_back(event);
    }
    return events;
}

std::vector<JournalEvent> Blacklist::expire(TimestampMs now) {
    std::vector<JournalEvent> events;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.expires_at <= now) {
            JournalEvent event;
            event.type = JournalEvent::Type::Expire;
            event.time = now;
            event.addr = it->second.src_addr;
            event.kind = it->second.kind;
            event.expires_at = it->second.expires_at;
            event.hit_count = it->second.hit_count;
            events.push_back(event);
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
    return events;
}

void Blacklist::apply(const JournalEvent& event) {
    switch (event.type) {
        case JournalEvent::Type::Add: {
            BlacklistEntry entry;
            entry.src_addr = event.addr;
            entry.kind = event.kind;
            entry.added_at = event.time;
            entry.expires_at = event.expires_at;
            entry.hit_count = event.hit_count;
            entries_[event.addr] = entry;
            break;
        }
        case JournalEvent::Type::Refresh: {
            auto it = entries_.find(event.addr);
            if (it == entries_.end()) {
                // Journal truncated before the matching add; reconstruct what we can.
                BlacklistEntry entry;
                entry.src_addr = event.addr;
                entry.kind = event.kind;
                entry.added_at = event.time;
                entry.expires_at = event.expires_at;
                entry.hit_count = event.hit_count;
                entries_[event.addr] = entry;
            } else {
                it->second.expires_at = event.expires_at;
                it->second.hit_count = event.hit_count;
            }
            break;
        }
        case JournalEvent::Type::Expire: entries_.erase(event.addr); break;
    }
}

std::vector<std::string> Blacklist::firewall_rules(RuleDialect dialect) const {
    std::vector<std::string> rules;
    rules.reserve(entries_.size());
    for (const auto& [addr, entry] : entries_) {
        switch (dialect) {
            case RuleDialect::LinuxPacketFilter:
                rules.push_back("-A INPUT -s " + to_string(addr) + "/32 -j DROP");
                break;
            case RuleDialect::GenericDenyList: rules.push_back(to_string(addr)); break;
        }
    }
    return rules;
}

JournalWriter::JournalWriter(const std::string& path) : path_(path) {
    out_.open(path, std::ios::app);
    if (!out_) throw StorageFailure("cannot open journal for append: " + path);
}

void JournalWriter::append(const JournalEvent& event) {
    out_ << journal_line(event) << '\n';
    out_.flush();
    if (!out_) throw StorageFailure("journal write failed: " + path_);
}

void JournalWriter::append(std::span<const JournalEvent> events) {
    for (const auto& e : events) append(e);
}

ReplayResult replay_journal(std::istream& in, TimestampMs up_to) {
    ReplayResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto event = parse_journal_line(line);
        if (!event) {
            result.warning = "journal corrupt at line " + std::to_string(line_no) +
                             "; state reflects the journal up to the previous line";
            break;
        }
        if (event->time > up_to) break;
        result.blacklist.apply(*event);
        ++result.events_applied;
    }
    return result;
}

}  // namespace flowsentry
