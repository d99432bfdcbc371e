#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowsentry/classify.hpp"

namespace flowsentry {

struct BlacklistEntry {
    IPv4Addr src_addr;
    AttackKind kind = AttackKind::PortScan;
    TimestampMs added_at = 0;
    TimestampMs expires_at = 0;
    std::uint32_t hit_count = 1;  // re-reports while listed
};

enum class RuleDialect { LinuxPacketFilter, GenericDenyList };

std::optional<RuleDialect> parse_rule_dialect(std::string_view text);

// One blacklist state change; the journal is the durable record of these.
struct JournalEvent {
    enum class Type { Add, Refresh, Expire };

    Type type = Type::Add;
    TimestampMs time = 0;
    IPv4Addr addr;
    AttackKind kind = AttackKind::PortScan;
    TimestampMs expires_at = 0;
    std::uint32_t hit_count = 1;
};

std::string journal_line(const JournalEvent& event);
std::optional<JournalEvent> parse_journal_line(std::string_view line);

// TTL blacklist of suspect sources. All mutation goes through update/expire
// (or apply, when replaying a journal), each returning the events to journal.
class Blacklist {
  public:
    // Inserts new sources with expires_at = now + block_ttl and refreshes
    // re-reported ones (hit_count+1, expiry extended, never shortened).
    // Whitelisted sources are skipped before insertion.
    std::vector<JournalEvent> update(std::span<const SuspectReport> reports, TimestampMs now,
                                     DurationMs block_ttl,
                                     std::span<const IPv4Prefix> whitelist = {});

    // Drops every entry with expires_at <= now.
    std::vector<JournalEvent> expire(TimestampMs now);

    void apply(const JournalEvent& event);

    // One DROP rule per entry, ordered by ascending source address.
    std::vector<std::string> firewall_rules(RuleDialect dialect) const;

    const std::map<IPv4Addr, BlacklistEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool contains(IPv4Addr addr) const { return entries_.count(addr) > 0; }

  private:
    std::map<IPv4Addr, BlacklistEntry> entries_;
};

class StorageFailure : public std::runtime_error {
  public:
    explicit StorageFailure(const std::string& what) : std::runtime_error(what) {}
};

// Append-only, line-delimited journal; every append is flushed.
class JournalWriter {
  public:
    explicit JournalWriter(const std::string& path);

    void append(const JournalEvent& event);
    void append(std::span<const JournalEvent> events);

  private:
    std::string path_;
    std::ofstream out_;
};

struct ReplayResult {
    Blacklist blacklist;
    std::size_t events_applied = 0;
    std::optional<std::string> warning;  // set when trailing corruption was skipped
};

// Rebuilds blacklist state from a journal, applying events with
// time <= up_to. A corrupted line ends the replay at the last valid state.
ReplayResult replay_journal(std::istream& in,
                            TimestampMs up_to = std::numeric_limits<TimestampMs>::max());

}  // namespace flowsentry
