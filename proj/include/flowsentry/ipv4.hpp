#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace flowsentry {

// IPv4 address, value in host byte order.
struct IPv4Addr {
    std::uint32_t value = 0;

    auto operator<=>(const IPv4Addr&) const = default;
};

std::string to_string(IPv4Addr addr);

// Strict dotted-quad parser; rejects anything else (including IPv6).
std::optional<IPv4Addr> parse_ipv4(std::string_view text);

// Address prefix for whitelists ("10.0.0.1" or "10.0.0.0/24").
struct IPv4Prefix {
    IPv4Addr base;
    int length = 32;

    bool contains(IPv4Addr addr) const;
    auto operator<=>(const IPv4Prefix&) const = default;
};

std::string to_string(const IPv4Prefix& prefix);
std::optional<IPv4Prefix> parse_ipv4_prefix(std::string_view text);

}  // namespace flowsentry

template <>
struct std::hash<flowsentry::IPv4Addr> {
    std::size_t operator()(flowsentry::IPv4Addr addr) const noexcept {
        return std::hash<std::uint32_t>{}(addr.value);
    }
};
