#include "flowsentry/ipv4.hpp"

#include <charconv>
#include <cstdio>

namespace flowsentry {

std::string to_string(IPv4Addr addr) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (addr.value >> 24) & 0xff,
                  (addr.value >> 16) & 0xff, (addr.value >> 8) & 0xff, addr.value & 0xff);
    return buf;
}

std::optional<IPv4Addr> parse_ipv4(std::string_view text) {
    std::uint32_t value = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        unsigned v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || next == p || next - p > 3 || v > 255) return std::nullopt;
        p = next;
        value = (value << 8) | v;
    }
    if (p != end) return std::nullopt;
    return IPv4Addr{value};
}

bool IPv4Prefix::contains(IPv4Addr addr) const {
    if (length <= 0) return true;
    if (length >= 32) return addr.value == base.value;
    const std::uint32_t mask = ~std::uint32_t{0} << (32 - length);
    return (addr.value & mask) == (base.value & mask);
}

std::string to_string(const IPv4Prefix& prefix) {
    return to_string(prefix.base) + "/" + std::to_string(prefix.length);
}

std::optional<IPv4Prefix> parse_ipv4_prefix(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        auto addr = parse_ipv4(text);
        if (!addr) return std::nullopt;
        return IPv4Prefix{*addr, 32};
    }
    auto addr = parse_ipv4(text.substr(0, slash));
    if (!addr) return std::nullopt;
    auto len_text = text.substr(slash + 1);
    int len = -1;
    auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || next != len_text.data() + len_text.size() || len < 0 || len > 32)
        return std::nullopt;
    return IPv4Prefix{*addr, len};
}

}  // namespace flowsentry
