#include "flowsentry/flow.hpp"

namespace flowsentry {

std::optional<std::string> validation_error(const FlowRecord& r) {
    const auto proto = r.key.protocol;
    const bool has_ports = proto == kProtoTcp || proto == kProtoUdp;
    if (!has_ports && proto != kProtoIcmp && (r.key.src_port != 0 || r.key.dst_port != 0))
        return "port on portless protocol";
    if (proto == kProtoIcmp && r.key.src_port != 0)
        return "source port on ICMP flow";
    if (r.duration < 0) return "negative duration";
    if (r.packets == 0) return "packets = 0";
    if (r.bytes < r.packets) return "bytes < packets";
    return std::nullopt;
}

const FlowRecord& validate(const FlowRecord& r) {
    if (auto reason = validation_error(r)) throw InvalidRecord(*reason);
    return r;
}

}  // namespace flowsentry
