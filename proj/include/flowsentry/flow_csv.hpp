#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowsentry/flow.hpp"

namespace flowsentry {

// Flow CSV: one header line, then one record per line with the columns
//   start_time,duration_s,protocol,src_addr,src_port,dst_addr,dst_port,packets,bytes
// start_time is "YYYY-MM-DD HH:MM:SS.mmm" UTC, duration_s has 3 decimals,
// protocol is TCP/UDP/ICMP or the IP protocol number. The format cannot
// carry ingress_ifindex or ToS; both read back as 0.

inline constexpr const char* kFlowCsvHeader =
    "start_time,duration_s,protocol,src_addr,src_port,dst_addr,dst_port,packets,bytes";

struct CsvLineError {
    std::size_t line_no = 0;
    std::string reason;
};

// Streaming reader; malformed lines are reported and skipped, never fatal.
class FlowCsvReader {
  public:
    explicit FlowCsvReader(std::istream& in) : in_(in) {}

    enum class Next { Record, BadLine, End };

    Next next(FlowRecord& record, CsvLineError& error);

  private:
    std::istream& in_;
    std::size_t line_no_ = 0;
    bool first_line_ = true;
};

struct CsvReadResult {
    std::vector<FlowRecord> records;
    std::vector<CsvLineError> errors;
};

CsvReadResult read_flow_csv(std::istream& in);

void write_flow_csv_record(std::ostream& out, const FlowRecord& r);
void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records);

}  // namespace flowsentry
