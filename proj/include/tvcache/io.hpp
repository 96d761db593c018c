#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "tvcache/model.hpp"

namespace tvc {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Parses a full decimal token; throws InvalidArgument on trailing garbage.
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

inline constexpr std::string_view kTraceHeader = "slot,arrival_time,user_id,file_index";

/// Writes `slot,arrival_time,user_id,file_index` rows (file index one-based).
/// Empty slots produce no rows.
void write_trace(std::ostream& os, const RequestTrace& trace);

/// Reads the trace line format back. `n_files` bounds the file index column.
RequestTrace read_trace(std::istream& is, std::uint32_t n_files);

void write_trace_file(const std::string& path, const RequestTrace& trace);
RequestTrace read_trace_file(const std::string& path, std::uint32_t n_files);

}  // namespace tvc
