#include "tvcache/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "tvcache/error.hpp"

namespace tvc {

std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw Error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InvalidArgument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

void write_trace(std::ostream& os, const RequestTrace& trace) {
    os << kTraceHeader << '\n';
    for (const auto& rec : trace.slots) {
        for (const auto& r : rec.requests) {
            os << rec.slot << ',' << format_double(r.time) << ',' << r.user << ',' << (r.file + 1) << '\n';
        }
    }
}

RequestTrace read_trace(std::istream& is, std::uint32_t n_files) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("trace: missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw IoError("trace: expected header '" + std::string(kTraceHeader) + "'");

    RequestTrace trace;
    trace.n_files = n_files;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string_view, 4> fields;
        std::string_view rest(line);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (k == 3)) {
                throw IoError("trace line " + std::to_string(lineno) + ": expected 4 comma-separated fields");
            }
            fields[k] = rest.substr(0, comma);
            if (k < 3) rest.remove_prefix(comma + 1);
        }
        try {
            const auto slot = parse_int(fields[0]);
            const auto file = parse_int(fields[3]);
            if (file < 1 || file > static_cast<std::int64_t>(n_files)) {
                throw InvalidArgument("file index out of range 1.." + std::to_string(n_files));
            }
            const auto user = parse_int(fields[2]);
            if (user < 0) throw InvalidArgument("negative user id");
            Request req{parse_double(fields[1]), static_cast<std::uint32_t>(user),
                        static_cast<std::uint32_t>(file - 1)};
            if (trace.slots.empty() || trace.slots.back().slot != slot) {
                trace.slots.push_back(SlotRecord{slot, {}});
            }
            trace.slots.back().requests.push_back(req);
        } catch (const InvalidArgument& e) {
            throw IoError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return trace;
}

void write_trace_file(const std::string& path, const RequestTrace& trace) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_trace(os, trace);
}

RequestTrace read_trace_file(const std::string& path, std::uint32_t n_files) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_trace(is, n_files);
}

}  // namespace tvc
