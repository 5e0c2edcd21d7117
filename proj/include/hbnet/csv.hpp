#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hbnet::csv {

using Row = std::vector<std::string>;

/// Reads a comma-separated table. Double-quoted fields may contain commas,
/// newlines and doubled quotes. A trailing '\r' is stripped from each line.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::string& path);

void write_row(std::ostream& out, const Row& row);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Parses the whole string as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);

}  // namespace hbnet::csv
