#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cosgraph::detail {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Integers print without a fractional part, everything else via %.6g.
std::string format_compact(double v);

bool parse_double(std::string_view s, double& out);
bool parse_long(std::string_view s, long& out);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);

} // namespace cosgraph::detail
