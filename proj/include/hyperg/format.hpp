// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <string>

namespace hyperg {

/// Shortest-form decimal with 17 significant digits; round-trips exactly.
std::string format_double(double v);

/// Parses a decimal written by format_double (or any strtod-compatible
/// number); throws DataError on trailing garbage.
double parse_double(const std::string& text);

}  // namespace hyperg
