#pragma once

#include <string>
#include <string_view>

namespace cfaudit {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Quotes a CSV field when it holds a delimiter, quote or newline.
std::string csv_field(std::string_view text);

}  // namespace cfaudit
