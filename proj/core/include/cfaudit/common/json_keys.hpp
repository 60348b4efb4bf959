#pragma once

#include <initializer_list>
#include <string_view>

#include "json.hpp"

namespace cfaudit {

/// Throws ValidationError naming the first key of object `j` not in `allowed`.
void expect_keys(const nlohmann::ordered_json& j, std::initializer_list<std::string_view> allowed,
                 std::string_view context);

}  // namespace cfaudit
