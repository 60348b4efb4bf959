#include "cfaudit/common/json_keys.hpp"

#include <algorithm>
#include <string>

#include "cfaudit/common/error.hpp"

namespace cfaudit {

void expect_keys(const nlohmann::ordered_json& j, std::initializer_list<std::string_view> allowed,
                 std::string_view context) {
  if (!j.is_object()) throw ValidationError(std::string(context) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace cfaudit
