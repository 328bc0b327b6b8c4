#pragma once

#include <optional>
#include <string_view>

namespace lung {

/// Sets the spdlog level from LUNG_SSL_LOG (error | info | debug), falling
/// back to `fallback` when the variable is unset. Unknown values throw
/// InvalidConfig.
void configure_logging(std::string_view fallback = "info");

/// Same, from an explicit level name.
void set_log_level(std::string_view level);

}  // namespace lung
