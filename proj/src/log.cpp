#include "lung/log.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

#include "lung/errors.hpp"

namespace lung {

void set_log_level(std::string_view level) {
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw InvalidConfig("log level must be error, info or debug, got '" + std::string(level) + "'");
  }
}

void configure_logging(std::string_view fallback) {
  const char* env = std::getenv("LUNG_SSL_LOG");
  set_log_level(env != nullptr && *env != '\0' ? std::string_view(env) : fallback);
}

}  // namespace lung
