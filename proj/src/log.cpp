#include "uaic/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace uaic::log {

namespace {
std::once_flag configured;
}

void configure_from_env() {
    std::call_once(configured, [] {
        auto logger = spdlog::stderr_logger_mt("uaic");
        logger->set_pattern("[%H:%M:%S] %l: %v");
        const char* env = std::getenv("UAIC_LOG");
        const std::string level = env ? env : "info";
        if (level == "debug") {
            logger->set_level(spdlog::level::debug);
        } else if (level == "error") {
            logger->set_level(spdlog::level::err);
        } else {
            logger->set_level(spdlog::level::info);
        }
        spdlog::set_default_logger(logger);
    });
}

namespace detail {
void ensure() { configure_from_env(); }
} // namespace detail

} // namespace uaic::log
