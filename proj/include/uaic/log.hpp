#pragma once

#include <utility>

#include <spdlog/spdlog.h>

namespace uaic::log {

/// Installs a stderr logger whose level comes from UAIC_LOG
/// (error | info | debug; default info). Idempotent.
void configure_from_env();

namespace detail {
void ensure();
}

template <class... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
    detail::ensure();
    spdlog::debug(fmt, std::forward<Args>(args)...);
}

template <class... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
    detail::ensure();
    spdlog::info(fmt, std::forward<Args>(args)...);
}

template <class... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
    detail::ensure();
    spdlog::error(fmt, std::forward<Args>(args)...);
}

} // namespace uaic::log
