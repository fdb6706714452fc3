#ifndef CALIBREX_LOG_HPP
#define CALIBREX_LOG_HPP

#include <sstream>
#include <string>

namespace calibrex::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Current threshold; initialized from the CALIBREX_LOG environment variable
// (error|warn|info|debug), default info.
Level level();
void set_level(Level lv);

void write(Level lv, const std::string& msg);

namespace detail {
template <typename... Args>
void emit(Level lv, Args&&... args) {
    if (lv > level()) return;
    std::ostringstream os;
    (os << ... << args);
    write(lv, os.str());
}
}  // namespace detail

template <typename... Args> void error(Args&&... a) { detail::emit(Level::Error, std::forward<Args>(a)...); }
template <typename... Args> void warn(Args&&... a)  { detail::emit(Level::Warn,  std::forward<Args>(a)...); }
template <typename... Args> void info(Args&&... a)  { detail::emit(Level::Info,  std::forward<Args>(a)...); }
template <typename... Args> void debug(Args&&... a) { detail::emit(Level::Debug, std::forward<Args>(a)...); }

}  // namespace calibrex::log

#endif
