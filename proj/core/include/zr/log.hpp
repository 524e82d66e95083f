// Minimal stderr logger. Level comes from the ZR_LOG environment variable
// (error|warn|info|debug), default warn.
#pragma once

#include <sstream>
#include <string>

namespace zr::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level threshold();
void set_threshold(Level lv);
void write(Level lv, const std::string& msg);

namespace detail {
template <class... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

template <class... Args>
void error(Args&&... args) {
  write(Level::kError, detail::concat(std::forward<Args>(args)...));
}
template <class... Args>
void warn(Args&&... args) {
  write(Level::kWarn, detail::concat(std::forward<Args>(args)...));
}
template <class... Args>
void info(Args&&... args) {
  write(Level::kInfo, detail::concat(std::forward<Args>(args)...));
}
template <class... Args>
void debug(Args&&... args) {
  write(Level::kDebug, detail::concat(std::forward<Args>(args)...));
}

}  // namespace zr::log
