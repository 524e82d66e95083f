#include "zr/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace zr::log {

namespace {

Level parse_env() {
  const char* env = std::getenv("ZR_LOG");
  if (!env) return Level::kWarn;
  if (!std::strcmp(env, "error")) return Level::kError;
  if (!std::strcmp(env, "warn")) return Level::kWarn;
  if (!std::strcmp(env, "info")) return Level::kInfo;
  if (!std::strcmp(env, "debug")) return Level::kDebug;
  return Level::kWarn;
}

Level g_threshold = parse_env();
std::mutex g_mutex;

const char* tag(Level lv) {
  switch (lv) {
    case Level::kError: return "error";
    case Level::kWarn: return "warn";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return g_threshold; }
void set_threshold(Level lv) { g_threshold = lv; }

void write(Level lv, const std::string& msg) {
  if (static_cast<int>(lv) > static_cast<int>(g_threshold)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[zr:%s] %s\n", tag(lv), msg.c_str());
}

}  // namespace zr::log
