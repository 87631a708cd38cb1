#include "bsweyl/diagnostics.hpp"

#include <iostream>
#include <map>
#include <mutex>

namespace bsweyl {
namespace {

constexpr std::size_t kPrintLimit = 3;

struct WarningState {
  std::mutex mutex;
  WarningHandler handler;
  std::map<std::string, std::size_t> counts;
};

WarningState& state() {
  static WarningState s;
  return s;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(state().mutex);
  state().handler = std::move(handler);
}

void warn(const std::string& kind, const std::string& message) {
  auto& s = state();
  std::lock_guard lock(s.mutex);
  const std::size_t seen = s.counts[kind]++;
  if (s.handler) {
    s.handler(kind + ": " + message);
  } else if (seen < kPrintLimit) {
    std::cerr << "warning [" << kind << "] " << message << '\n';
  }
}

std::size_t warning_count(const std::string& kind) {
  std::lock_guard lock(state().mutex);
  auto it = state().counts.find(kind);
  return it == state().counts.end() ? 0 : it->second;
}

void reset_warning_counts() {
  std::lock_guard lock(state().mutex);
  state().counts.clear();
}

}  // namespace bsweyl
