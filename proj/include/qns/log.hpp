#pragma once

#include <string_view>

namespace qns {

/// Writes a single warning line to stderr. Thread-safe, line-atomic.
void warn(std::string_view message);

/// Silences warn() for the current thread while in scope (used by tests and
/// by the optimizer when it probes non-physical parameter regions on purpose).
class ScopedWarningSilencer {
 public:
  ScopedWarningSilencer();
  ~ScopedWarningSilencer();
  ScopedWarningSilencer(const ScopedWarningSilencer&) = delete;
  ScopedWarningSilencer& operator=(const ScopedWarningSilencer&) = delete;

 private:
  bool previous_;
};

}  // namespace qns
