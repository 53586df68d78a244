#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace carlin {

inline constexpr std::int64_t kDefaultMemoryCapBytes = std::int64_t{2} << 30;

/// Thrown instead of allocating a lifted state larger than the configured cap.
struct MemoryGuardError : std::runtime_error {
  std::int64_t required_bytes;
  std::int64_t cap_bytes;

  MemoryGuardError(std::int64_t required, std::int64_t cap)
      : std::runtime_error("lifted state needs " + std::to_string(required) +
                           " bytes, cap is " + std::to_string(cap)),
        required_bytes(required),
        cap_bytes(cap) {}
};

/// Thrown by integrators when the state stops being finite.
struct NumericalAbort : std::runtime_error {
  std::int64_t step;

  explicit NumericalAbort(std::int64_t step_index)
      : std::runtime_error("non-finite state at step " +
                           std::to_string(step_index)),
        step(step_index) {}
};

}  // namespace carlin
