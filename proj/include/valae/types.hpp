#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace valae {

using StateId = std::size_t;
using ActionId = std::size_t;

/// RESET is always action 0.
inline constexpr ActionId kReset = 0;

/// Sentinel for "goal unreachable" / improper values. Compared with is_unreachable,
/// never with a magic large number.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline bool is_unreachable(double v) { return v == kUnreachable; }

/// Bad input: malformed MDP, out-of-range parameter, broken precondition.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while running an algorithm (step cap breach, non-terminating iteration).
class RuntimeHardError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Sorted, duplicate-free list of state ids.
using StateSet = std::vector<StateId>;

StateSet normalize_set(StateSet s);
bool set_contains(const StateSet& s, StateId x);
bool is_subset(const StateSet& a, const StateSet& b);

} // namespace valae
