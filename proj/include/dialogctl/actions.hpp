#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dialogctl/rng.hpp"

namespace dialogctl {

enum class ActionKind { Text, Api };

/// A system action with entity values abstracted to <slot> markers.
struct ActionTemplate {
  std::size_t id = 0;
  std::string name;
  ActionKind kind = ActionKind::Text;
  std::string pattern;       // text with <slot> markers, or the API name
  bool terminal = false;     // ends the dialog once executed
  bool awaits_user = true;   // Text only: hand the floor back to the user

  /// Slot names referenced by the pattern, in order of appearance.
  std::vector<std::string> slots() const;
};

/// Per-step availability bits, one per template.
struct ActionMask {
  std::vector<std::uint8_t> bits;

  ActionMask() = default;
  explicit ActionMask(std::size_t n, bool value = true) : bits(n, value ? 1 : 0) {}

  std::size_t size() const { return bits.size(); }
  bool allowed(std::size_t i) const { return bits[i] != 0; }
  void set(std::size_t i, bool value) { bits[i] = value ? 1 : 0; }
  std::size_t count() const;
  bool any() const { return count() > 0; }

  bool operator==(const ActionMask&) const = default;
};

/// Zeroes masked entries and linearly rescales the rest to sum to one. Falls
/// back to uniform over allowed actions when they carry no mass.
/// Throws std::invalid_argument if every action is masked.
std::vector<double> mask_and_renormalize(std::span<const double> dist,
                                         const ActionMask& mask);

enum class SelectionMode { Greedy, Sample };

/// Greedy picks the lowest-index argmax; Sample draws by inverse CDF.
/// Never returns an action with zero probability.
std::size_t select_action(std::span<const double> dist, SelectionMode mode, Rng& rng);

/// Replaces each <slot> in `pattern` via `lookup`; throws if a slot is absent.
template <typename Lookup>
std::string render_pattern(const std::string& pattern, Lookup&& lookup);

}  // namespace dialogctl

#include <stdexcept>

namespace dialogctl {

template <typename Lookup>
std::string render_pattern(const std::string& pattern, Lookup&& lookup) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '<') {
      const auto close = pattern.find('>', i);
      if (close == std::string::npos) throw std::invalid_argument("bad pattern: " + pattern);
      out += lookup(pattern.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      out += pattern[i++];
    }
  }
  return out;
}

}  // namespace dialogctl
