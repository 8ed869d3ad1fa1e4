#include "dialogctl/actions.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dialogctl {

std::vector<std::string> ActionTemplate::slots() const {
  std::vector<std::string> out;
  if (kind != ActionKind::Text) return out;
  std::size_t i = 0;
  while ((i = pattern.find('<', i)) != std::string::npos) {
    const auto close = pattern.find('>', i);
    if (close == std::string::npos) break;
    out.push_back(pattern.substr(i + 1, close - i - 1));
    i = close + 1;
  }
  return out;
}

std::size_t ActionMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<double> mask_and_renormalize(std::span<const double> dist,
                                         const ActionMask& mask) {
  if (dist.size() != mask.size())
    throw std::invalid_argument("distribution and mask differ in length");
  const std::size_t allowed = mask.count();
  if (allowed == 0) throw std::invalid_argument("every action is masked");

  std::vector<double> out(dist.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (mask.allowed(i)) mass += dist[i];

  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!mask.allowed(i)) continue;
    out[i] = mass > 0.0 ? dist[i] / mass : 1.0 / static_cast<double>(allowed);
  }
  return out;
}

std::size_t select_action(std::span<const double> dist, SelectionMode mode, Rng& rng) {
  if (dist.empty()) throw std::invalid_argument("empty distribution");
  if (mode == SelectionMode::Greedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
      if (dist[i] > dist[best]) best = i;
    return best;
  }

  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = dist.size();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last_positive = i;
    cumulative += dist[i];
    if (u < cumulative) return i;
  }
  // Rounding left the total just below u.
  if (last_positive == dist.size()) throw std::invalid_argument("distribution has no mass");
  return last_positive;
}

}  // namespace dialogctl
