#include "hardneg/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hardneg {

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>& caps) {
  if (weights.size() != caps.size()) throw std::invalid_argument("apportion: weights/caps size mismatch");
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n, 0);
  const std::size_t room_total = std::accumulate(caps.begin(), caps.end(), std::size_t{0});
  std::size_t remaining = std::min(total, room_total);

  while (remaining > 0) {
    std::vector<std::size_t> open;
    double wsum = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (out[i] < caps[i]) {
        open.push_back(i);
        wsum += std::max(0.0, weights[i]);
      }
    auto weight = [&](std::size_t i) { return wsum > 0 ? std::max(0.0, weights[i]) / wsum : 1.0 / open.size(); };

    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t given = 0;
    for (auto i : open) {
      const double share = static_cast<double>(remaining) * weight(i);
      auto whole = static_cast<std::size_t>(std::floor(share));
      whole = std::min(whole, caps[i] - out[i]);
      out[i] += whole;
      given += whole;
      if (out[i] < caps[i]) rem.emplace_back(share - std::floor(share), i);
    }
    remaining -= given;
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [frac, i] : rem) {
      if (remaining == 0) break;
      ++out[i];
      --remaining;
    }
  }
  return out;
}

}  // namespace hardneg
