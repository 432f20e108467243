#pragma once

#include <algorithm>
#include <cmath>

namespace deepctr {

inline constexpr double kProbClip = 1e-12;

inline double clip_prob(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

// Binary cross-entropy of one prediction.
inline double logloss(int label, double p) {
  p = clip_prob(p);
  return label != 0 ? -std::log(p) : -std::log(1.0 - p);
}

// d logloss / d logit through the sigmoid output.
inline double loss_grad(int label, double p) {
  return p - static_cast<double>(label);
}

}  // namespace deepctr
