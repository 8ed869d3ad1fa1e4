#pragma once

#include "dialogctl/model.hpp"

namespace dialogctl {

enum class Direction { Descend, Ascend };

/// Running averages of squared gradients and squared updates.
struct AdaDeltaState {
  double rho = 0.95;
  double eps = 1e-6;
  ModelParams sq_grad;
  ModelParams sq_delta;

  AdaDeltaState() = default;
  explicit AdaDeltaState(const ModelParams& like, double rho = 0.95,
                         double eps = 1e-6);
};

/// One AdaDelta step in place:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   delta    = -sign * sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) delta^2
///   params  += delta
/// where sign is +1 for descent and -1 for ascent.
void adadelta_apply(AdaDeltaState& opt, ModelParams& params,
                    const ModelParams& grads, Direction direction);

}  // namespace dialogctl
