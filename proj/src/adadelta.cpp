#include "dialogctl/adadelta.hpp"

#include <cmath>

namespace dialogctl {

AdaDeltaState::AdaDeltaState(const ModelParams& like, double rho_, double eps_)
    : rho(rho_), eps(eps_), sq_grad(zeros_like(like)), sq_delta(zeros_like(like)) {}

void adadelta_apply(AdaDeltaState& opt, ModelParams& params,
                    const ModelParams& grads, Direction direction) {
  check_same_shapes(params, grads);
  check_same_shapes(params, opt.sq_grad);
  check_same_shapes(params, opt.sq_delta);

  const double sign = direction == Direction::Descend ? 1.0 : -1.0;
  const double rho = opt.rho;
  const double eps = opt.eps;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& w = params.tensors[t].values;
    const auto& g = grads.tensors[t].values;
    auto& eg = opt.sq_grad.tensors[t].values;
    auto& ed = opt.sq_delta.tensors[t].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
      const double delta = -sign * std::sqrt(ed[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
      ed[i] = rho * ed[i] + (1.0 - rho) * delta * delta;
      w[i] += delta;
    }
  }
}

}  // namespace dialogctl
