#include "gpcn/adam.hpp"

#include <cmath>

namespace gpcn {

AdamState make_adam_state(std::span<const Matrix> params, AdamOptions options) {
  AdamState s{options, {}};
  s.slots.reserve(params.size());
  for (const Matrix& p : params)
    s.slots.push_back({Matrix(p.rows(), p.cols()), Matrix(p.rows(), p.cols()), 0});
  return s;
}

void adam_update(AdamState& state, std::size_t index, Matrix& p, const Matrix& g) {
  const AdamOptions& o = state.options;
  AdamSlot& slot = state.slots.at(index);
  if (!p.same_shape(g) || !p.same_shape(slot.first_moment))
    throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(index));
  ++slot.steps;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(slot.steps));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(slot.steps));
  auto pv = p.values();
  auto gv = g.values();
  auto mv = slot.first_moment.values();
  auto vv = slot.second_moment.values();
  for (std::size_t k = 0; k < pv.size(); ++k) {
    mv[k] = o.beta1 * mv[k] + (1.0 - o.beta1) * gv[k];
    vv[k] = o.beta2 * vv[k] + (1.0 - o.beta2) * gv[k] * gv[k];
    const double m_hat = mv[k] / c1;
    const double v_hat = vv[k] / c2;
    pv[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

void adam_step(AdamState& state, std::span<Matrix> params, std::span<const Matrix> grads,
               std::span<const char> active) {
  if (params.size() != grads.size() || params.size() != state.slots.size())
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  if (!active.empty() && active.size() != params.size())
    throw DimensionError("adam_step: mask length differs from parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!active.empty() && !active[i]) continue;
    adam_update(state, i, params[i], grads[i]);
  }
}

}  // namespace gpcn
