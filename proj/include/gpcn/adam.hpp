#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpcn/linalg.hpp"

namespace gpcn {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Moment estimates for one parameter tensor. The step count is kept per
// parameter so that bias correction stays exact when only a subset of
// parameters is updated (level-masked training).
struct AdamSlot {
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t steps = 0;
};

struct AdamState {
  AdamOptions options;
  std::vector<AdamSlot> slots;
};

AdamState make_adam_state(std::span<const Matrix> params, AdamOptions options = {});

// Bias-corrected update of parameter `index` alone.
void adam_update(AdamState& state, std::size_t index, Matrix& param, const Matrix& grad);

// One bias-corrected ADAM update. `active`, when non-empty, selects which
// parameters are touched; inactive parameters and their moments are left
// bit-identical.
void adam_step(AdamState& state, std::span<Matrix> params, std::span<const Matrix> grads,
               std::span<const char> active = {});

}  // namespace gpcn
