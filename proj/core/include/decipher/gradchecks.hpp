#pragma once

// Ready-made gradient-check fragments: each differentiable component is
// wrapped as a small parameterized scalar loss and compared against central
// finite differences in 64-bit precision.

#include <cstdint>
#include <vector>

#include "decipher/tensor.hpp"

namespace decipher {

// Six component fragments: linear layer, LSTM cell, GRU cell, one attention
// decoder step, the posterior/prior/KL composite, and one latent-conditioned
// decoder step. Miniature dimensions keep the whole suite under a minute.
std::vector<GradCheckReport> gradcheck_suite(std::uint64_t seed, double tolerance = 1e-4);

// Full-model losses on one miniature example for both models (teacher-forced
// decoding so the token path is fixed).
std::vector<GradCheckReport> gradcheck_end_to_end(std::uint64_t seed,
                                                  double tolerance = 1e-4);

}  // namespace decipher
