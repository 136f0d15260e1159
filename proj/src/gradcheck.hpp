#ifndef STK_GRADCHECK_HPP
#define STK_GRADCHECK_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "tape.hpp"

namespace stk {

// Builds a scalar loss over the given parameter leaves. The builder is called
// repeatedly with perturbed parameter values, so it must be a pure function
// of the tape and the leaves.
using GraphBuilder =
    std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
};

// Central finite differences against reverse-mode gradients, entry by entry.
// Relative error uses max(|ad|, |fd|, 0.01) as the denominator so that
// near-zero gradients are compared absolutely at 100x the tolerance.
// Above max_entries_per_param, a seeded random subset of entries is checked.
GradCheckResult grad_check(const GraphBuilder& build, const std::vector<Tensor>& params,
                           double eps = 1e-5,
                           std::size_t max_entries_per_param = 10000,
                           std::uint64_t subset_seed = 1);

}  // namespace stk

#endif
