#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace stk {

namespace {

double eval_loss(const GraphBuilder& build, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Tape::NodeId> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p, /*requires_grad=*/false));
  const Tape::NodeId loss = build(tape, leaves);
  return tape.value(loss).data[0];
}

}  // namespace

GradCheckResult grad_check(const GraphBuilder& build, const std::vector<Tensor>& params,
                           double eps, std::size_t max_entries_per_param,
                           std::uint64_t subset_seed) {
  if (eps <= 0.0) fail_validation("grad_check: eps must be > 0");

  Tape tape;
  std::vector<Tape::NodeId> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p, /*requires_grad=*/true));
  const Tape::NodeId loss = build(tape, leaves);
  if (tape.value(loss).numel() != 1) fail_validation("grad_check: loss is not scalar");
  tape.backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Tape::NodeId leaf : leaves) analytic.push_back(tape.grad(leaf));

  Rng subset_rng(subset_seed);
  GradCheckResult result;
  std::vector<Tensor> work = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    std::vector<std::size_t> entries;
    const std::size_t n = params[pi].numel();
    if (n <= max_entries_per_param) {
      entries.resize(n);
      for (std::size_t i = 0; i < n; ++i) entries[i] = i;
    } else {
      for (std::size_t i = 0; i < max_entries_per_param; ++i)
        entries.push_back(subset_rng.below(n));
    }
    for (std::size_t i : entries) {
      const double orig = work[pi].data[i];
      const double h = eps * std::max(1.0, std::abs(orig));
      work[pi].data[i] = orig + h;
      const double fp = eval_loss(build, work);
      work[pi].data[i] = orig - h;
      const double fm = eval_loss(build, work);
      work[pi].data[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = analytic[pi].data[i];
      const double denom = std::max({std::abs(ad), std::abs(fd), 0.01});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(ad - fd) / denom);
      ++result.entries_checked;
    }
  }
  return result;
}

}  // namespace stk
