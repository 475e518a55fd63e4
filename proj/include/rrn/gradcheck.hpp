#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rrn/tape.hpp"

namespace rrn::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  std::size_t entries = 0;
  // Location of the worst entry.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  [[nodiscard]] bool passed() const { return max_rel_err < tolerance; }
};

/// Maps leaf variables to an output. Non-scalar outputs are reduced with a
/// fixed random weighting so the full Jacobian is exercised.
using Function = std::function<tg::Var<double>(const std::vector<tg::Var<double>>&)>;

/// Central differences with step `step`. Relative error per entry is
/// |a - n| / max(|a|, |n|, 1e-6). `max_entries` > 0 samples that many
/// entries per input instead of sweeping all of them.
CheckResult check(const std::string& name, const std::vector<tg::Tensor<double>>& inputs, const Function& fn,
                  double tolerance, std::uint64_t seed, std::size_t max_entries = 0, double step = kStep);

/// Every differentiable op and loss.
std::vector<CheckResult> op_suite(std::uint64_t seed);

/// Toy network at 16x16 with pyramid bins {1, 2}, through the full
/// objective with the boundary terms on.
CheckResult end_to_end(std::uint64_t seed);

}  // namespace rrn::gradcheck
