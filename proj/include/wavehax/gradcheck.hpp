#ifndef WAVEHAX_GRADCHECK_HPP
#define WAVEHAX_GRADCHECK_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "wavehax/tensor.hpp"

namespace wavehax::ad {

struct GradCheckResult {
    bool pass = true;
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

/// Central finite-difference check: f must build a fresh scalar loss from the
/// given leaves on every call. When max_checks_per_tensor > 0 only a seeded
/// random subset of each leaf's elements is probed.
GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> leaves, double eps = 1e-4,
                           double tol = 1e-4, int max_checks_per_tensor = 0,
                           std::uint64_t seed = 0);

}  // namespace wavehax::ad

#endif
