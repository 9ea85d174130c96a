#include "wavehax/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace wavehax::ad {

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> leaves, double eps, double tol,
                           int max_checks_per_tensor, std::uint64_t seed) {
    for (auto& leaf : leaves) {
        leaf.impl()->requires_grad = true;
        leaf.zero_grad();
    }
    Tensor loss = f(leaves);
    backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto& leaf : leaves) analytic.push_back(leaf.grad());

    std::mt19937_64 rng(seed);
    GradCheckResult result;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto& leaf = leaves[li];
        std::vector<std::size_t> probe(leaf.numel());
        std::iota(probe.begin(), probe.end(), 0);
        if (max_checks_per_tensor > 0 &&
            probe.size() > static_cast<std::size_t>(max_checks_per_tensor)) {
            std::shuffle(probe.begin(), probe.end(), rng);
            probe.resize(static_cast<std::size_t>(max_checks_per_tensor));
        }
        for (std::size_t i : probe) {
            const double orig = leaf.values()[i];
            leaf.values()[i] = orig + eps;
            const double up = f(leaves).item();
            leaf.values()[i] = orig - eps;
            const double down = f(leaves).item();
            leaf.values()[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[li][i];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-3});
            result.max_rel_err = std::max(result.max_rel_err, rel);
            ++result.checked;
        }
    }
    result.pass = result.max_rel_err < tol;
    return result;
}

}  // namespace wavehax::ad
