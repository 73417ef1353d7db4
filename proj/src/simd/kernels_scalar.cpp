#include "kernels.hpp"

#include <cmath>

namespace mist::simd::detail {

void split_step_scalar(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                       long long steps)
{
    const bool forward = steps >= 0;
    const long long count = forward ? steps : -steps;
    const double a = forward ? plan.drift : -plan.drift;
    const double b = forward ? plan.kick : -plan.kick;
    for (long long i = 0; i < count; ++i) {
        long long s = forward ? first_step + i : first_step - 1 - i;
        long long idx = wrap_index(s, plan.table_len);
        const double C = plan.cos_table[idx], S = plan.sin_table[idx];
        for (std::size_t l = 0; l < lanes; ++l) {
            double p = phi[l] + a * n[l];
            double q = n[l] + b * (std::cos(p) * S - std::sin(p) * C);
            phi[l] = p + a * q;
            n[l] = q;
        }
    }
}

void sincos_scalar(const double* x, double* s, double* c, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
    }
}

}  // namespace mist::simd::detail
