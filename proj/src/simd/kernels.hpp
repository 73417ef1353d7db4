#pragma once

#include <cstddef>

#include "mist/simd.hpp"

namespace mist::simd::detail {

void split_step_scalar(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                       long long steps);
void sincos_scalar(const double* x, double* s, double* c, std::size_t count);

#if defined(MIST_HAVE_AVX2)
void split_step_avx2(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                     long long steps);
void sincos_avx2(const double* x, double* s, double* c, std::size_t count);
#endif

#if defined(MIST_HAVE_NEON)
void split_step_neon(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                     long long steps);
void sincos_neon(const double* x, double* s, double* c, std::size_t count);
#endif

// Cody-Waite split of π/2 and minimax coefficients on [−π/4, π/4] (Cephes).
inline constexpr double kPio2Hi = 1.57079625129699707031e+00;
inline constexpr double kPio2Mid = 7.54978941586159635335e-08;
inline constexpr double kPio2Lo = 5.39030285815811905665e-15;
inline constexpr double kTwoOverPi = 6.36619772367581382433e-01;
inline constexpr double kSin[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8, 2.75573136213857245213e-6,
                                   -1.98412698295895385996e-4, 8.33333333332211858878e-3, -1.66666666666666307295e-1};
inline constexpr double kCos[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9, -2.75573141792967388112e-7,
                                   2.48015872888517045348e-5, -1.38888888888730564116e-3, 4.16666666666665929218e-2};

inline long long wrap_index(long long s, long long len)
{
    long long r = s % len;
    return r < 0 ? r + len : r;
}

}  // namespace mist::simd::detail
