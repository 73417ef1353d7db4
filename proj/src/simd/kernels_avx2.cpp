#include "kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace mist::simd::detail {

namespace {

inline __m256d poly6(__m256d z, const double* k)
{
    __m256d r = _mm256_set1_pd(k[0]);
    for (int i = 1; i < 6; ++i)
        r = _mm256_fmadd_pd(r, z, _mm256_set1_pd(k[i]));
    return r;
}

inline void sincos4(__m256d x, __m256d& s, __m256d& c)
{
    const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Hi), x);
    r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Mid), r);
    r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Lo), r);
    const __m256d z = _mm256_mul_pd(r, r);

    const __m256d sr = _mm256_fmadd_pd(_mm256_mul_pd(r, z), poly6(z, kSin), r);
    __m256d cr = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0));
    cr = _mm256_fmadd_pd(_mm256_mul_pd(z, z), poly6(z, kCos), cr);

    const __m128i qi = _mm256_cvtpd_epi32(q);
    const __m256d odd = _mm256_cvtepi32_pd(_mm_and_si128(qi, _mm_set1_epi32(1)));
    const __m256d neg_s = _mm256_cvtepi32_pd(_mm_and_si128(qi, _mm_set1_epi32(2)));
    const __m256d neg_c = _mm256_cvtepi32_pd(_mm_and_si128(_mm_add_epi32(qi, _mm_set1_epi32(1)), _mm_set1_epi32(2)));
    const __m256d zero = _mm256_setzero_pd();
    const __m256d swap = _mm256_cmp_pd(odd, zero, _CMP_NEQ_OQ);
    const __m256d sign = _mm256_set1_pd(-0.0);

    s = _mm256_blendv_pd(sr, cr, swap);
    c = _mm256_blendv_pd(cr, sr, swap);
    s = _mm256_xor_pd(s, _mm256_and_pd(_mm256_cmp_pd(neg_s, zero, _CMP_NEQ_OQ), sign));
    c = _mm256_xor_pd(c, _mm256_and_pd(_mm256_cmp_pd(neg_c, zero, _CMP_NEQ_OQ), sign));
}

void step_block(const SplitStepPlan& plan, double* phi, double* n, long long first_step, long long steps)
{
    const bool forward = steps >= 0;
    const long long count = forward ? steps : -steps;
    const __m256d a = _mm256_set1_pd(forward ? plan.drift : -plan.drift);
    const __m256d b = _mm256_set1_pd(forward ? plan.kick : -plan.kick);
    __m256d p = _mm256_loadu_pd(phi);
    __m256d m = _mm256_loadu_pd(n);
    for (long long i = 0; i < count; ++i) {
        long long s = forward ? first_step + i : first_step - 1 - i;
        long long idx = wrap_index(s, plan.table_len);
        const __m256d C = _mm256_set1_pd(plan.cos_table[idx]);
        const __m256d S = _mm256_set1_pd(plan.sin_table[idx]);
        p = _mm256_fmadd_pd(a, m, p);
        __m256d sp, cp;
        sincos4(p, sp, cp);
        const __m256d force = _mm256_fmsub_pd(cp, S, _mm256_mul_pd(sp, C));
        m = _mm256_fmadd_pd(b, force, m);
        p = _mm256_fmadd_pd(a, m, p);
    }
    _mm256_storeu_pd(phi, p);
    _mm256_storeu_pd(n, m);
}

}  // namespace

void split_step_avx2(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                     long long steps)
{
    std::size_t l = 0;
    for (; l + 4 <= lanes; l += 4)
        step_block(plan, phi + l, n + l, first_step, steps);
    if (l < lanes) {
        double tp[4] = {0, 0, 0, 0}, tn[4] = {0, 0, 0, 0};
        std::copy(phi + l, phi + lanes, tp);
        std::copy(n + l, n + lanes, tn);
        step_block(plan, tp, tn, first_step, steps);
        std::copy(tp, tp + (lanes - l), phi + l);
        std::copy(tn, tn + (lanes - l), n + l);
    }
}

void sincos_avx2(const double* x, double* s, double* c, std::size_t count)
{
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m256d sv, cv;
        sincos4(_mm256_loadu_pd(x + i), sv, cv);
        _mm256_storeu_pd(s + i, sv);
        _mm256_storeu_pd(c + i, cv);
    }
    if (i < count) {
        double tx[4] = {0, 0, 0, 0}, ts[4], tc[4];
        std::copy(x + i, x + count, tx);
        __m256d sv, cv;
        sincos4(_mm256_loadu_pd(tx), sv, cv);
        _mm256_storeu_pd(ts, sv);
        _mm256_storeu_pd(tc, cv);
        std::copy(ts, ts + (count - i), s + i);
        std::copy(tc, tc + (count - i), c + i);
    }
}

}  // namespace mist::simd::detail
