#include "kernels.hpp"

#include <arm_neon.h>

namespace mist::simd::detail {

namespace {

inline float64x2_t poly6(float64x2_t z, const double* k)
{
    float64x2_t r = vdupq_n_f64(k[0]);
    for (int i = 1; i < 6; ++i)
        r = vfmaq_f64(vdupq_n_f64(k[i]), r, z);
    return r;
}

inline void sincos2(float64x2_t x, float64x2_t& s, float64x2_t& c)
{
    const float64x2_t q = vrndnq_f64(vmulq_n_f64(x, kTwoOverPi));
    float64x2_t r = vfmsq_f64(x, q, vdupq_n_f64(kPio2Hi));
    r = vfmsq_f64(r, q, vdupq_n_f64(kPio2Mid));
    r = vfmsq_f64(r, q, vdupq_n_f64(kPio2Lo));
    const float64x2_t z = vmulq_f64(r, r);

    const float64x2_t sr = vfmaq_f64(r, vmulq_f64(r, z), poly6(z, kSin));
    float64x2_t cr = vfmsq_f64(vdupq_n_f64(1.0), vdupq_n_f64(0.5), z);
    cr = vfmaq_f64(cr, vmulq_f64(z, z), poly6(z, kCos));

    const int64x2_t qi = vcvtq_s64_f64(q);
    const uint64x2_t swap = vtstq_s64(qi, vdupq_n_s64(1));
    const uint64x2_t neg_s = vtstq_s64(qi, vdupq_n_s64(2));
    const uint64x2_t neg_c = vtstq_s64(vaddq_s64(qi, vdupq_n_s64(1)), vdupq_n_s64(2));
    const uint64x2_t sign = vdupq_n_u64(0x8000000000000000ULL);

    float64x2_t sv = vbslq_f64(swap, cr, sr);
    float64x2_t cv = vbslq_f64(swap, sr, cr);
    s = vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(sv), vandq_u64(neg_s, sign)));
    c = vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(cv), vandq_u64(neg_c, sign)));
}

void step_block(const SplitStepPlan& plan, double* phi, double* n, long long first_step, long long steps)
{
    const bool forward = steps >= 0;
    const long long count = forward ? steps : -steps;
    const float64x2_t a = vdupq_n_f64(forward ? plan.drift : -plan.drift);
    const float64x2_t b = vdupq_n_f64(forward ? plan.kick : -plan.kick);
    float64x2_t p = vld1q_f64(phi);
    float64x2_t m = vld1q_f64(n);
    for (long long i = 0; i < count; ++i) {
        long long s = forward ? first_step + i : first_step - 1 - i;
        long long idx = wrap_index(s, plan.table_len);
        const float64x2_t C = vdupq_n_f64(plan.cos_table[idx]);
        const float64x2_t S = vdupq_n_f64(plan.sin_table[idx]);
        p = vfmaq_f64(p, a, m);
        float64x2_t sp, cp;
        sincos2(p, sp, cp);
        const float64x2_t force = vfmsq_f64(vmulq_f64(cp, S), sp, C);
        m = vfmaq_f64(m, b, force);
        p = vfmaq_f64(p, a, m);
    }
    vst1q_f64(phi, p);
    vst1q_f64(n, m);
}

}  // namespace

void split_step_neon(const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                     long long steps)
{
    std::size_t l = 0;
    for (; l + 2 <= lanes; l += 2)
        step_block(plan, phi + l, n + l, first_step, steps);
    if (l < lanes) {
        double tp[2] = {phi[l], 0}, tn[2] = {n[l], 0};
        step_block(plan, tp, tn, first_step, steps);
        phi[l] = tp[0];
        n[l] = tn[0];
    }
}

void sincos_neon(const double* x, double* s, double* c, std::size_t count)
{
    std::size_t i = 0;
    for (; i + 2 <= count; i += 2) {
        float64x2_t sv, cv;
        sincos2(vld1q_f64(x + i), sv, cv);
        vst1q_f64(s + i, sv);
        vst1q_f64(c + i, cv);
    }
    if (i < count) {
        double tx[2] = {x[i], 0}, ts[2], tc[2];
        float64x2_t sv, cv;
        sincos2(vld1q_f64(tx), sv, cv);
        vst1q_f64(ts, sv);
        vst1q_f64(tc, cv);
        s[i] = ts[0];
        c[i] = tc[0];
    }
}

}  // namespace mist::simd::detail
