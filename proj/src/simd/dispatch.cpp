#include "kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace mist::simd {

const char* isa_name(Isa isa)
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "?";
}

bool isa_supported(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(MIST_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(MIST_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Isa best_isa()
{
    if (isa_supported(Isa::Avx2))
        return Isa::Avx2;
    if (isa_supported(Isa::Neon))
        return Isa::Neon;
    return Isa::Scalar;
}

Isa parse_isa(const std::string& name)
{
    if (name == "scalar")
        return Isa::Scalar;
    if (name == "avx2")
        return Isa::Avx2;
    if (name == "neon")
        return Isa::Neon;
    if (name == "auto" || name.empty())
        return best_isa();
    throw std::invalid_argument("unknown SIMD target '" + name + "' (scalar, avx2, neon, auto)");
}

Isa active_isa()
{
    const char* env = std::getenv("MIST_SIMD");
    Isa isa = best_isa();
    if (env) {
        try {
            isa = parse_isa(env);
        } catch (const std::invalid_argument&) {
            isa = best_isa();
        }
    }
    return isa_supported(isa) ? isa : Isa::Scalar;
}

void split_step(Isa isa, const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                long long steps)
{
    if (plan.table_len <= 0 || !plan.cos_table || !plan.sin_table)
        throw std::invalid_argument("split_step: empty drive table");
    if (!isa_supported(isa))
        isa = Isa::Scalar;
    switch (isa) {
#if defined(MIST_HAVE_AVX2)
    case Isa::Avx2:
        detail::split_step_avx2(plan, phi, n, lanes, first_step, steps);
        return;
#endif
#if defined(MIST_HAVE_NEON)
    case Isa::Neon:
        detail::split_step_neon(plan, phi, n, lanes, first_step, steps);
        return;
#endif
    default:
        detail::split_step_scalar(plan, phi, n, lanes, first_step, steps);
    }
}

void sincos(Isa isa, const double* x, double* s, double* c, std::size_t count)
{
    if (!isa_supported(isa))
        isa = Isa::Scalar;
    switch (isa) {
#if defined(MIST_HAVE_AVX2)
    case Isa::Avx2:
        detail::sincos_avx2(x, s, c, count);
        return;
#endif
#if defined(MIST_HAVE_NEON)
    case Isa::Neon:
        detail::sincos_neon(x, s, c, count);
        return;
#endif
    default:
        detail::sincos_scalar(x, s, c, count);
    }
}

}  // namespace mist::simd
