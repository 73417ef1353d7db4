#pragma once

#include <cstddef>
#include <string>

namespace mist::simd {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_isa();
// MIST_SIMD = scalar | avx2 | neon | auto (default auto). Unsupported requests fall back to scalar.
Isa active_isa();
Isa parse_isa(const std::string& name);

// One Strang step of the driven pendulum per entry of the periodic drive table:
//   φ += drift·n;  n += kick·(cos φ · S[s] − sin φ · C[s]);  φ += drift·n
// where s = step mod table_len. Negative `steps` runs backward in time from
// `first_step`, undoing forward steps exactly in exact arithmetic.
struct SplitStepPlan {
    const double* cos_table = nullptr;  // C(t_s) = Σ A_k cos(k ω t_s)
    const double* sin_table = nullptr;  // S(t_s) = Σ A_k sin(k ω t_s)
    long long table_len = 0;
    double drift = 0;
    double kick = 0;
};

void split_step(Isa isa, const SplitStepPlan& plan, double* phi, double* n, std::size_t lanes, long long first_step,
                long long steps);

void sincos(Isa isa, const double* x, double* s, double* c, std::size_t count);

}  // namespace mist::simd
