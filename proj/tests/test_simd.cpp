#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "mist/classical.hpp"
#include "mist/simd.hpp"

using namespace mist;

namespace {

std::vector<simd::Isa> vector_isas()
{
    std::vector<simd::Isa> out;
    for (simd::Isa isa : {simd::Isa::Avx2, simd::Isa::Neon})
        if (simd::isa_supported(isa))
            out.push_back(isa);
    return out;
}

}  // namespace

TEST_CASE("vector sincos matches libm")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    std::vector<double> x(4099);
    for (auto& v : x)
        v = u(rng);
    x[0] = 0.0;
    x[1] = units::pi / 4;
    x[2] = -units::pi / 2;
    std::vector<double> s0(x.size()), c0(x.size());
    simd::sincos(simd::Isa::Scalar, x.data(), s0.data(), c0.data(), x.size());
    for (simd::Isa isa : vector_isas()) {
        std::vector<double> s(x.size()), c(x.size());
        simd::sincos(isa, x.data(), s.data(), c.data(), x.size());
        double worst = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max({worst, std::abs(s[i] - s0[i]), std::abs(c[i] - c0[i])});
        CAPTURE(simd::isa_name(isa));
        CHECK(worst < 1e-14);
    }
}

TEST_CASE("vector split-step matches the scalar reference lane by lane")
{
    CircuitParams p;
    HarmonicSeries s = harmonic_coefficients(CouplingKind::Transverse, p, normal_modes(p), 300.0);
    SplitStepper st(s, 256);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t lanes : {1u, 3u, 4u, 7u, 33u}) {
        std::vector<double> phi(lanes), n(lanes);
        for (std::size_t l = 0; l < lanes; ++l) {
            phi[l] = 3.0 * u(rng);
            n[l] = 10.0 * u(rng);
        }
        auto phi_ref = phi, n_ref = n;
        // a few periods keep chaotic lanes from amplifying last-bit differences
        st.advance(phi_ref.data(), n_ref.data(), lanes, 5, 3 * 256, simd::Isa::Scalar);
        for (simd::Isa isa : vector_isas()) {
            auto phi_v = phi, n_v = n;
            st.advance(phi_v.data(), n_v.data(), lanes, 5, 3 * 256, isa);
            for (std::size_t l = 0; l < lanes; ++l) {
                CHECK(phi_v[l] == doctest::Approx(phi_ref[l]).epsilon(1e-11));
                CHECK(n_v[l] == doctest::Approx(n_ref[l]).epsilon(1e-11));
            }
            // backward steps agree as well
            st.advance(phi_v.data(), n_v.data(), lanes, 5 + 3 * 256, -3 * 256, isa);
            for (std::size_t l = 0; l < lanes; ++l) {
                CHECK(std::abs(phi_v[l] - phi[l]) < 1e-9);
                CHECK(std::abs(n_v[l] - n[l]) < 1e-9);
            }
        }
    }
}

TEST_CASE("ISA selection")
{
    CHECK(simd::parse_isa("scalar") == simd::Isa::Scalar);
    CHECK(simd::parse_isa("auto") == simd::best_isa());
    CHECK_THROWS_AS(simd::parse_isa("sse9"), std::invalid_argument);
    CHECK(simd::isa_supported(simd::Isa::Scalar));
    CHECK(simd::isa_supported(simd::best_isa()));

    setenv("MIST_SIMD", "scalar", 1);
    CHECK(simd::active_isa() == simd::Isa::Scalar);
    setenv("MIST_SIMD", "bogus", 1);
    CHECK(simd::active_isa() == simd::best_isa());
    unsetenv("MIST_SIMD");
    CHECK(simd::active_isa() == simd::best_isa());

    // an unsupported target falls back to the scalar kernel, bit for bit
    for (simd::Isa isa : {simd::Isa::Avx2, simd::Isa::Neon})
        if (!simd::isa_supported(isa)) {
            double table_c[2] = {0.3, -0.2}, table_s[2] = {0.1, 0.4};
            simd::SplitStepPlan plan{table_c, table_s, 2, 0.01, 0.02};
            double phi_a = 0.5, n_a = 1.0, phi_b = 0.5, n_b = 1.0;
            simd::split_step(isa, plan, &phi_a, &n_a, 1, 0, 100);
            simd::split_step(simd::Isa::Scalar, plan, &phi_b, &n_b, 1, 0, 100);
            CHECK(phi_a == phi_b);
            CHECK(n_a == n_b);
        }
}
