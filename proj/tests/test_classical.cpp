#include <doctest.h>

#include <cmath>
#include <random>

#include <gsl/gsl_sf_bessel.h>

#include "mist/bessel.hpp"
#include "mist/classical.hpp"

using namespace mist;

namespace {

constexpr double kTwoPi = units::two_pi;

HarmonicSeries table_series(CouplingKind kind, double n_bar, double flux = 0.0)
{
    CircuitParams p;
    p.flux_ext = flux;
    return harmonic_coefficients(kind, p, normal_modes(p), n_bar);
}

}  // namespace

TEST_CASE("Miller recurrence agrees with GSL Bessel functions")
{
    double worst = 0;
    for (double x : {0.0, 1e-6, 0.3, 0.547, 1.0, 2.5, 7.0, 13.3, 25.0, 49.9})
        for (int n = -40; n <= 40; ++n)
            worst = std::max(worst, std::abs(bessel_j(n, x) - gsl_sf_bessel_Jn(n, x)));
    CHECK(worst < 1e-13);
    for (double x : {-3.1, -0.2}) {
        auto seq = bessel_j_sequence(10, x);
        for (int n = 0; n <= 10; ++n)
            CHECK(seq[n] == doctest::Approx(gsl_sf_bessel_Jn(n, x)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("drive amplitude 2 phi_c sqrt(n) at 300 photons and exact odd-harmonic zeros")
{
    const double eta = 0.0632 * std::sqrt(300.0);
    CHECK(eta == doctest::Approx(1.0947).epsilon(1e-4));
    CircuitParams p;
    HarmonicSeries s = harmonic_series(CouplingKind::CosPhi, eta, 0.0, p.E_J, p.E_Cq, p.omega_d);
    CHECK(s.A(1) == 0.0);
    CHECK(s.A(3) == 0.0);
    CHECK(s.A(0) / s.two_E_J == doctest::Approx(gsl_sf_bessel_J0(eta)).epsilon(1e-13));
}

TEST_CASE("all odd harmonics vanish exactly at zero flux in the model series")
{
    for (double nb : {1.0, 50.0, 300.0, 750.0}) {
        HarmonicSeries s = table_series(CouplingKind::CosPhi, nb);
        for (int k = -s.n_max; k <= s.n_max; ++k)
            if (k % 2 != 0)
                CHECK(s.A(k) == 0.0);
    }
    HarmonicSeries broken = table_series(CouplingKind::CosPhi, 300.0, -0.04);
    CHECK(broken.A(1) != 0.0);
}

TEST_CASE("matched transverse drive has the same static harmonic when omega_d equals omega_c")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    p.omega_d = m.omega_c_pol;
    HarmonicSeries c = harmonic_coefficients(CouplingKind::CosPhi, p, m, 300.0);
    HarmonicSeries t = harmonic_coefficients(CouplingKind::Transverse, p, m, 300.0);
    CHECK(t.eta == doctest::Approx(c.eta).epsilon(1e-14));
    CHECK(t.A(0) == doctest::Approx(c.A(0)).epsilon(1e-14));
}

TEST_CASE("Jacobi-Anger resummation reproduces the closed-form drive")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CircuitParams p;
    for (double fbar : {0.0, 0.37}) {
        const double eta = 1.7;
        HarmonicSeries s = harmonic_series(CouplingKind::CosPhi, eta, fbar, p.E_J, p.E_Cq, p.omega_d);
        HarmonicSeries tr = harmonic_series(CouplingKind::Transverse, eta, 0.0, p.E_J, p.E_Cq, p.omega_d);
        double worst = 0, worst_t = 0;
        for (int i = 0; i < 100; ++i) {
            const double phi = kTwoPi * (u(rng) - 0.5);
            const double t = 10.0 * u(rng) * s.period();
            const double th = kTwoPi * p.omega_d * t;
            const double closed = 2 * p.E_J * std::cos(eta * std::cos(th) + fbar) * std::cos(phi);
            worst = std::max(worst, std::abs(drive_potential(s, phi, t) - closed));
            const double closed_t = 2 * p.E_J * std::cos(phi - eta * std::sin(th));
            worst_t = std::max(worst_t, std::abs(drive_potential(tr, phi, t) - closed_t));
        }
        CHECK(worst < 1e-10);
        CHECK(worst_t < 1e-10);
    }
}

TEST_CASE("cos phi drive at zero flux repeats every half period")
{
    HarmonicSeries s = table_series(CouplingKind::CosPhi, 300.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double phi = kTwoPi * u(rng), t = s.period() * u(rng);
        CHECK(std::abs(drive_potential(s, phi, t) - drive_potential(s, phi, t + s.period() / 2)) < 1e-12);
    }
}

TEST_CASE("separatrix widths")
{
    CircuitParams p;
    HarmonicSeries s0 = harmonic_series(CouplingKind::CosPhi, 0.0, 0.0, p.E_J, p.E_Cq, p.omega_d);
    auto sx0 = separatrices(s0, 2);
    REQUIRE(sx0.size() == 1);
    CHECK(sx0[0].width == doctest::Approx(std::sqrt(4 * p.E_J / p.E_Cq)).epsilon(1e-14));
    CHECK(sx0[0].width == doctest::Approx(14.7).epsilon(0.01));

    HarmonicSeries s = table_series(CouplingKind::Transverse, 300.0);
    auto sx = separatrices(s, 3);
    for (const auto& a : sx)
        for (const auto& b : sx)
            if (std::abs(s.A(a.m)) > std::abs(s.A(b.m)))
                CHECK(a.width > b.width);
    for (const auto& a : sx)
        CHECK(a.width * a.width / std::abs(s.A(a.m)) == doctest::Approx(2.0 / p.E_Cq).epsilon(1e-12));
}

TEST_CASE("Chirikov margins against an independent GSL evaluation")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    const double wp = std::sqrt(16 * p.E_J * p.E_Cq);
    CHECK(chirikov_margin(table_series(CouplingKind::CosPhi, 0.0), p).ratio ==
          doctest::Approx(7.294 / 2.156).epsilon(0.002));
    for (double nb : {10.0, 177.0, 400.0, 750.0}) {
        HarmonicSeries c = harmonic_coefficients(CouplingKind::CosPhi, p, m, nb);
        double ref = (p.omega_d / wp) /
                     (std::sqrt(std::abs(gsl_sf_bessel_J0(c.eta))) + std::sqrt(std::abs(gsl_sf_bessel_Jn(2, c.eta))));
        CHECK(chirikov_margin(c, p).ratio == doctest::Approx(ref).epsilon(1e-12));
        HarmonicSeries t = harmonic_coefficients(CouplingKind::Transverse, p, m, nb);
        double ref_t = (p.omega_d / (2 * wp)) /
                       (std::sqrt(std::abs(gsl_sf_bessel_J0(t.eta))) + std::sqrt(std::abs(gsl_sf_bessel_J1(t.eta))));
        CHECK(chirikov_margin(t, p).ratio == doctest::Approx(ref_t).epsilon(1e-12));
    }
}

TEST_CASE("Chirikov margin is invariant under a global energy rescaling")
{
    CircuitParams p, q;
    q.E_J *= 3.7;
    q.E_Cq *= 3.7;
    q.omega_d *= 3.7;
    for (auto kind : {CouplingKind::CosPhi, CouplingKind::Transverse}) {
        HarmonicSeries a = harmonic_series(kind, 1.3, 0.0, p.E_J, p.E_Cq, p.omega_d);
        HarmonicSeries b = harmonic_series(kind, 1.3, 0.0, q.E_J, q.E_Cq, q.omega_d);
        CHECK(chirikov_margin(a, p).ratio == doctest::Approx(chirikov_margin(b, q).ratio).epsilon(1e-13));
    }
}

TEST_CASE("split-step integrator is time reversible on regular orbits")
{
    // librating and rotating orbits of the regular cos φ drive; points near the
    // hyperbolic point at φ = ±π amplify round-off exponentially and are left out
    HarmonicSeries s = table_series(CouplingKind::CosPhi, 300.0);
    SplitStepper st(s, 1024);
    for (simd::Isa isa : {simd::Isa::Scalar, simd::best_isa()}) {
        std::vector<double> phi{0.3, -2.0, 1.0, -1.0, 0.0}, n{1.0, -5.0, 20.0, 3.0, 40.0};
        auto phi0 = phi, n0 = n;
        const long long steps = 1024LL * 200;
        st.advance(phi.data(), n.data(), phi.size(), 0, steps, isa);
        st.advance(phi.data(), n.data(), phi.size(), steps, -steps, isa);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            CHECK(std::abs(phi[i] - phi0[i]) < 1e-9);
            CHECK(std::abs(n[i] - n0[i]) < 1e-9);
        }
    }
}

TEST_CASE("undriven pendulum conserves energy and stays inside the separatrix")
{
    CircuitParams p;
    HarmonicSeries s = harmonic_series(CouplingKind::CosPhi, 0.0, 0.0, p.E_J, p.E_Cq, p.omega_d);
    const double half = separatrices(s, 0)[0].width / 2;
    Trajectory tr = integrate_trajectory(s, {0.0, 0.999 * half}, 1000, {1024, 4, simd::Isa::Scalar});
    CHECK(tr.energy_drift < 1e-8);
    CHECK(tr.energy_excursion < 1e-5);
    double nmax = 0;
    for (double n : tr.n)
        nmax = std::max(nmax, std::abs(n));
    CHECK(nmax <= half);
    for (long long w : tr.winding)
        CHECK(w == 0);
}

TEST_CASE("small oscillations run at the plasma frequency")
{
    CircuitParams p;
    HarmonicSeries s = harmonic_series(CouplingKind::CosPhi, 0.0, 0.0, p.E_J, p.E_Cq, p.omega_d);
    Trajectory tr = integrate_trajectory(s, {1e-3, 0.0}, 200, {1024, 64, simd::Isa::Scalar});
    // count upward zero crossings of φ
    int crossings = 0;
    double first = -1, last = -1;
    for (std::size_t i = 1; i < tr.phi.size(); ++i)
        if (tr.phi[i - 1] < 0 && tr.phi[i] >= 0) {
            double f = -tr.phi[i - 1] / (tr.phi[i] - tr.phi[i - 1]);
            double t = tr.t[i - 1] + f * (tr.t[i] - tr.t[i - 1]);
            if (first < 0)
                first = t;
            last = t;
            ++crossings;
        }
    REQUIRE(crossings > 10);
    const double freq = (crossings - 1) / (last - first);
    CHECK(freq == doctest::Approx(std::sqrt(16 * p.E_J * p.E_Cq)).epsilon(1e-3));
}

TEST_CASE("stroboscopic points converge at second order when the step is halved")
{
    HarmonicSeries s = table_series(CouplingKind::CosPhi, 300.0);
    auto shift = [&](int periods, int spp) {
        Trajectory a = integrate_trajectory(s, {0.0, 1.0}, periods, {spp, 1, simd::Isa::Scalar});
        Trajectory b = integrate_trajectory(s, {0.0, 1.0}, periods, {2 * spp, 1, simd::Isa::Scalar});
        double worst = 0;
        for (std::size_t i = 0; i < a.phi.size(); ++i)
            worst = std::max({worst, std::abs(a.phi[i] - b.phi[i]), std::abs(a.n[i] - b.n[i])});
        return worst;
    };
    CHECK(shift(10, 1024) < 1e-6);
    const double ratio = shift(50, 1024) / shift(50, 2048);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Poincare section of a regular system is classified regular and is ISA independent")
{
    HarmonicSeries s = table_series(CouplingKind::CosPhi, 300.0);
    auto ics = default_ic_grid(s, 9, 2, 2);
    CHECK(ics.size() == 9 + 2 * separatrices(s, 2).size());
    PoincareOptions opt;
    opt.n_periods = 2000;
    PoincareSection a = poincare_section(s, ics, opt);
    opt.isa = simd::best_isa();
    PoincareSection b = poincare_section(s, ics, opt);
    REQUIRE(a.points.size() == ics.size());
    CHECK(a.chaos.chaotic_fraction < 0.01);
    for (std::size_t i = 0; i < ics.size(); ++i) {
        CHECK(a.points[i].size() == 2000);
        CHECK(a.chaos.chaotic[i] == b.chaos.chaotic[i]);
        double worst = 0;
        for (std::size_t k = 0; k < a.points[i].size(); ++k) {
            const auto& pt = a.points[i][k];
            CHECK(pt.phi >= -units::pi);
            CHECK(pt.phi < units::pi);
            double dphi = std::abs(wrap_phase(pt.phi - b.points[i][k].phi));
            worst = std::max({worst, dphi, std::abs(pt.n - b.points[i][k].n)});
        }
        CHECK(worst < 1e-7);
    }
}

TEST_CASE("input validation")
{
    CHECK_THROWS_AS(harmonic_series(CouplingKind::CosPhi, -1.0, 0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_series(CouplingKind::CosPhi, 1.0, 0, 1, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_coupling_kind("sideways"), std::invalid_argument);
    HarmonicSeries s = table_series(CouplingKind::CosPhi, 10.0);
    CHECK_THROWS_AS(SplitStepper(s, 16), std::invalid_argument);
    CHECK(wrap_phase(units::pi) == doctest::Approx(-units::pi));
    CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - kTwoPi));
}
