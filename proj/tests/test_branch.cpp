#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mist/branch.hpp"
#include "mist/hilbert.hpp"

using namespace mist;

namespace {

// Weakly coupled transmon-like ladder ⊗ cavity: diag(E_j + ω n) + g Σ x_jj' (c + c†).
HermitianOperator toy_hamiltonian(const std::vector<double>& E, double omega, int d_c, double g, std::uint64_t seed)
{
    const int D = static_cast<int>(E.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RMatrix X = RMatrix::Zero(D, D);
    for (int a = 0; a < D; ++a)
        for (int b = a + 1; b < D; ++b)
            X(a, b) = X(b, a) = u(rng);
    RMatrix c = annihilation(d_c);
    RMatrix H = g * kron(X, RMatrix(c + c.transpose()));
    for (int j = 0; j < D; ++j)
        for (int n = 0; n < d_c; ++n)
            H(product_index(j, n, d_c), product_index(j, n, d_c)) += E[j] + omega * n;
    return {H.cast<cplx>(), {{Factor::TransmonEigen, D}, {Factor::CavityFock, d_c}}};
}

// Global maximum-overlap assignment of eigenstates to product states, exact by bitmask DP.
std::vector<int> brute_force_assignment(const EigenSystem& es)
{
    const int N = static_cast<int>(es.dim());
    RMatrix W(N, N);  // W(product, eigen)
    for (int k = 0; k < N; ++k)
        W.col(k) = es.weights(k);
    const int full = 1 << N;
    std::vector<double> best(full, -1.0);
    std::vector<int> choice(full, -1);
    best[0] = 0;
    for (int mask = 0; mask < full; ++mask) {
        if (best[mask] < 0)
            continue;
        const int r = __builtin_popcount(mask);  // next product state to assign
        if (r == N)
            continue;
        for (int k = 0; k < N; ++k) {
            if (mask & (1 << k))
                continue;
            int next = mask | (1 << k);
            double v = best[mask] + W(r, k);
            if (v > best[next]) {
                best[next] = v;
                choice[next] = k;
            }
        }
    }
    std::vector<int> assign(N);
    int mask = full - 1;
    for (int r = N - 1; r >= 0; --r) {
        int k = choice[mask];
        assign[r] = k;
        mask &= ~(1 << k);
    }
    return assign;
}

BranchAnalysis cosphi_analysis(double flux, int D, int d_c)
{
    CircuitParams p;
    p.flux_ext = flux;
    HilbertSpec s{201, D, d_c, 1, 40};
    return diagonalize_and_label(build_cosphi_two_mode(p, normal_modes(p), s), D, d_c);
}

}  // namespace

TEST_CASE("ladder labels equal the brute-force assignment on a D=3, d_c=4 instance")
{
    const std::vector<double> E{0.0, 2.07, 4.06};
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        HermitianOperator H = toy_hamiltonian(E, 7.29, 4, 0.08, seed);
        BranchAnalysis ba = diagonalize_and_label(H, 3, 4);
        std::vector<int> oracle = brute_force_assignment(ba.eig);
        for (int j = 0; j < 3; ++j)
            for (int n = 0; n < ba.table.d_c_usable; ++n) {
                REQUIRE(ba.table.labeled(j, n));
                CHECK(ba.table.index(j, n) == oracle[product_index(j, n, 4)]);
            }
    }
}

TEST_CASE("labeling is invariant under eigenstate reordering")
{
    HermitianOperator H = toy_hamiltonian({0.0, 2.07, 4.06, 5.97, 7.8, 9.5}, 7.29, 30, 0.15, 11);
    EigenSystem es = eigh(H);
    BranchTable a = label_branches(es, 6, 30);
    std::vector<Eigen::Index> perm(es.dim());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
    BranchTable b = label_branches(es.permuted(perm), 6, 30);
    REQUIRE(a.d_c_usable == b.d_c_usable);
    for (int j = 0; j < 6; ++j)
        for (int n = 0; n < a.d_c_usable; ++n) {
            REQUIRE(a.labeled(j, n) == b.labeled(j, n));
            if (!a.labeled(j, n))
                continue;
            CHECK(a.energy(j, n) == b.energy(j, n));
            CHECK(a.nt(j, n) == doctest::Approx(b.nt(j, n)).epsilon(1e-12));
            CHECK(perm[b.index(j, n)] == a.index(j, n));
        }
}

TEST_CASE("labeled energies equal the trace of H on the labeled subspace")
{
    BranchAnalysis ba = cosphi_analysis(-0.04, 6, 40);
    CircuitParams p;
    p.flux_ext = -0.04;
    HermitianOperator H = build_cosphi_two_mode(p, normal_modes(p), {201, 6, 40, 1, 40});
    double sum_e = 0, trace = 0;
    for (int j = 0; j < 6; ++j)
        for (int n = 0; n < ba.table.d_c_usable; ++n) {
            if (!ba.table.labeled(j, n))
                continue;
            CVector v = ba.eig.vector(ba.table.index(j, n));
            sum_e += ba.table.energy(j, n);
            trace += (v.adjoint() * H.data * v)(0, 0).real();
        }
    CHECK(std::abs(sum_e - trace) < 1e-8 * std::abs(sum_e));
}

TEST_CASE("decoupled ladder with an artificial Kerr term crosses where the closed form says")
{
    CircuitParams p;
    HilbertSpec s{201, 6, 80, 1, 40};
    TransmonEigenbasis tb = transmon_eigensystem(p, s);
    const double omega = 7.29, K = 0.0093;
    RMatrix H = RMatrix::Zero(6 * 80, 6 * 80);
    for (int j = 0; j < 6; ++j)
        for (int n = 0; n < 80; ++n)
            H(product_index(j, n, 80), product_index(j, n, 80)) = tb.energies[j] + omega * n + K * n * n;
    HermitianOperator op{H.cast<cplx>(), {{Factor::TransmonEigen, 6}, {Factor::CavityFock, 80}}};
    BranchAnalysis ba = diagonalize_and_label(op, 6, 80);
    // E_4 + ω m + K m² = E_0 + ω(m+1) + K(m+1)², reported on the j = 0 axis at m + 1
    const double analytic = ((tb.energies[4] - tb.energies[0] - omega) / K - 1.0) / 2.0 + 1.0;
    auto ev = find_crossings(ba.table, {{0, 4}});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].n_c_star == doctest::Approx(analytic).epsilon(1e-9));
    CHECK(ev[0].kind == CrossingKind::Exact);
    CHECK(ev[0].gap_MHz < 1e-6);
}

TEST_CASE("crossing search is symmetric in the pair order")
{
    BranchAnalysis ba = cosphi_analysis(-0.04, 8, 100);
    auto a = find_crossings(ba.table, {{0, 4}});
    auto b = find_crossings(ba.table, {{4, 0}});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].n_c_star == b[i].n_c_star);
        CHECK(a[i].gap_MHz == b[i].gap_MHz);
    }
}

TEST_CASE("flux-activated crossings exchange transmon character and converge in d_c")
{
    BranchAnalysis ba = cosphi_analysis(-0.04, 8, 100);
    auto ev = find_crossings(ba.table, {{0, 4}, {1, 5}});
    auto pick = [&](int lo, int hi) {
        for (const auto& e : ev)
            if (e.j_lo == lo && e.j_hi == hi && e.kind == CrossingKind::Avoided)
                return e;
        FAIL("no avoided crossing for the pair");
        return CrossingEvent{};
    };
    CrossingEvent e04 = pick(0, 4);
    pick(1, 5);
    const int below = static_cast<int>(std::floor(e04.n_c_star)) - 3;
    const int above = static_cast<int>(std::ceil(e04.n_c_star)) + 3;
    const BranchTable& t = ba.table;
    CHECK(std::abs(t.nt(0, below + 1) - 0.0) < 0.3);
    CHECK(std::abs(t.nt(4, below) - 4.0) < 0.3);
    CHECK(std::abs(t.nt(0, above + 1) - 4.0) < 0.3);
    CHECK(std::abs(t.nt(4, above) - 0.0) < 0.3);

    BranchAnalysis wider = cosphi_analysis(-0.04, 8, 125);
    for (const auto& e : find_crossings(wider.table, {{0, 4}}))
        if (e.kind == CrossingKind::Avoided)
            CHECK(std::abs(e.n_c_star - e04.n_c_star) < 2.0);
}

TEST_CASE("cos phi model at zero flux: flat branches, no avoided crossings")
{
    BranchAnalysis ba = cosphi_analysis(0.0, 8, 120);
    const BranchTable& t = ba.table;
    for (int n = 0; n <= static_cast<int>(0.95 * t.d_c_usable); ++n) {
        REQUIRE(t.labeled(0, n));
        CHECK(std::abs(t.nt(0, n)) < 0.1);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j <= 1; ++j)
        for (int k = j + 1; k < 8; ++k)
            pairs.emplace_back(j, k);
    for (const auto& e : find_crossings(t, pairs))
        CHECK(e.kind == CrossingKind::Exact);
}

TEST_CASE("transverse model shows avoided crossings of the computational branches")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 8, 120, 1, 40};
    BranchAnalysis ba = diagonalize_and_label(build_transverse_two_mode(p, matched_transverse_coupling(m), s), 8, 120);
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j <= 1; ++j)
        for (int k = j + 1; k < 8; ++k)
            pairs.emplace_back(j, k);
    int avoided = 0;
    for (const auto& e : find_crossings(ba.table, pairs))
        avoided += e.kind == CrossingKind::Avoided;
    CHECK(avoided >= 1);
}

TEST_CASE("AC Stark slope of the cos phi model follows the cross-Kerr")
{
    BranchAnalysis ba = cosphi_analysis(0.0, 6, 60);
    StarkCurve sc = ac_stark_curve(ba.table, {0, 1}, 20);
    CHECK(sc.slope == doctest::Approx(-0.00202).epsilon(0.10));
    CHECK(sc.freq[0] == doctest::Approx(ba.table.energy(1, 0) - ba.table.energy(0, 0)));
}

TEST_CASE("linear extrapolation of a Stark curve")
{
    StarkCurve sc;
    sc.slope = -0.008;
    sc.intercept = 7.73;
    CHECK(extrapolate_crossing(sc, 7.29) == doctest::Approx(55.0));
}

TEST_CASE("zero-photon detuning and label bounds")
{
    BranchAnalysis ba = cosphi_analysis(-0.04, 6, 20);
    const BranchTable& t = ba.table;
    CHECK(zero_photon_detuning(t, 0, 4) == doctest::Approx(t.energy(4, 0) - t.energy(0, 1)));
    CHECK(zero_photon_detuning(t, 4, 0) == zero_photon_detuning(t, 0, 4));
    CHECK(t.d_c_usable == 18);
    CHECK_THROWS_AS(find_crossings(t, {{0, 9}}), std::invalid_argument);
    CHECK_THROWS_AS(label_branches(ba.eig, 6, 21), std::invalid_argument);
}
