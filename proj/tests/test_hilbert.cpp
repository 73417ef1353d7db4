#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "mist/branch.hpp"
#include "mist/hilbert.hpp"

using namespace mist;

namespace {

// Dense charge-basis transmon, solved by Eigen rather than the tridiagonal LAPACK path.
Eigen::VectorXd dense_transmon(const CircuitParams& p, int n_charge)
{
    const int half = (n_charge - 1) / 2;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_charge, n_charge);
    for (int i = 0; i < n_charge; ++i) {
        double k = i - half - p.n_g;
        H(i, i) = 4.0 * p.E_Cq * k * k;
        if (i + 1 < n_charge)
            H(i, i + 1) = H(i + 1, i) = -p.E_J;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().array() - es.eigenvalues()[0];
}

double chi_of(const BranchTable& t) { return t.energy(1, 1) - t.energy(1, 0) - t.energy(0, 1) + t.energy(0, 0); }

}  // namespace

TEST_CASE("transmon spectrum matches the reference qubit frequency and anharmonicity")
{
    CircuitParams p;
    HilbertSpec s;
    TransmonEigenbasis tb = transmon_eigensystem(p, s);
    CHECK(tb.omega_q() == doctest::Approx(2.0687).epsilon(0.01));
    CHECK(tb.alpha_q() == doctest::Approx(-0.0814).epsilon(0.05));
}

TEST_CASE("transmon levels agree with a dense 1001-state charge basis to 1 kHz")
{
    CircuitParams p;
    HilbertSpec s;
    TransmonEigenbasis tb = transmon_eigensystem(p, s);
    Eigen::VectorXd ref = dense_transmon(p, 1001);
    for (int k = 0; k < s.D; ++k)
        CHECK(std::abs(tb.energies[k] - ref[k]) < 1e-6);
    // weakly anharmonic estimate brackets the exact value
    const double plasma = std::sqrt(16.0 * p.E_J * p.E_Cq) - p.E_Cq;
    CHECK(tb.omega_q() == doctest::Approx(plasma).epsilon(0.01));
}

TEST_CASE("transmon operators are consistent with the eigenbasis")
{
    CircuitParams p;
    HilbertSpec s;
    s.D = 8;
    TransmonEigenbasis tb = transmon_eigensystem(p, s);
    // n_g = 0: cos φ couples equal parity, n couples opposite parity
    for (int a = 0; a < s.D; ++a)
        for (int b = 0; b < s.D; ++b) {
            if ((a - b) % 2 != 0)
                CHECK(std::abs(tb.cos_phi(a, b)) < 1e-12);
            else
                CHECK(std::abs(tb.n_op(a, b)) < 1e-12);
        }
    // Thomas-Reiche-Kuhn: Σ_k (E_k − E_0)|⟨k|n|0⟩|² = E_J⟨0|cos φ|0⟩ for H = 4E_C n² − 2E_J cos φ
    double lhs = 0;
    for (int k = 1; k < s.D; ++k)
        lhs += tb.energies[k] * tb.n_op(k, 0) * tb.n_op(k, 0);
    CHECK(lhs == doctest::Approx(p.E_J * tb.cos_phi(0, 0)).epsilon(1e-6));
}

TEST_CASE("normal modes match an independent eigenvalue oracle and the reference values")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    const double wa = m.omega_a_bare, wc = m.omega_c_bare;
    Eigen::Matrix2d K;
    const double k = 2.0 * p.g_ac * std::sqrt(wa * wc);
    K << wa * wa, k, k, wc * wc;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
    CHECK(m.omega_a_pol == doctest::Approx(std::sqrt(es.eigenvalues()[0])).epsilon(1e-12));
    CHECK(m.omega_c_pol == doctest::Approx(std::sqrt(es.eigenvalues()[1])).epsilon(1e-12));

    CHECK(m.theta == doctest::Approx(0.298).epsilon(0.01));
    CHECK(m.omega_c_pol == doctest::Approx(7.294).epsilon(0.01));
    CHECK(m.omega_a_pol == doctest::Approx(6.502).epsilon(0.01));
    CHECK(m.omega_a_bare == doctest::Approx(6.59).epsilon(0.01));

    // canonical transformation: [x_i, p_j] = 2i δ_ij survives, u vᵀ = 1
    Eigen::Matrix2d uv = m.u * m.v.transpose();
    CHECK((uv - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matched transverse coupling from the quoted phase drop")
{
    DerivedModes m;
    m.phi_c = 0.0632 / 2;
    m.omega_c_pol = 7.294;
    CHECK(matched_transverse_coupling(m) == doctest::Approx(0.2305).epsilon(0.001));
    m.phi_c = -m.phi_c;
    CHECK(matched_transverse_coupling(m) == doctest::Approx(0.2305).epsilon(0.001));
}

TEST_CASE("Hamiltonians are Hermitian")
{
    CircuitParams p;
    p.flux_ext = -0.04;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{101, 6, 20, 3, 40};
    CHECK(build_cosphi_two_mode(p, m, s).hermiticity_defect() < 1e-12);
    CHECK(build_transverse_two_mode(p, matched_transverse_coupling(m), s).hermiticity_defect() < 1e-12);
    CHECK(build_three_mode(p, m, s).hermiticity_defect() < 1e-12);
}

TEST_CASE("parity selection rule of the cos phi coupling at zero flux")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 6, 30, 1, 40};
    HermitianOperator H = build_cosphi_two_mode(p, m, s);
    double worst = 0;
    for (int j = 0; j < s.D; ++j)
        for (int n = 0; n < s.d_c; ++n)
            for (int jp = 0; jp < s.D; ++jp)
                for (int np = 0; np < s.d_c; ++np)
                    if ((j - jp) % 2 != 0 || (n - np) % 2 != 0)
                        worst = std::max(worst, std::abs(H.data(product_index(j, n, s.d_c), product_index(jp, np, s.d_c))));
    CHECK(worst < 1e-12);
}

TEST_CASE("flux-odd part of the Hamiltonian changes cavity parity")
{
    CircuitParams p;
    p.flux_ext = 0.05;
    CircuitParams q = p;
    q.flux_ext = -p.flux_ext;
    HilbertSpec s{201, 6, 24, 1, 40};
    HermitianOperator Hp = build_cosphi_two_mode(p, normal_modes(p), s);
    HermitianOperator Hm = build_cosphi_two_mode(q, normal_modes(q), s);
    CMatrix odd = Hp.data - Hm.data;
    double even_worst = 0, odd_best = 0;
    for (int j = 0; j < s.D; ++j)
        for (int n = 0; n < s.d_c; ++n)
            for (int jp = 0; jp < s.D; ++jp)
                for (int np = 0; np < s.d_c; ++np) {
                    double v = std::abs(odd(product_index(j, n, s.d_c), product_index(jp, np, s.d_c)));
                    if ((n - np) % 2 == 0)
                        even_worst = std::max(even_worst, v);
                    else
                        odd_best = std::max(odd_best, v);
                }
    CHECK(even_worst < 1e-12);
    CHECK(odd_best > 1e-4);
}

TEST_CASE("exact cross-Kerr at zero flux and perturbative estimate")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 6, 12, 1, 40};
    BranchAnalysis ba = diagonalize_and_label(build_cosphi_two_mode(p, m, s), s.D, s.d_c);
    const double chi = chi_of(ba.table);
    CHECK(chi == doctest::Approx(-0.00202).epsilon(0.10));
    CHECK(perturbative_chi(p, m) == doctest::Approx(chi).epsilon(0.25));
}

TEST_CASE("cross-Kerr converges in the cavity truncation")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 6, 40, 1, 40};
    double chi_a = chi_of(diagonalize_and_label(build_cosphi_two_mode(p, m, s), s.D, s.d_c).table);
    s.d_c = 50;
    double chi_b = chi_of(diagonalize_and_label(build_cosphi_two_mode(p, m, s), s.D, s.d_c).table);
    CHECK(std::abs(chi_a - chi_b) < 1e-6);
}

TEST_CASE("transverse model dispersive shift within a factor two of the cos phi value")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 6, 40, 1, 40};
    BranchAnalysis ba =
        diagonalize_and_label(build_transverse_two_mode(p, matched_transverse_coupling(m), s), s.D, s.d_c);
    const double chi = chi_of(ba.table);
    CHECK(chi < 0);
    CHECK(std::abs(chi) > 0.00202 / 2);
    CHECK(std::abs(chi) < 0.00202 * 2);
}

TEST_CASE("frozen-ancilla two-mode spectrum matches the three-mode spectrum")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s3{201, 6, 12, 3, 40};
    HilbertSpec s2{201, 6, 12, 1, 40};
    EigenSystem e3 = eigh(build_three_mode(p, m, s3));
    EigenSystem e2 = eigh(build_cosphi_two_mode(p, m, s2));
    // three-mode states that keep the ancilla in vacuum
    std::vector<double> vacuum;
    for (Eigen::Index i = 0; i < e3.dim(); ++i) {
        RVector w = e3.weights(i);
        double v = 0;
        for (int j = 0; j < s3.D; ++j)
            v += w.segment((Eigen::Index(j) * s3.d_a) * s3.d_c, s3.d_c).sum();
        if (v > 0.5)
            vacuum.push_back(e3.values[i] - e3.values[0]);
    }
    REQUIRE(vacuum.size() >= 10);
    for (int k = 0; k < 10; ++k)
        CHECK(std::abs(vacuum[k] - (e2.values[k] - e2.values[0])) < 1e-3);
}

TEST_CASE("three-mode transition frequencies at zero flux")
{
    CircuitParams p;
    DerivedModes m = normal_modes(p);
    HilbertSpec s{201, 6, 8, 3, 40};
    EigenSystem es = eigh(build_three_mode(p, m, s));
    auto level_with = [&](int j, int na, int nc) {
        Eigen::Index r = (Eigen::Index(j) * s.d_a + na) * s.d_c + nc;
        Eigen::Index best = 0;
        double w = -1;
        for (Eigen::Index k = 0; k < es.dim(); ++k) {
            double x = es.weights(k)[r];
            if (x > w) {
                w = x;
                best = k;
            }
        }
        return es.values[best];
    };
    const double e0 = level_with(0, 0, 0);
    CHECK(level_with(1, 0, 0) - e0 == doctest::Approx(2.0693).epsilon(0.002));
    CHECK(level_with(0, 0, 1) - e0 == doctest::Approx(7.2938).epsilon(0.002));
    const double chi = level_with(1, 0, 1) - level_with(1, 0, 0) - level_with(0, 0, 1) + e0;
    CHECK(chi == doctest::Approx(-0.002032).epsilon(0.05));
}

TEST_CASE("hilbert spec validation")
{
    CircuitParams p;
    HilbertSpec s;
    s.n_charge = 100;
    CHECK_THROWS_AS(s.validate(p), std::invalid_argument);
    s = HilbertSpec{};
    s.D = 5;
    CHECK_THROWS_AS(s.validate(p), std::invalid_argument);
    s = HilbertSpec{};
    s.d_c = 0;
    CHECK_THROWS_AS(s.validate(p), std::invalid_argument);
    s = HilbertSpec{};
    s.d_a = 1;
    CHECK_THROWS_AS(build_three_mode(p, normal_modes(p), s), std::invalid_argument);
}
