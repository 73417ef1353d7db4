#include "mist/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mist {

namespace {

constexpr double kDegenerateModes = 1e-6;  // GHz
constexpr double kBufferTolerance = 1e-8;

CMatrix to_complex(const RMatrix& m) { return m.cast<cplx>(); }

// cos/sin of an affine quadrature, checked against a larger buffer.
RMatrix buffered_quadrature(int dim, int buffer, const std::function<double(double)>& f)
{
    RMatrix m = quadrature_function(dim, buffer, f);
    RMatrix wider = quadrature_function(dim, buffer + std::max(10, buffer / 2), f);
    double diff = (m - wider).cwiseAbs().maxCoeff();
    if (diff > kBufferTolerance)
        throw NumericalError("fock_buffer too small: truncated quadrature function changes by " +
                             std::to_string(diff));
    return m;
}

}  // namespace

DerivedModes normal_modes(const CircuitParams& p)
{
    p.validate();
    DerivedModes m;
    m.phi_ext = units::two_pi * p.flux_ext;
    m.L_J = units::josephson_inductance_nH(p.E_J);
    double squid = std::abs(std::cos(units::pi * p.flux_ext / 28.0));
    if (squid < 1e-12)
        throw std::invalid_argument("normal_modes: SQUID inductance diverges at this flux");
    m.L_a = p.L_a0 / squid;
    const double ratio = m.L_J / m.L_a;

    const double E_La = 2.0 * p.E_J * (1.0 + 2.0 * ratio);
    const double wa = std::sqrt(8.0 * E_La * p.E_Ca);
    const double wc = p.omega_c_bare;
    m.omega_a_bare = wa;
    m.omega_c_bare = wc;
    if (std::abs(wc - wa) < kDegenerateModes)
        throw std::invalid_argument("normal_modes: bare ancilla and cavity are degenerate");

    const double g = p.g_ac;
    const double th = 0.5 * std::atan2(4.0 * g * std::sqrt(wa * wc), wc * wc - wa * wa);
    const double c = std::cos(th), s = std::sin(th);
    const double cross = 2.0 * g * std::sqrt(wa * wc) * std::sin(2.0 * th);
    const double wa2 = wa * wa * c * c + wc * wc * s * s - cross;
    const double wc2 = wc * wc * c * c + wa * wa * s * s + cross;
    if (wa2 <= 0 || wc2 <= 0)
        throw std::invalid_argument("normal_modes: coupling too strong, polariton frequency imaginary");
    m.theta = th;
    m.omega_a_pol = std::sqrt(wa2);
    m.omega_c_pol = std::sqrt(wc2);

    const double s1 = std::pow(wc / wa, 0.25);
    const double s2 = std::pow(wa2 / (wa * wc), 0.25);
    const double s3 = std::pow(wc2 / (wa * wc), 0.25);
    m.u << s1 * s2 * c, s1 * s3 * s,
           -s2 * s / s1, s3 * c / s1;
    m.v << c / (s1 * s2), s / (s1 * s3),
           -s1 * s / s2, s1 * c / s3;

    m.phi_a = std::pow(p.E_Ca / (p.E_J * (1.0 + 2.0 * ratio)), 0.25);
    m.phi_c = m.phi_a * m.u(0, 1);
    m.E_J_bar = p.E_J * std::exp(-m.phi_a * m.phi_a * (m.u(0, 0) * m.u(0, 0) + m.u(0, 1) * m.u(0, 1)) / 2.0);

    const double lead = m.phi_ext * m.phi_a * ratio * 2.0 * p.E_J;
    m.alpha_a = lead * m.u(0, 0) / m.omega_a_pol;
    m.alpha_c = lead * m.u(0, 1) / m.omega_c_pol;
    m.phi_ext_bar = 2.0 * m.phi_a * (m.u(0, 0) * m.alpha_a + m.u(0, 1) * m.alpha_c);
    return m;
}

TransmonEigenbasis transmon_eigensystem(const CircuitParams& p, const HilbertSpec& spec)
{
    p.validate();
    spec.validate(p);
    const int nc = spec.n_charge;
    const int half = (nc - 1) / 2;
    RVector diag(nc);
    for (int i = 0; i < nc; ++i) {
        double k = i - half - p.n_g;
        diag[i] = 4.0 * p.E_Cq * k * k;
    }
    // −2E_J cos φ = −E_J (e^{iφ} + e^{−iφ})
    RVector off = RVector::Constant(nc - 1, -p.E_J);
    TridiagonalEigen te = tridiagonal_lowest(diag, off, spec.D);

    TransmonEigenbasis tb;
    tb.energies = te.values.array() - te.values[0];
    for (int k = 1; k < spec.D; ++k)
        if (!(te.values[k] > te.values[k - 1]))
            throw NumericalError("transmon spectrum not strictly increasing");

    const RMatrix& V = te.vectors;
    // lower(a,b) = ⟨a|e^{−iφ}|b⟩, e^{−iφ}|k⟩ = |k−1⟩
    RMatrix shifted = RMatrix::Zero(nc, spec.D);
    shifted.topRows(nc - 1) = V.bottomRows(nc - 1);
    RMatrix lower = V.transpose() * shifted;
    tb.cos_phi = 0.5 * (lower + lower.transpose());
    RMatrix anti = lower - lower.transpose();
    tb.sin_phi = cplx(0, 0.5) * anti.cast<cplx>();
    RVector charge = RVector::LinSpaced(nc, -half, half).array() - p.n_g;
    tb.n_op = V.transpose() * charge.asDiagonal() * V;
    tb.n_op = 0.5 * (tb.n_op + tb.n_op.transpose()).eval();
    return tb;
}

HermitianOperator build_cosphi_two_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec)
{
    TransmonEigenbasis tb = transmon_eigensystem(p, spec);
    const int D = spec.D, dc = spec.d_c;
    const double pc = modes.phi_c, pbar = modes.phi_ext_bar;
    RMatrix C = buffered_quadrature(dc, spec.fock_buffer, [pc, pbar](double x) { return std::cos(pc * x + pbar); });
    const double eps_a = std::exp(-modes.phi_a * modes.phi_a * modes.u(0, 0) * modes.u(0, 0) / 2.0);

    RMatrix qpart = tb.cos_phi - RMatrix::Identity(D, D);
    RMatrix cpart = eps_a * C - RMatrix::Identity(dc, dc);
    RMatrix H = -2.0 * p.E_J * kron(qpart, cpart);
    for (int j = 0; j < D; ++j)
        for (int n = 0; n < dc; ++n) {
            auto i = product_index(j, n, dc);
            H(i, i) += tb.energies[j] + modes.omega_c_pol * n;
        }
    H = 0.5 * (H + H.transpose()).eval();
    HermitianOperator op{to_complex(H), {{Factor::TransmonEigen, D}, {Factor::CavityFock, dc}}};
    op.check();
    return op;
}

HermitianOperator build_transverse_two_mode(const CircuitParams& p, double g_qc, const HilbertSpec& spec)
{
    TransmonEigenbasis tb = transmon_eigensystem(p, spec);
    DerivedModes modes = normal_modes(p);
    const int D = spec.D, dc = spec.d_c;
    RMatrix a = annihilation(dc);
    // −i g (c − c†)
    CMatrix cav = cplx(0, -g_qc) * (a - a.transpose()).cast<cplx>();
    CMatrix H = kron(tb.n_op.cast<cplx>().eval(), cav);
    for (int j = 0; j < D; ++j)
        for (int n = 0; n < dc; ++n) {
            auto i = product_index(j, n, dc);
            H(i, i) += tb.energies[j] + modes.omega_c_pol * n;
        }
    H = 0.5 * (H + H.adjoint()).eval();
    HermitianOperator op{std::move(H), {{Factor::TransmonEigen, D}, {Factor::CavityFock, dc}}};
    op.check();
    return op;
}

HermitianOperator build_three_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec,
                                   long long max_dim)
{
    if (spec.d_a < 2)
        throw std::invalid_argument("build_three_mode: d_a must be >= 2");
    const long long dim = 1LL * spec.D * spec.d_a * spec.d_c;
    if (dim > max_dim)
        throw std::invalid_argument("build_three_mode: D*d_a*d_c = " + std::to_string(dim) + " exceeds cap " +
                                    std::to_string(max_dim) +
                                    "; use build_cosphi_two_mode (frozen ancilla) for large cavity spaces");
    return build_three_mode(p, modes, spec, transmon_eigensystem(p, spec), max_dim);
}

HermitianOperator build_three_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec,
                                   const TransmonEigenbasis& tb, long long max_dim)
{
    if (spec.d_a < 2)
        throw std::invalid_argument("build_three_mode: d_a must be >= 2");
    if (tb.D() != spec.D)
        throw std::invalid_argument("build_three_mode: transmon basis size does not match D");
    const long long dim = 1LL * spec.D * spec.d_a * spec.d_c;
    if (dim > max_dim)
        throw std::invalid_argument("build_three_mode: D*d_a*d_c = " + std::to_string(dim) + " exceeds cap " +
                                    std::to_string(max_dim));
    const int D = spec.D, da = spec.d_a, dc = spec.d_c;
    const double ua = modes.phi_a * modes.u(0, 0);
    const double uc = modes.phi_a * modes.u(0, 1);
    const double pbar = modes.phi_ext_bar;
    const int buf = spec.fock_buffer;

    RMatrix cosA = buffered_quadrature(da, buf, [ua](double x) { return std::cos(ua * x); });
    RMatrix sinA = buffered_quadrature(da, buf, [ua](double x) { return std::sin(ua * x); });
    RMatrix cosC = buffered_quadrature(dc, buf, [uc, pbar](double x) { return std::cos(uc * x + pbar); });
    RMatrix sinC = buffered_quadrature(dc, buf, [uc, pbar](double x) { return std::sin(uc * x + pbar); });

    RMatrix meter = kron(cosA, cosC) - kron(sinA, sinC);
    meter -= RMatrix::Identity(da * dc, da * dc);
    RMatrix qpart = tb.cos_phi - RMatrix::Identity(D, D);
    RMatrix H = -2.0 * p.E_J * kron(qpart, meter);
    for (int j = 0; j < D; ++j)
        for (int na = 0; na < da; ++na)
            for (int n = 0; n < dc; ++n) {
                Eigen::Index i = (Eigen::Index(j) * da + na) * dc + n;
                H(i, i) += tb.energies[j] + modes.omega_a_pol * na + modes.omega_c_pol * n;
            }
    H = 0.5 * (H + H.transpose()).eval();
    HermitianOperator op{to_complex(H),
                         {{Factor::TransmonEigen, D}, {Factor::AncillaFock, da}, {Factor::CavityFock, dc}}};
    op.check();
    return op;
}

double matched_transverse_coupling(const DerivedModes& modes)
{
    return std::abs(modes.phi_c) * modes.omega_c_pol;
}

double perturbative_chi(const CircuitParams& p, const DerivedModes& modes)
{
    const double phi_q2 = std::sqrt(2.0 * p.E_Cq / (2.0 * p.E_J));
    return -2.0 * modes.E_J_bar * phi_q2 * modes.phi_c * modes.phi_c;
}

}  // namespace mist
