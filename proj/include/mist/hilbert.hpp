#pragma once

#include <Eigen/Core>

#include "mist/linalg.hpp"
#include "mist/params.hpp"

namespace mist {

// Ancilla-cavity normal modes. u(i,j), v(i,j): i is the bare mode (a,c), j the
// polariton (a,c); bare quadratures expand as
//   a + a† = u_aa (α + α†) + u_ac (γ + γ†),  and likewise for -i(a - a†) with v.
struct DerivedModes {
    double omega_a_bare = 0;
    double omega_c_bare = 0;
    double omega_a_pol = 0;
    double omega_c_pol = 0;
    double theta = 0;
    Eigen::Matrix2d u = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d v = Eigen::Matrix2d::Identity();
    double phi_a = 0;
    double phi_c = 0;
    double E_J_bar = 0;
    double phi_ext = 0;      // 2π·flux_ext
    double phi_ext_bar = 0;
    double alpha_a = 0;
    double alpha_c = 0;
    double L_J = 0;          // nH
    double L_a = 0;          // nH, at the given flux
};

DerivedModes normal_modes(const CircuitParams& p);

struct TransmonEigenbasis {
    RVector energies;  // ground-referenced
    RMatrix cos_phi;
    CMatrix sin_phi;
    RMatrix n_op;

    int D() const { return static_cast<int>(energies.size()); }
    double omega_q() const { return energies[1] - energies[0]; }
    double alpha_q() const { return energies[2] - 2 * energies[1] + energies[0]; }
};

TransmonEigenbasis transmon_eigensystem(const CircuitParams& p, const HilbertSpec& spec);

// Transmon ⊗ cavity, undriven:
//   H_q + ω_c c†c − 2E_J (cos φ_q − 1) ⊗ (e^{−φ_a² u_aa²/2} cos[φ_c X + φ̄_ext] − 1)
// with X = c + c†. The prefactor is the ancilla-vacuum average of the
// three-mode coupling; at zero photons it renormalizes 2E_J to 2Ē_J.
HermitianOperator build_cosphi_two_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec);

// H_q + ω_c c†c − i g n_q (c − c†), with the transmon at 2E_J.
HermitianOperator build_transverse_two_mode(const CircuitParams& p, double g_qc, const HilbertSpec& spec);

// Transmon ⊗ ancilla polariton ⊗ cavity polariton:
//   H_q + ω_a a†a + ω_c c†c − 2E_J (cos φ_q − 1) ⊗ (cos[φ_a(u_aa A + u_ac X) + φ̄_ext] − 1)
HermitianOperator build_three_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec,
                                   long long max_dim = 4000);
// Same, reusing a transmon eigenbasis computed for these E_J, E_Cq, n_g.
HermitianOperator build_three_mode(const CircuitParams& p, const DerivedModes& modes, const HilbertSpec& spec,
                                   const TransmonEigenbasis& tb, long long max_dim = 4000);

double matched_transverse_coupling(const DerivedModes& modes);

// χ = −2Ē_J φ_q² φ_c² with φ_q = (2E_Cq/2E_J)^{1/4}, φ̂_q = φ_q (q + q†).
double perturbative_chi(const CircuitParams& p, const DerivedModes& modes);
inline constexpr const char* perturbative_chi_convention =
    "phi_q_hat = phi_q (q + q^dag), phi_q = (2 E_Cq / 2 E_J)^(1/4), chi = -2 E_J_bar phi_q^2 phi_c^2";

// Flat index of |j, n⟩ in a transmon ⊗ cavity product.
inline Eigen::Index product_index(int j, int n, int d_c) { return Eigen::Index(j) * d_c + n; }

}  // namespace mist
