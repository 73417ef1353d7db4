#pragma once

#include <string>
#include <vector>

#include "mist/hilbert.hpp"
#include "mist/params.hpp"
#include "mist/simd.hpp"

namespace mist {

enum class CouplingKind { CosPhi, Transverse };
const char* coupling_kind_name(CouplingKind k);
CouplingKind parse_coupling_kind(const std::string& s);

// H(t) = 4E_Cq n² − Σ_{|k|≤N_h} A_k cos(φ − k ω_d t), energies in GHz.
struct HarmonicSeries {
    CouplingKind kind = CouplingKind::CosPhi;
    double eta = 0;
    double flux_ext_bar = 0;
    double two_E_J = 0;
    double E_Cq = 0;
    double omega_d = 0;
    int n_max = 0;
    std::vector<double> coeff;  // coeff[k + n_max] = A_k

    double A(int k) const { return (k < -n_max || k > n_max) ? 0.0 : coeff[k + n_max]; }
    double period() const { return 1.0 / omega_d; }  // ns
};

// Jacobi-Anger coefficients at explicit drive amplitude η.
//   transverse: A_k = 2E_J J_k(η)
//   cos φ:      A_{2k} = (−1)^k 2E_J cos φ̄ J_{2k}(η),  A_{2k−1} = (−1)^k 2E_J sin φ̄ J_{2k−1}(η)
// N_h = ceil(η) + 12, extended until |A_{N_h}| < 1e-12·2E_J.
HarmonicSeries harmonic_series(CouplingKind kind, double eta, double flux_ext_bar, double E_J, double E_Cq,
                               double omega_d);

// η̃₀ = 2|φ_c|√n̄ (cos φ), η̃_t = 2 g_qc √n̄ / ω_d with g_qc = |φ_c| ω_c (transverse).
HarmonicSeries harmonic_coefficients(CouplingKind kind, const CircuitParams& p, const DerivedModes& modes,
                                     double n_bar);

// Σ_k A_k cos(φ − k ω_d t)
double drive_potential(const HarmonicSeries& s, double phi, double t);

struct Separatrix {
    int m = 0;
    double center_n = 0;
    double width = 0;  // full extent along n, sqrt(2|A_m|/E_Cq)
    std::vector<double> psi, n_upper, n_lower;
};

// One per m in [−m_max, m_max] with A_m ≠ 0; ψ = φ − m ω_d t sampled at `samples` points in [−π, π].
std::vector<Separatrix> separatrices(const HarmonicSeries& s, int m_max, int samples = 256);

struct ChirikovMargin {
    double lhs = 0;
    double rhs = 0;
    double ratio = 0;
};

// cos φ: (ω_d/ω_p) / (√|J_0| + √|J_2|);  transverse: (ω_d/2ω_p) / (√|J_0| + √|J_1|);  ω_p = √(16 E_J E_Cq).
ChirikovMargin chirikov_margin(const HarmonicSeries& s, const CircuitParams& p);

struct ChirikovScan {
    std::vector<double> n_bar;
    std::vector<double> ratio;
    double min_ratio = 0;
    double argmin_n_bar = 0;
};

ChirikovScan chirikov_scan(CouplingKind kind, const CircuitParams& p, const DerivedModes& modes, double n_bar_max,
                           int samples = 3001);

// Converts E/h in GHz to angular frequency in rad/ns.
struct UnitBridge {
    static constexpr double angular(double ghz) { return units::two_pi * ghz; }
};

struct PhasePoint {
    double phi = 0;
    double n = 0;
};

double wrap_phase(double phi);  // into [−π, π)

// Periodic drive table and Strang split-step integrator for a series.
class SplitStepper {
public:
    SplitStepper(const HarmonicSeries& s, int steps_per_period);

    int steps_per_period() const { return spp_; }
    double dt() const { return dt_; }
    // Advances `lanes` states by `steps` (negative: backward) starting at step index `first_step`.
    void advance(double* phi, double* n, std::size_t lanes, long long first_step, long long steps,
                 simd::Isa isa) const;

private:
    int spp_;
    double dt_;
    std::vector<double> cos_table_, sin_table_;
    simd::SplitStepPlan plan_;
};

struct TrajectoryOptions {
    int steps_per_period = 1024;
    int samples_per_period = 1;
    simd::Isa isa = simd::Isa::Scalar;
};

struct Trajectory {
    std::vector<double> t;      // ns
    std::vector<double> phi;    // wrapped into [−π, π)
    std::vector<double> n;
    std::vector<long long> winding;
    // Undriven series only (NaN otherwise): linear-trend drift of the energy
    // across the run and largest excursion, both relative to |E(0)|.
    double energy_drift = 0;
    double energy_excursion = 0;
};

// Strang splitting of φ̇ = 2π·8E_Cq n, ṅ = −2π Σ A_k sin(φ − k ω_d t).
Trajectory integrate_trajectory(const HarmonicSeries& s, PhasePoint ic, int n_periods,
                                const TrajectoryOptions& opt = {});

struct ChaosReport {
    std::vector<double> lyapunov;             // 1/ns
    std::vector<double> lyapunov_per_period;  // λ·T
    std::vector<char> chaotic;
    double chaotic_fraction = 0;
    double threshold_per_period = 0.01;
};

struct PoincareSection {
    double period = 0;  // ns
    std::vector<PhasePoint> initial_conditions;
    std::vector<std::vector<PhasePoint>> points;
    std::vector<Separatrix> separatrices;
    ChaosReport chaos;
};

struct PoincareOptions {
    int n_periods = 2000;
    int steps_per_period = 1024;
    double perturbation = 1e-8;
    double chaos_threshold = 0.01;
    int separatrix_m_max = 2;
    int threads = 0;
    simd::Isa isa = simd::Isa::Scalar;
};

// φ = 0, `count` values of n spanning ±(center of the m_max separatrix + 2 widths);
// optionally `ring_points` initial conditions around each separatrix.
std::vector<PhasePoint> default_ic_grid(const HarmonicSeries& s, int count = 81, int m_max = 2, int ring_points = 0);

PoincareSection poincare_section(const HarmonicSeries& s, const std::vector<PhasePoint>& ics,
                                 const PoincareOptions& opt = {});

}  // namespace mist
