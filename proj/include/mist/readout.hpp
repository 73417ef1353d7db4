#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "mist/params.hpp"

namespace mist {

using IQ = std::complex<double>;

struct PointerState {
    int k = 0;
    IQ center;
    double sigma = 0;
};

struct PointerOptions {
    double snr = 50.0;  // σ = 1/snr in transmission units
    // cavity frequency; NaN selects the polariton ω_c of the circuit
    double omega_cavity = std::numeric_limits<double>::quiet_NaN();
};

// χ_k = k·χ_qc for k = 0 .. count−1
std::vector<double> linear_dispersive_shifts(double chi_qc, int count);

// t_k = (κ/2) / (κ/2 − i(ω_d − ω_c − χ_k)), frequencies in GHz.
std::vector<PointerState> pointer_positions(const CircuitParams& p, const std::vector<double>& chi_per_state,
                                            double omega_drive, const PointerOptions& opt = {});

inline constexpr int kLabelSixPlus = 6;
inline constexpr int kLabelOutlier = -1;

struct ClassifyOptions {
    double radius_factor = 2.0;
    double wide_radius_factor = 6.0;  // 6+ disc around the centroid of states k ≥ 6
    int resolved = 6;                 // states 0..5 get their own disc
};

// Labels in {0..5, kLabelSixPlus, kLabelOutlier}. Throws if two resolved discs overlap.
std::vector<int> classify(const std::vector<IQ>& points, const std::vector<PointerState>& states,
                          const ClassifyOptions& opt = {});

struct IqSample {
    std::vector<IQ> points;
    std::vector<int> truth;
};

// Isotropic Gaussian blobs, `per_state` points around each center; deterministic for a seed.
IqSample sample_pointer_states(const std::vector<PointerState>& states, int per_state, std::uint64_t seed);

struct Confusion {
    // rows: true state, columns: label 0..5, 6+, outlier
    std::vector<std::vector<long long>> counts;
    double adjacent_confusion = 0;  // worst fraction of state k labeled k±1 (k ≤ 5)
    double misassignment = 0;       // worst fraction labeled as any other resolved state
};

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& labels, int resolved = 6);

struct ThermalFitResult {
    double T_eff_mK = 0;
    std::vector<double> populations;  // model, normalized over the fitted states
    double residual = 0;              // rms population error
    bool below_1mK = false;
    bool infinite_temperature = false;
    bool non_monotone = false;
    bool large_residual = false;
};

struct ThermalFitOptions {
    int fitted_states = 5;
    double T_min_mK = 0.01;
    double T_max_mK = 1e6;
    double residual_flag = 0.02;
};

// Least-squares Boltzmann fit over states 0..fitted_states−1. `energies` are
// ground-referenced E_k/h in GHz; populations are renormalized over the fitted states.
ThermalFitResult thermal_fit(const std::vector<double>& populations, const std::vector<double>& energies,
                             const ThermalFitOptions& opt = {});

std::vector<double> boltzmann_populations(const std::vector<double>& energies, double T_mK, int states);

struct StarkPoint {
    double power = 0;
    double shift = 0;  // Δω_q, GHz
};

struct PhotonCalibration {
    std::vector<double> power;
    std::vector<double> n_bar;
    double slope = 0;  // photons per power unit
    double intercept = 0;
    double power_min = 0;
    double power_max = 0;

    double predict(double power) const { return slope * power + intercept; }
    bool extrapolated(double power) const { return power < power_min || power > power_max; }
};

// n̄ = Δω_q/χ_qc per point, then a linear fit of n̄ against power.
PhotonCalibration photon_calibration(const std::vector<StarkPoint>& points, double chi_qc);

struct Segment {
    double duration = 0;  // ns
    IQ amplitude;         // drive ε, rad/ns
};

struct PulseEnvelope {
    std::vector<Segment> segments;
    int hold_segment = 0;  // defines the steady state

    double total_duration() const;
    void validate() const;
};

PulseEnvelope square_pulse(IQ amplitude, double duration = 500.0);

struct ClearShape {
    double t_up1 = 2, t_up2 = 2, t_down1 = 2, t_down2 = 2;  // ns, each ≥ 2
    IQ up1, up2, down1, down2;
};

// up-overshoot, up-compensate, hold, ring-down kick, ring-down compensate; total `duration`.
PulseEnvelope clear_pulse(IQ hold_amplitude, const ClearShape& shape, double duration = 500.0);

struct CavityResponse {
    std::vector<double> t;
    std::vector<IQ> alpha;
    IQ steady_state;
    double ring_up_ns = std::numeric_limits<double>::quiet_NaN();
    double ring_down_ns = std::numeric_limits<double>::quiet_NaN();
};

struct CavityOptions {
    double sample_dt = 0.01;    // ns
    double tail = 200.0;        // ns of free decay after the envelope
    double settle_fraction = 0.05;
};

// dα/dt = (iΔ − κ/2) α + ε(t) with κ = 2π·kappa_c, Δ = 2π·detuning, propagated exactly per segment.
CavityResponse cavity_response(const PulseEnvelope& env, double kappa_c, double detuning,
                               const CavityOptions& opt = {});

struct ClearOptimization {
    ClearShape shape;
    PulseEnvelope envelope;
    CavityResponse response;
    double square_ring_up_ns = 0;
    double square_ring_down_ns = 0;
};

struct ClearOptions {
    double max_amplitude_ratio = 5.0;  // |segment amplitude| ≤ ratio·|hold amplitude|
    double max_segment = 50.0;         // ns
    int multistarts = 8;
    CavityOptions cavity;
};

// Overshoot durations and first amplitudes by bounded simplex; the compensating
// amplitude is solved so the field lands exactly on its target.
ClearOptimization optimize_clear(IQ hold_amplitude, double kappa_c, double detuning, double duration = 500.0,
                                 const ClearOptions& opt = {});

}  // namespace mist
