#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mist/params.hpp"

namespace mist {

// c01, a01, q01, q02, q04: |0,0,1⟩, |0,1,0⟩, |1,0,0⟩, |2,0,0⟩, |4,0,0⟩ above |0,0,0⟩ (|j, n_a, n_c⟩).
enum class Transition { c01, a01, q01, q02, q04 };
const char* transition_name(Transition t);
Transition parse_transition(const std::string& s);
const std::vector<Transition>& all_transitions();

struct DigitizedPoint {
    double flux_ext = 0;
    Transition id = Transition::q01;
    double freq = 0;        // GHz
    double band_weight = 0; // GHz

    void validate() const;
};

std::vector<DigitizedPoint> read_points_csv(const std::filesystem::path& path);
std::string format_points_csv(const std::vector<DigitizedPoint>& points);

enum class Observable { omega_q, omega_c, chi_qc };
const char* observable_name(Observable o);

struct Anchor {
    Observable what = Observable::omega_q;
    double target = 0;  // GHz
    double window = 0;  // GHz
};

// Reference anchors: ω_q 2.0687 GHz / 5 MHz, ω_c 7.294 GHz / 10 MHz, χ_qc −2.02 MHz / 200 kHz.
std::vector<Anchor> default_anchors();

enum class FitParam { E_Cq, E_Ca, E_J, L_a0, omega_c_bare, g_ac };
const char* fit_param_name(FitParam f);
FitParam parse_fit_param(const std::string& s);
const std::vector<FitParam>& all_fit_params();
double& param_ref(CircuitParams& p, FitParam f);
double param_value(const CircuitParams& p, FitParam f);

struct Bound {
    double lower = 0;
    double upper = 0;
};

struct FitProblem {
    std::vector<DigitizedPoint> points;
    std::vector<Anchor> anchors;
    std::vector<FitParam> free_params;
    std::vector<Bound> bounds;  // one per free parameter; empty → ±50% of the initial value

    void validate() const;
};

struct ModelSpec {
    int n_charge = 101;
    int D = 8;
    int d_a = 3;
    int d_c = 3;
    int fock_buffer = 40;
    double min_overlap = 0.5;  // labeling needs a dressed state with this much bare weight
};

struct FluxTransitions {
    double flux_ext = 0;
    std::vector<double> freq;  // per requested id; NaN when labeling failed
    double chi_qc = 0;         // E(1,0,1) − E(1,0,0) − E(0,0,1) + E(0,0,0)
};

// Three-mode model at each flux, states labeled by bare-state overlap.
std::vector<FluxTransitions> model_transitions(const CircuitParams& p, const std::vector<double>& flux_grid,
                                               const std::vector<Transition>& ids, const ModelSpec& spec = {});

inline constexpr double kInvalidPenalty = 1e6;

struct CostBreakdown {
    double total = 0;
    std::vector<double> residuals;  // (model − data)/band per point; NaN when invalid
    std::vector<double> anchor_residuals;
    int invalid = 0;
};

CostBreakdown weighted_cost_breakdown(const FitProblem& problem, const CircuitParams& trial,
                                      const ModelSpec& spec = {});
double weighted_cost(const FitProblem& problem, const CircuitParams& trial, const ModelSpec& spec = {});

struct FitOptions {
    int multistarts = 8;
    double start_spread = 0.1;  // relative perturbation of the extra starts
    std::uint64_t seed = 1;
    int max_iter = 3000;
    double size_tol = 1e-7;
    int threads = 0;
    ModelSpec model;
};

struct StartReport {
    std::vector<double> initial;
    std::vector<double> final;
    double cost = 0;
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    CircuitParams params;
    double cost = 0;
    std::vector<double> residuals;
    std::vector<double> anchor_residuals;
    std::vector<StartReport> starts;
    int best_start = 0;
    bool converged = false;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, FitResult best) : std::runtime_error(what), best_effort(std::move(best)) {}
    FitResult best_effort;
};

FitResult fit(const FitProblem& problem, const CircuitParams& initial, const FitOptions& opt = {});

// Condition number of the band-weighted Jacobian of every point with respect
// to log-parameters, by central differences and SVD.
struct Identifiability {
    double condition_number = 0;
    std::vector<double> singular_values;
    int rank = 0;
};

Identifiability jacobian_condition(const FitProblem& problem, const CircuitParams& p, double rel_step = 1e-4,
                                   const ModelSpec& spec = {});

// Synthetic points from `truth` on a uniform flux grid; multiplicative Gaussian
// noise of relative size `noise` (0 for none).
std::vector<DigitizedPoint> synthetic_points(const CircuitParams& truth, double flux_min, double flux_max,
                                             int flux_count, const std::vector<Transition>& ids, double band,
                                             double noise, std::uint64_t seed, const ModelSpec& spec = {});

}  // namespace mist
