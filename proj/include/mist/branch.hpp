#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mist/hilbert.hpp"
#include "mist/linalg.hpp"

namespace mist {

struct LabelOptions {
    double usable_fraction = 0.9;  // top of the Fock ladder excluded
    double tie_tolerance = 1e-3;
    double min_confidence = 0.1;
};

struct LabelEvent {
    enum class Kind { Tie, LadderBreak };
    Kind kind;
    int j;
    int n_c;
    std::string detail;
};

// Labeled dressed states |j, n_c⟩ for n_c < d_c_usable. Unlabeled entries are NaN / −1.
struct BranchTable {
    int D = 0;
    int d_c = 0;
    int d_c_usable = 0;
    double flux_ext = std::numeric_limits<double>::quiet_NaN();
    RMatrix energy;       // D × d_c_usable, GHz
    RMatrix nt;           // ⟨N_t⟩
    RMatrix confidence;   // overlap used at the labeling step
    Eigen::MatrixXi index;  // eigenstate index
    // transmon_weight[j'](j, n): weight of labeled state (j, n) on bare transmon level j'
    std::vector<RMatrix> transmon_weight;
    std::vector<LabelEvent> events;

    bool labeled(int j, int n) const { return n >= 0 && n < d_c_usable && index(j, n) >= 0; }
    int branch_length(int j) const;
};

BranchTable label_branches(const EigenSystem& es, int D, int d_c, const LabelOptions& opt = {});

struct BranchAnalysis {
    BranchTable table;
    EigenSystem eig;
};

BranchAnalysis diagonalize_and_label(const HermitianOperator& H, int D, int d_c, const LabelOptions& opt = {});

// ⟨N_t⟩ of every labeled state from eigenvectors in the bare product basis.
RMatrix nt_expectation(const BranchTable& table, const EigenSystem& es);

enum class CrossingKind { Exact, Avoided };
const char* crossing_kind_name(CrossingKind k);

struct CrossingEvent {
    int j_lo = 0;
    int j_hi = 0;
    int delta = 1;
    double n_c_star = 0;  // on the photon axis of the lower-j branch
    double gap_MHz = 0;
    CrossingKind kind = CrossingKind::Exact;
    double flux_ext = std::numeric_limits<double>::quiet_NaN();
};

struct CrossingOptions {
    double gap_threshold_MHz = 0.05;
    int delta = 1;  // photons exchanged: |j_hi, n⟩ ↔ |j_lo, n + delta⟩
};

// Crossings between E(j_hi, n) and E(j_lo, n + delta). Sign changes of the
// detuning are crossings the labels passed through; local minima are kept
// when the two branches exchange transmon character. The gap is estimated
// from the pair's two-level mixing, |ΔE|·2√(p(1−p)).
std::vector<CrossingEvent> find_crossings(const BranchTable& table, const std::vector<std::pair<int, int>>& pairs,
                                          const CrossingOptions& opt = {});

// E(j_hi, n) − E(j_lo, n + delta) at n = 0, in GHz; NaN when unlabeled.
double zero_photon_detuning(const BranchTable& table, int j_lo, int j_hi, int delta = 1);

struct StarkCurve {
    int j = 0;
    int j_prime = 1;
    RVector n_c;
    RVector freq;  // [E(j', n) − E(j, n)], GHz
    double slope = 0;      // GHz per photon over the fit window
    double intercept = 0;
    int window = 20;
};

StarkCurve ac_stark_curve(const BranchTable& table, std::pair<int, int> j_pair = {0, 1}, int window = 20);

// Photon number where the linear fit reaches `target` GHz.
double extrapolate_crossing(const StarkCurve& curve, double target);

struct MistMapOptions {
    CrossingOptions crossing;
    LabelOptions label;
    int threads = 0;
};

struct MistPoint {
    double flux_ext = 0;
    double n_c_star = std::numeric_limits<double>::quiet_NaN();  // first avoided crossing
    double gap_MHz = std::numeric_limits<double>::quiet_NaN();
    double zero_photon_detuning = std::numeric_limits<double>::quiet_NaN();  // GHz
};

struct MistCurve {
    std::pair<int, int> pair;
    std::vector<MistPoint> points;
    // flux where the zero-photon detuning changes sign; NaN if not bracketed
    double vanish_flux_negative = std::numeric_limits<double>::quiet_NaN();
    double vanish_flux_positive = std::numeric_limits<double>::quiet_NaN();
};

struct MistMap {
    std::vector<double> flux;
    std::vector<MistCurve> curves;
    std::vector<CrossingEvent> events;  // every event at every flux
};

MistMap mist_map_over_flux(const CircuitParams& p, const std::vector<double>& flux_grid,
                           const std::vector<std::pair<int, int>>& pairs, const HilbertSpec& spec,
                           const MistMapOptions& opt = {});

}  // namespace mist
