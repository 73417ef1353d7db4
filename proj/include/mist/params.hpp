#pragma once

#include <string>
#include <vector>

namespace mist {

// Energies are E/h in GHz, frequencies are cyclic GHz, inductances nH.
struct CircuitParams {
    double E_Cq = 0.0734;
    double E_J = 3.96;          // single junction; the transmon mode sees 2E_J
    double n_g = 0.0;
    double E_Ca = 0.0335;
    double L_a0 = 4.24;
    double omega_c_bare = 7.23;
    double g_ac = 0.215;
    double flux_ext = 0.0;      // Φ/Φ0
    double n_bar = 0.0;
    double omega_d = 7.294;
    double kappa_c = 0.0172;
    double chi_qc_target = -0.00202;

    // Throws std::invalid_argument on hard violations, returns soft warnings.
    std::vector<std::string> validate() const;
};

struct HilbertSpec {
    int n_charge = 501;
    int D = 10;
    int d_c = 200;
    int d_a = 1;
    int fock_buffer = 40;

    void validate(const CircuitParams& p) const;

    static HilbertSpec desk() { return {}; }
    static HilbertSpec full() { return {501, 20, 500, 1, 40}; }
};

namespace units {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double e_charge = 1.602176634e-19;
inline constexpr double k_boltzmann = 1.380649e-23;
// h·(1 GHz)/k_B in mK
inline constexpr double mK_per_GHz = planck * 1e9 / k_boltzmann * 1e3;

// Josephson inductance in nH of a junction with E_J/h given in GHz.
double josephson_inductance_nH(double E_J_GHz);
}  // namespace units

// Flat "key = value" text, '#' comments. Unknown keys are rejected.
CircuitParams load_params(const std::string& path);
CircuitParams parse_params(const std::string& text);
std::string format_params(const CircuitParams& p);

}  // namespace mist
