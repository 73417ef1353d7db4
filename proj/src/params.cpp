#include "mist/params.hpp"
#include "mist/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mist {

namespace {

using Field = double CircuitParams::*;

const std::map<std::string, Field>& field_table()
{
    static const std::map<std::string, Field> table = {
        {"E_Cq", &CircuitParams::E_Cq},
        {"E_J", &CircuitParams::E_J},
        {"n_g", &CircuitParams::n_g},
        {"E_Ca", &CircuitParams::E_Ca},
        {"L_a0", &CircuitParams::L_a0},
        {"omega_c_bare", &CircuitParams::omega_c_bare},
        {"g_ac", &CircuitParams::g_ac},
        {"flux_ext", &CircuitParams::flux_ext},
        {"n_bar", &CircuitParams::n_bar},
        {"omega_d", &CircuitParams::omega_d},
        {"kappa_c", &CircuitParams::kappa_c},
        {"chi_qc_target", &CircuitParams::chi_qc_target},
    };
    return table;
}

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> CircuitParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw std::invalid_argument(std::string("CircuitParams: ") + what);
    };
    require(std::isfinite(E_Cq) && E_Cq > 0, "E_Cq must be > 0");
    require(std::isfinite(E_J) && E_J > 0, "E_J must be > 0");
    require(std::isfinite(E_Ca) && E_Ca > 0, "E_Ca must be > 0");
    require(std::isfinite(L_a0) && L_a0 > 0, "L_a0 must be > 0");
    require(std::isfinite(omega_c_bare) && omega_c_bare > 0, "omega_c_bare must be > 0");
    require(std::isfinite(n_bar) && n_bar >= 0, "n_bar must be >= 0");
    require(std::isfinite(g_ac) && std::isfinite(flux_ext) && std::isfinite(n_g), "non-finite parameter");

    std::vector<std::string> warnings;
    if (2.0 * E_J / E_Cq <= 20.0)
        warnings.push_back("2E_J/E_Cq <= 20: outside the transmon regime");
    return warnings;
}

void HilbertSpec::validate(const CircuitParams& p) const
{
    if (n_charge % 2 == 0 || n_charge < 3)
        throw std::invalid_argument("HilbertSpec: n_charge must be odd");
    if (n_charge < 4.0 * std::sqrt(2.0 * p.E_J / p.E_Cq))
        throw std::invalid_argument("HilbertSpec: n_charge below 4*sqrt(2E_J/E_Cq)");
    if (D < 6)
        throw std::invalid_argument("HilbertSpec: D must be >= 6");
    if (D > n_charge)
        throw std::invalid_argument("HilbertSpec: D exceeds n_charge");
    if (d_c < 2)
        throw std::invalid_argument("HilbertSpec: d_c must be >= 2");
    if (d_a < 1)
        throw std::invalid_argument("HilbertSpec: d_a must be >= 1");
    if (fock_buffer < 0)
        throw std::invalid_argument("HilbertSpec: fock_buffer must be >= 0");
}

double units::josephson_inductance_nH(double E_J_GHz)
{
    const double phi0 = hbar / (2.0 * e_charge);
    const double E = E_J_GHz * 1e9 * planck;
    return phi0 * phi0 / E * 1e9;
}

CircuitParams parse_params(const std::string& text)
{
    CircuitParams p;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("params line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = field_table().find(key);
        if (it == field_table().end())
            throw std::invalid_argument("params line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || trim(value.substr(used)).size() != 0)
            throw std::invalid_argument("params line " + std::to_string(lineno) + ": bad number '" + value + "'");
        p.*(it->second) = v;
    }
    p.validate();
    return p;
}

CircuitParams load_params(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open params file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_params(ss.str());
}

std::string format_params(const CircuitParams& p)
{
    std::string out;
    for (const auto& [key, field] : field_table())
        out += key + " = " + format_number(p.*field) + "\n";
    return out;
}

}  // namespace mist
