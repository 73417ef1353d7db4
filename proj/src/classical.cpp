#include "mist/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mist/bessel.hpp"
#include "mist/optim.hpp"
#include "mist/parallel.hpp"

namespace mist {

namespace {

constexpr double kMaxEta = 50.0;
constexpr double kTailTolerance = 1e-12;
constexpr int kMinStepsPerPeriod = 64;

double sgn_pow(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

const char* coupling_kind_name(CouplingKind k)
{
    return k == CouplingKind::CosPhi ? "cosphi" : "transverse";
}

CouplingKind parse_coupling_kind(const std::string& s)
{
    if (s == "cosphi")
        return CouplingKind::CosPhi;
    if (s == "transverse")
        return CouplingKind::Transverse;
    throw std::invalid_argument("unknown model '" + s + "' (cosphi, transverse)");
}

HarmonicSeries harmonic_series(CouplingKind kind, double eta, double flux_ext_bar, double E_J, double E_Cq,
                               double omega_d)
{
    if (!(eta >= 0) || eta > kMaxEta)
        throw std::invalid_argument("harmonic_series: drive amplitude eta = " + std::to_string(eta) +
                                    " outside [0, 50]");
    if (!(E_J > 0) || !(E_Cq > 0) || !(omega_d > 0))
        throw std::invalid_argument("harmonic_series: E_J, E_Cq, omega_d must be positive");
    HarmonicSeries s;
    s.kind = kind;
    s.eta = eta;
    s.flux_ext_bar = flux_ext_bar;
    s.two_E_J = 2.0 * E_J;
    s.E_Cq = E_Cq;
    s.omega_d = omega_d;

    int nh = static_cast<int>(std::ceil(eta)) + 12;
    std::vector<double> J;
    for (;;) {
        J = bessel_j_sequence(nh, eta);
        if (std::abs(J[nh]) < kTailTolerance && std::abs(J[nh - 1]) < kTailTolerance)
            break;
        nh += 4;
    }
    s.n_max = nh;
    s.coeff.assign(2 * nh + 1, 0.0);
    const double cb = std::cos(flux_ext_bar), sb = std::sin(flux_ext_bar);
    for (int k = 0; k <= nh; ++k) {
        double pos, neg;
        if (kind == CouplingKind::Transverse) {
            pos = s.two_E_J * J[k];
            neg = sgn_pow(k) * pos;
        } else if (k % 2 == 0) {
            pos = neg = sgn_pow(k / 2) * s.two_E_J * cb * J[k];
        } else {
            pos = neg = sgn_pow((k + 1) / 2) * s.two_E_J * sb * J[k];
        }
        s.coeff[nh + k] = pos;
        s.coeff[nh - k] = neg;
    }
    return s;
}

HarmonicSeries harmonic_coefficients(CouplingKind kind, const CircuitParams& p, const DerivedModes& modes,
                                     double n_bar)
{
    if (!(n_bar >= 0))
        throw std::invalid_argument("harmonic_coefficients: n_bar must be >= 0");
    double eta;
    double fbar = modes.phi_ext_bar;
    if (kind == CouplingKind::CosPhi) {
        eta = 2.0 * std::abs(modes.phi_c) * std::sqrt(n_bar);
    } else {
        eta = 2.0 * matched_transverse_coupling(modes) * std::sqrt(n_bar) / p.omega_d;
        fbar = 0.0;
    }
    return harmonic_series(kind, eta, fbar, p.E_J, p.E_Cq, p.omega_d);
}

double drive_potential(const HarmonicSeries& s, double phi, double t)
{
    double acc = 0.0;
    const double w = units::two_pi * s.omega_d * t;
    for (int k = -s.n_max; k <= s.n_max; ++k) {
        double a = s.A(k);
        if (a != 0.0)
            acc += a * std::cos(phi - k * w);
    }
    return acc;
}

std::vector<Separatrix> separatrices(const HarmonicSeries& s, int m_max, int samples)
{
    if (samples < 2)
        throw std::invalid_argument("separatrices: need at least 2 samples");
    std::vector<Separatrix> out;
    for (int m = -m_max; m <= m_max; ++m) {
        const double A = s.A(m);
        if (A == 0.0)
            continue;
        Separatrix sx;
        sx.m = m;
        sx.center_n = m * s.omega_d / (8.0 * s.E_Cq);
        sx.width = std::sqrt(2.0 * std::abs(A) / s.E_Cq);
        const double sign = A > 0 ? 1.0 : -1.0;
        sx.psi.resize(samples);
        sx.n_upper.resize(samples);
        sx.n_lower.resize(samples);
        for (int i = 0; i < samples; ++i) {
            double psi = -units::pi + units::two_pi * i / (samples - 1);
            double half = std::sqrt(std::max(0.0, std::abs(A) * (1.0 + sign * std::cos(psi)) / (4.0 * s.E_Cq)));
            sx.psi[i] = psi;
            sx.n_upper[i] = sx.center_n + half;
            sx.n_lower[i] = sx.center_n - half;
        }
        out.push_back(std::move(sx));
    }
    return out;
}

ChirikovMargin chirikov_margin(const HarmonicSeries& s, const CircuitParams& p)
{
    const double wp = std::sqrt(16.0 * p.E_J * p.E_Cq);
    std::vector<double> J = bessel_j_sequence(2, s.eta);
    ChirikovMargin c;
    if (s.kind == CouplingKind::CosPhi) {
        c.lhs = s.omega_d / wp;
        c.rhs = std::sqrt(std::abs(J[0])) + std::sqrt(std::abs(J[2]));
    } else {
        c.lhs = s.omega_d / (2.0 * wp);
        c.rhs = std::sqrt(std::abs(J[0])) + std::sqrt(std::abs(J[1]));
    }
    c.ratio = c.lhs / c.rhs;
    return c;
}

ChirikovScan chirikov_scan(CouplingKind kind, const CircuitParams& p, const DerivedModes& modes, double n_bar_max,
                           int samples)
{
    if (!(n_bar_max > 0) || samples < 3)
        throw std::invalid_argument("chirikov_scan: need n_bar_max > 0 and samples >= 3");
    auto margin = [&](double nb) {
        return chirikov_margin(harmonic_coefficients(kind, p, modes, std::clamp(nb, 0.0, n_bar_max)), p).ratio;
    };
    ChirikovScan scan;
    scan.n_bar.resize(samples);
    scan.ratio.resize(samples);
    for (int i = 0; i < samples; ++i) {
        scan.n_bar[i] = n_bar_max * i / (samples - 1);
        scan.ratio[i] = margin(scan.n_bar[i]);
    }
    ScalarMinimum best = grid_then_brent(margin, 0.0, n_bar_max, samples, 1e-8);
    scan.min_ratio = best.f;
    scan.argmin_n_bar = best.x;
    return scan;
}

double wrap_phase(double phi)
{
    double w = std::fmod(phi + units::pi, units::two_pi);
    if (w < 0)
        w += units::two_pi;
    w -= units::pi;
    return w >= units::pi ? -units::pi : w;
}

SplitStepper::SplitStepper(const HarmonicSeries& s, int steps_per_period) : spp_(steps_per_period)
{
    if (steps_per_period < kMinStepsPerPeriod)
        throw std::invalid_argument("integrator: steps_per_period must be >= 64");
    dt_ = s.period() / spp_;
    cos_table_.assign(spp_, 0.0);
    sin_table_.assign(spp_, 0.0);
    for (int i = 0; i < spp_; ++i) {
        // kick at the midpoint of step i; k ω_d t reduced exactly on the step grid
        for (int k = -s.n_max; k <= s.n_max; ++k) {
            double a = s.A(k);
            if (a == 0.0)
                continue;
            double frac = std::fmod(k * (i + 0.5), static_cast<double>(spp_)) / spp_;
            double arg = units::two_pi * frac;
            cos_table_[i] += a * std::cos(arg);
            sin_table_[i] += a * std::sin(arg);
        }
    }
    plan_.cos_table = cos_table_.data();
    plan_.sin_table = sin_table_.data();
    plan_.table_len = spp_;
    plan_.drift = units::two_pi * 8.0 * s.E_Cq * dt_ / 2.0;
    plan_.kick = units::two_pi * dt_;
}

void SplitStepper::advance(double* phi, double* n, std::size_t lanes, long long first_step, long long steps,
                           simd::Isa isa) const
{
    simd::split_step(isa, plan_, phi, n, lanes, first_step, steps);
}

namespace {

bool undriven(const HarmonicSeries& s)
{
    for (int k = -s.n_max; k <= s.n_max; ++k)
        if (k != 0 && s.A(k) != 0.0)
            return false;
    return true;
}

double pendulum_energy(const HarmonicSeries& s, double phi, double n)
{
    return 4.0 * s.E_Cq * n * n - s.A(0) * std::cos(phi);
}

// Wraps φ into [−π, π) and returns the number of 2π turns removed.
long long unwrap_turns(double& phi)
{
    double turns = std::floor((phi + units::pi) / units::two_pi);
    phi -= turns * units::two_pi;
    if (phi >= units::pi) {
        phi -= units::two_pi;
        turns += 1;
    }
    return static_cast<long long>(turns);
}

}  // namespace

Trajectory integrate_trajectory(const HarmonicSeries& s, PhasePoint ic, int n_periods, const TrajectoryOptions& opt)
{
    if (n_periods < 0)
        throw std::invalid_argument("integrate_trajectory: n_periods must be >= 0");
    if (opt.samples_per_period < 1 || opt.steps_per_period % opt.samples_per_period != 0)
        throw std::invalid_argument("integrate_trajectory: samples_per_period must divide steps_per_period");
    SplitStepper stepper(s, opt.steps_per_period);
    const int stride = opt.steps_per_period / opt.samples_per_period;
    const long long total = 1LL * n_periods * opt.samples_per_period;

    Trajectory tr;
    tr.t.reserve(total + 1);
    tr.phi.reserve(total + 1);
    tr.n.reserve(total + 1);
    tr.winding.reserve(total + 1);

    double phi = ic.phi, n = ic.n;
    long long winding = unwrap_turns(phi);
    const bool energy = undriven(s);
    std::vector<double> E;
    auto record = [&](long long sample) {
        tr.t.push_back(sample * stride * stepper.dt());
        tr.phi.push_back(phi);
        tr.n.push_back(n);
        tr.winding.push_back(winding);
        if (energy)
            E.push_back(pendulum_energy(s, phi, n));
    };
    record(0);
    for (long long k = 0; k < total; ++k) {
        stepper.advance(&phi, &n, 1, k * stride, stride, opt.isa);
        winding += unwrap_turns(phi);
        record(k + 1);
    }

    if (!energy || E.size() < 2) {
        tr.energy_drift = energy ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        tr.energy_excursion = energy ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        return tr;
    }
    // least-squares slope of E(t); drift = slope · duration / |E0|
    const double scale = std::max(std::abs(E[0]), std::numeric_limits<double>::min());
    const std::size_t m = E.size();
    double tm = 0, em = 0;
    for (std::size_t i = 0; i < m; ++i) {
        tm += tr.t[i];
        em += E[i];
    }
    tm /= m;
    em /= m;
    double sxy = 0, sxx = 0, excursion = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxy += (tr.t[i] - tm) * (E[i] - em);
        sxx += (tr.t[i] - tm) * (tr.t[i] - tm);
        excursion = std::max(excursion, std::abs(E[i] - E[0]));
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    tr.energy_drift = std::abs(slope * (tr.t.back() - tr.t.front())) / scale;
    tr.energy_excursion = excursion / scale;
    return tr;
}

std::vector<PhasePoint> default_ic_grid(const HarmonicSeries& s, int count, int m_max, int ring_points)
{
    if (count < 2)
        throw std::invalid_argument("default_ic_grid: count must be >= 2");
    const double center = std::abs(m_max * s.omega_d / (8.0 * s.E_Cq));
    const double width = std::sqrt(2.0 * std::abs(s.A(m_max)) / s.E_Cq);
    const double span = center + 2.0 * width;
    std::vector<PhasePoint> ics;
    for (int i = 0; i < count; ++i)
        ics.push_back({0.0, -span + 2.0 * span * i / (count - 1)});
    if (ring_points > 0) {
        for (const Separatrix& sx : separatrices(s, m_max, 2 * ring_points + 1)) {
            for (int i = 0; i < ring_points; ++i) {
                // alternate upper and lower branches at evenly spaced ψ
                int idx = 2 * i + 1;
                double n = (i % 2 == 0) ? sx.n_upper[idx] : sx.n_lower[idx];
                ics.push_back({wrap_phase(sx.psi[idx]), n});
            }
        }
    }
    return ics;
}

PoincareSection poincare_section(const HarmonicSeries& s, const std::vector<PhasePoint>& ics,
                                 const PoincareOptions& opt)
{
    if (opt.n_periods < 1)
        throw std::invalid_argument("poincare_section: n_periods must be >= 1");
    if (!(opt.perturbation > 0))
        throw std::invalid_argument("poincare_section: perturbation must be positive");
    SplitStepper stepper(s, opt.steps_per_period);
    const std::size_t N = ics.size();
    const int spp = opt.steps_per_period;

    PoincareSection sec;
    sec.period = s.period();
    sec.initial_conditions = ics;
    sec.points.assign(N, {});
    sec.separatrices = separatrices(s, opt.separatrix_m_max);
    sec.chaos.threshold_per_period = opt.chaos_threshold;
    sec.chaos.lyapunov.assign(N, 0.0);
    sec.chaos.lyapunov_per_period.assign(N, 0.0);
    sec.chaos.chaotic.assign(N, 0);
    if (N == 0)
        return sec;

    // trajectories run in blocks; each block holds references then shadows as contiguous lanes
    constexpr std::size_t kBlock = 16;
    const std::size_t blocks = (N + kBlock - 1) / kBlock;
    const double d0 = opt.perturbation;
    const double shift = d0 / std::sqrt(2.0);

    parallel_for(
        blocks,
        [&](std::size_t b) {
            const std::size_t lo = b * kBlock, hi = std::min(N, lo + kBlock), L = hi - lo;
            std::vector<double> phi(2 * L), n(2 * L), log_sum(L, 0.0);
            for (std::size_t i = 0; i < L; ++i) {
                phi[i] = ics[lo + i].phi;
                n[i] = ics[lo + i].n;
                phi[L + i] = phi[i] + shift;
                n[L + i] = n[i] + shift;
            }
            for (std::size_t i = 0; i < L; ++i) {
                sec.points[lo + i].reserve(opt.n_periods);
            }
            for (int period = 0; period < opt.n_periods; ++period) {
                stepper.advance(phi.data(), n.data(), 2 * L, 1LL * period * spp, spp, opt.isa);
                for (std::size_t i = 0; i < L; ++i) {
                    double dphi = phi[L + i] - phi[i], dn = n[L + i] - n[i];
                    double d = std::hypot(dphi, dn);
                    if (!(d > 0))
                        d = std::numeric_limits<double>::min();
                    log_sum[i] += std::log(d / d0);
                    unwrap_turns(phi[i]);
                    phi[L + i] = phi[i] + dphi * (d0 / d);
                    n[L + i] = n[i] + dn * (d0 / d);
                    sec.points[lo + i].push_back({phi[i], n[i]});
                }
            }
            const double duration = opt.n_periods * s.period();
            for (std::size_t i = 0; i < L; ++i) {
                double lam = log_sum[i] / duration;
                sec.chaos.lyapunov[lo + i] = lam;
                sec.chaos.lyapunov_per_period[lo + i] = lam * s.period();
                sec.chaos.chaotic[lo + i] = lam * s.period() > opt.chaos_threshold ? 1 : 0;
            }
        },
        opt.threads);

    std::size_t chaotic = 0;
    for (char c : sec.chaos.chaotic)
        chaotic += c ? 1 : 0;
    sec.chaos.chaotic_fraction = static_cast<double>(chaotic) / N;
    return sec;
}

}  // namespace mist
