#include "mist/readout.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <gsl/gsl_fit.h>

#include "mist/hilbert.hpp"
#include "mist/io.hpp"
#include "mist/optim.hpp"

namespace mist {

std::vector<double> linear_dispersive_shifts(double chi_qc, int count)
{
    if (count < 1)
        throw std::invalid_argument("linear_dispersive_shifts: count must be >= 1");
    std::vector<double> chi(count);
    for (int k = 0; k < count; ++k)
        chi[k] = k * chi_qc;
    return chi;
}

std::vector<PointerState> pointer_positions(const CircuitParams& p, const std::vector<double>& chi_per_state,
                                            double omega_drive, const PointerOptions& opt)
{
    if (!(p.kappa_c > 0))
        throw std::invalid_argument("pointer_positions: kappa_c must be positive");
    if (!(opt.snr > 0))
        throw std::invalid_argument("pointer_positions: snr must be positive");
    const double wc = std::isnan(opt.omega_cavity) ? normal_modes(p).omega_c_pol : opt.omega_cavity;
    const double half = p.kappa_c / 2.0;
    std::vector<PointerState> out;
    for (std::size_t k = 0; k < chi_per_state.size(); ++k) {
        const double delta = omega_drive - wc - chi_per_state[k];
        out.push_back({static_cast<int>(k), half / IQ(half, -delta), 1.0 / opt.snr});
    }
    return out;
}

std::vector<int> classify(const std::vector<IQ>& points, const std::vector<PointerState>& states,
                          const ClassifyOptions& opt)
{
    std::vector<const PointerState*> resolved;
    IQ far_centroid{0, 0};
    double far_sigma = 0;
    int far_count = 0;
    for (const PointerState& s : states) {
        if (!(s.sigma > 0))
            throw std::invalid_argument("classify: pointer sigma must be positive");
        if (s.k < opt.resolved) {
            resolved.push_back(&s);
        } else {
            far_centroid += s.center;
            far_sigma += s.sigma;
            ++far_count;
        }
    }
    for (std::size_t a = 0; a < resolved.size(); ++a)
        for (std::size_t b = a + 1; b < resolved.size(); ++b) {
            double reach = opt.radius_factor * (resolved[a]->sigma + resolved[b]->sigma);
            if (std::abs(resolved[a]->center - resolved[b]->center) < reach)
                throw std::invalid_argument("classify: thresholds of states " + std::to_string(resolved[a]->k) +
                                            " and " + std::to_string(resolved[b]->k) + " overlap");
        }
    if (far_count) {
        far_centroid /= static_cast<double>(far_count);
        far_sigma /= far_count;
    }

    std::vector<int> labels(points.size(), kLabelOutlier);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (const PointerState* s : resolved)
            if (std::abs(points[i] - s->center) <= opt.radius_factor * s->sigma) {
                labels[i] = s->k;
                break;
            }
        if (labels[i] == kLabelOutlier && far_count &&
            std::abs(points[i] - far_centroid) <= opt.wide_radius_factor * far_sigma)
            labels[i] = kLabelSixPlus;
    }
    return labels;
}

IqSample sample_pointer_states(const std::vector<PointerState>& states, int per_state, std::uint64_t seed)
{
    if (per_state < 0)
        throw std::invalid_argument("sample_pointer_states: per_state must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    IqSample out;
    out.points.reserve(states.size() * per_state);
    for (const PointerState& s : states)
        for (int i = 0; i < per_state; ++i) {
            double x = normal(rng), y = normal(rng);
            out.points.push_back(s.center + s.sigma * IQ(x, y));
            out.truth.push_back(s.k);
        }
    return out;
}

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& labels, int resolved)
{
    if (truth.size() != labels.size())
        throw std::invalid_argument("confusion_matrix: size mismatch");
    Confusion c;
    const int cols = resolved + 2;  // resolved, 6+, outlier
    int rows = resolved + 1;
    for (int t : truth)
        rows = std::max(rows, t + 1);
    c.counts.assign(rows, std::vector<long long>(cols, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        int col = labels[i] == kLabelOutlier ? cols - 1 : std::min(labels[i], resolved);
        c.counts[truth[i]][col]++;
    }
    for (int k = 0; k < resolved && k < rows; ++k) {
        long long total = 0, adjacent = 0, wrong = 0;
        for (int j = 0; j < cols; ++j)
            total += c.counts[k][j];
        if (!total)
            continue;
        for (int j = 0; j < resolved; ++j) {
            if (j == k)
                continue;
            wrong += c.counts[k][j];
            if (std::abs(j - k) == 1)
                adjacent += c.counts[k][j];
        }
        c.adjacent_confusion = std::max(c.adjacent_confusion, static_cast<double>(adjacent) / total);
        c.misassignment = std::max(c.misassignment, static_cast<double>(wrong) / total);
    }
    return c;
}

std::vector<double> boltzmann_populations(const std::vector<double>& energies, double T_mK, int states)
{
    if (states < 1 || static_cast<std::size_t>(states) > energies.size())
        throw std::invalid_argument("boltzmann_populations: not enough energies");
    std::vector<double> p(states);
    double z = 0;
    for (int k = 0; k < states; ++k) {
        p[k] = std::exp(-(energies[k] - energies[0]) * units::mK_per_GHz / T_mK);
        z += p[k];
    }
    for (double& v : p)
        v /= z;
    return p;
}

ThermalFitResult thermal_fit(const std::vector<double>& populations, const std::vector<double>& energies,
                             const ThermalFitOptions& opt)
{
    const int m = opt.fitted_states;
    if (m < 2 || populations.size() < static_cast<std::size_t>(m) || energies.size() < static_cast<std::size_t>(m))
        throw std::invalid_argument("thermal_fit: need populations and energies for every fitted state");
    std::vector<double> obs(populations.begin(), populations.begin() + m);
    double sum = 0;
    for (double v : obs) {
        if (!(v >= 0))
            throw std::invalid_argument("thermal_fit: populations must be nonnegative");
        sum += v;
    }
    if (!(sum > 0))
        throw std::invalid_argument("thermal_fit: populations sum to zero");
    for (double& v : obs)
        v /= sum;

    ThermalFitResult r;
    for (int k = 1; k < m; ++k)
        if (obs[k] > obs[k - 1])
            r.non_monotone = true;

    auto cost = [&](double logT) {
        std::vector<double> model = boltzmann_populations(energies, std::pow(10.0, logT), m);
        double acc = 0;
        for (int k = 0; k < m; ++k)
            acc += (model[k] - obs[k]) * (model[k] - obs[k]);
        return acc;
    };
    const double lo = std::log10(opt.T_min_mK), hi = std::log10(opt.T_max_mK);
    ScalarMinimum best = grid_then_brent(cost, lo, hi, 801, 1e-12);
    const double step = (hi - lo) / 800;
    r.T_eff_mK = std::pow(10.0, best.x);
    r.populations = boltzmann_populations(energies, r.T_eff_mK, m);
    r.residual = std::sqrt(best.f / m);
    if (best.x >= hi - step) {
        r.infinite_temperature = true;
        r.T_eff_mK = std::numeric_limits<double>::infinity();
    }
    r.below_1mK = r.T_eff_mK < 1.0;
    r.large_residual = r.residual > opt.residual_flag;
    return r;
}

PhotonCalibration photon_calibration(const std::vector<StarkPoint>& points, double chi_qc)
{
    if (chi_qc == 0 || !std::isfinite(chi_qc))
        throw std::invalid_argument("photon_calibration: chi_qc must be nonzero");
    if (points.empty())
        throw std::invalid_argument("photon_calibration: no points");
    PhotonCalibration c;
    for (const StarkPoint& pt : points) {
        if (pt.shift * chi_qc < 0)
            throw std::invalid_argument("photon_calibration: Stark shift at power " + format_number(pt.power) +
                                        " has the opposite sign to chi_qc");
        c.power.push_back(pt.power);
        c.n_bar.push_back(pt.shift / chi_qc);
    }
    auto [mn, mx] = std::minmax_element(c.power.begin(), c.power.end());
    c.power_min = *mn;
    c.power_max = *mx;
    if (c.power_max > c.power_min) {
        double cov00, cov01, cov11, sumsq;
        gsl_fit_linear(c.power.data(), 1, c.n_bar.data(), 1, c.power.size(), &c.intercept, &c.slope, &cov00, &cov01,
                       &cov11, &sumsq);
    } else {
        c.slope = c.intercept = std::numeric_limits<double>::quiet_NaN();
    }
    return c;
}

double PulseEnvelope::total_duration() const
{
    double t = 0;
    for (const Segment& s : segments)
        t += s.duration;
    return t;
}

void PulseEnvelope::validate() const
{
    if (segments.empty())
        throw std::invalid_argument("pulse envelope has no segments");
    for (const Segment& s : segments)
        if (!(s.duration > 0))
            throw std::invalid_argument("pulse segment durations must be positive");
    if (hold_segment < 0 || hold_segment >= static_cast<int>(segments.size()))
        throw std::invalid_argument("pulse envelope hold segment out of range");
}

PulseEnvelope square_pulse(IQ amplitude, double duration)
{
    PulseEnvelope e{{{duration, amplitude}}, 0};
    e.validate();
    return e;
}

namespace {

constexpr double kMinSegment = 2.0;  // ns

// α after time τ under constant drive ε: α e^{λτ} + ε (e^{λτ} − 1)/λ
IQ propagate(IQ alpha, IQ eps, IQ lambda, double tau)
{
    IQ e = std::exp(lambda * tau);
    return alpha * e + eps * (e - 1.0) / lambda;
}

// drive that moves α0 to α1 in time τ
IQ solve_drive(IQ alpha0, IQ alpha1, IQ lambda, double tau)
{
    IQ e = std::exp(lambda * tau);
    return (alpha1 - alpha0 * e) * lambda / (e - 1.0);
}

// Time after which |α(t) − target| stays ≤ thr on [t0, t1], linearly interpolated on the sample grid.
double settle_time(const std::vector<double>& t, const std::vector<IQ>& a, double t0, double t1, IQ target,
                   double thr)
{
    std::ptrdiff_t last_bad = -1, first = -1;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12)
            continue;
        if (first < 0)
            first = static_cast<std::ptrdiff_t>(i);
        if (std::abs(a[i] - target) > thr)
            last_bad = static_cast<std::ptrdiff_t>(i);
    }
    if (first < 0)
        return std::numeric_limits<double>::quiet_NaN();
    if (last_bad < 0)
        return 0.0;
    std::size_t i = last_bad;
    if (i + 1 >= t.size() || t[i + 1] > t1 + 1e-12)
        return std::numeric_limits<double>::quiet_NaN();
    double e0 = std::abs(a[i] - target), e1 = std::abs(a[i + 1] - target);
    double frac = e0 > e1 ? (e0 - thr) / (e0 - e1) : 1.0;
    return t[i] + frac * (t[i + 1] - t[i]) - t0;
}

struct Sampled {
    std::vector<double> t;
    std::vector<IQ> alpha;
};

Sampled sample_response(const std::vector<Segment>& segs, IQ lambda, IQ alpha0, double dt, double horizon)
{
    Sampled s;
    const std::size_t n = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1;
    s.t.resize(n);
    s.alpha.resize(n);
    double seg_start = 0;
    IQ seg_alpha = alpha0;
    std::size_t seg = 0;
    const IQ step = std::exp(lambda * dt);
    IQ carry{0, 0};
    std::size_t carry_index = 0;
    bool have_carry = false;
    for (std::size_t i = 0; i < n; ++i) {
        double t = i * dt;
        while (seg < segs.size() && t > seg_start + segs[seg].duration + 1e-12) {
            seg_alpha = propagate(seg_alpha, segs[seg].amplitude, lambda, segs[seg].duration);
            seg_start += segs[seg].duration;
            ++seg;
            have_carry = false;
        }
        IQ eps = seg < segs.size() ? segs[seg].amplitude : IQ{0, 0};
        // e^{λ(t − t_seg)} updated incrementally inside a segment
        IQ e;
        if (have_carry && carry_index + 1 == i) {
            e = carry * step;
        } else {
            e = std::exp(lambda * (t - seg_start));
        }
        carry = e;
        carry_index = i;
        have_carry = true;
        s.t[i] = t;
        s.alpha[i] = seg_alpha * e + eps * (e - 1.0) / lambda;
    }
    return s;
}

}  // namespace

PulseEnvelope clear_pulse(IQ hold_amplitude, const ClearShape& shape, double duration)
{
    for (double d : {shape.t_up1, shape.t_up2, shape.t_down1, shape.t_down2})
        if (d < kMinSegment)
            throw std::invalid_argument("clear_pulse: segments must last at least 2 ns");
    double hold = duration - shape.t_up1 - shape.t_up2 - shape.t_down1 - shape.t_down2;
    if (!(hold > 0))
        throw std::invalid_argument("clear_pulse: overshoot segments exceed the pulse duration");
    PulseEnvelope e{{{shape.t_up1, shape.up1},
                     {shape.t_up2, shape.up2},
                     {hold, hold_amplitude},
                     {shape.t_down1, shape.down1},
                     {shape.t_down2, shape.down2}},
                    2};
    e.validate();
    return e;
}

CavityResponse cavity_response(const PulseEnvelope& env, double kappa_c, double detuning, const CavityOptions& opt)
{
    if (!(kappa_c > 0))
        throw std::invalid_argument("cavity_response: kappa_c must be positive");
    if (!(opt.sample_dt > 0) || !(opt.tail >= 0))
        throw std::invalid_argument("cavity_response: bad sampling options");
    env.validate();
    const IQ lambda(-units::two_pi * kappa_c / 2.0, units::two_pi * detuning);
    Sampled s = sample_response(env.segments, lambda, IQ{0, 0}, opt.sample_dt, env.total_duration() + opt.tail);

    CavityResponse r;
    r.steady_state = -env.segments[env.hold_segment].amplitude / lambda;
    double hold_end = 0;
    for (int i = 0; i <= env.hold_segment; ++i)
        hold_end += env.segments[i].duration;
    const double thr = opt.settle_fraction * std::abs(r.steady_state);
    if (thr > 0) {
        r.ring_up_ns = settle_time(s.t, s.alpha, 0.0, hold_end, r.steady_state, thr);
        r.ring_down_ns = settle_time(s.t, s.alpha, hold_end, s.t.back(), IQ{0, 0}, thr);
    }
    r.t = std::move(s.t);
    r.alpha = std::move(s.alpha);
    return r;
}

namespace {

struct Overshoot {
    double t1, t2;
    IQ a1, a2;
    double time;
    double cost;
};

// Two segments carrying α from `from` to `to` with a1 = x·ε; a2 solved exactly.
Overshoot overshoot(double t1, double t2, double x, IQ eps, IQ from, IQ to, IQ lambda, double amax, double dt,
                    double thr, IQ settle_target)
{
    Overshoot o{t1, t2, x * eps, IQ{}, 0, 0};
    IQ mid = propagate(from, o.a1, lambda, t1);
    o.a2 = solve_drive(mid, to, lambda, t2);
    Sampled s = sample_response({{t1, o.a1}, {t2, o.a2}}, lambda, from, dt, t1 + t2);
    double settle = settle_time(s.t, s.alpha, 0.0, t1 + t2, settle_target, thr);
    o.time = std::isnan(settle) ? t1 + t2 : settle;
    double excess = std::max(0.0, std::abs(o.a2) / amax - 1.0);
    o.cost = o.time + 1e-3 * (t1 + t2) + 1e3 * excess;
    return o;
}

Overshoot optimize_overshoot(IQ eps, IQ from, IQ to, IQ lambda, IQ settle_target, double thr, const ClearOptions& opt,
                             double sign)
{
    const double A = opt.max_amplitude_ratio;
    const double amax = A * std::abs(eps);
    const double dt = opt.cavity.sample_dt;
    auto eval = [&](const std::vector<double>& y) {
        return overshoot(y[0], y[1], y[2], eps, from, to, lambda, amax, dt, thr, settle_target).cost;
    };
    const std::vector<double> lower{kMinSegment, kMinSegment, -A}, upper{opt.max_segment, opt.max_segment, A};
    const double taus[] = {3.0, 6.0, 12.0, 24.0};
    const double xs[] = {0.9, 0.5};
    Overshoot best{};
    best.cost = std::numeric_limits<double>::infinity();
    int started = 0;
    for (double tau : taus)
        for (double x : xs) {
            if (started++ >= opt.multistarts)
                break;
            SimplexResult r = bounded_simplex(eval, {tau, tau, sign * x * A}, lower, upper, {0.1, 1e-6, 2000});
            Overshoot o = overshoot(r.x[0], r.x[1], r.x[2], eps, from, to, lambda, amax, dt, thr, settle_target);
            if (o.cost < best.cost)
                best = o;
        }
    return best;
}

}  // namespace

ClearOptimization optimize_clear(IQ hold_amplitude, double kappa_c, double detuning, double duration,
                                 const ClearOptions& opt)
{
    if (!(kappa_c > 0))
        throw std::invalid_argument("optimize_clear: kappa_c must be positive");
    if (std::abs(hold_amplitude) == 0)
        throw std::invalid_argument("optimize_clear: hold amplitude must be nonzero");
    if (opt.multistarts < 1)
        throw std::invalid_argument("optimize_clear: multistarts must be >= 1");
    const IQ lambda(-units::two_pi * kappa_c / 2.0, units::two_pi * detuning);
    const IQ ss = -hold_amplitude / lambda;
    const double thr = opt.cavity.settle_fraction * std::abs(ss);

    Overshoot up = optimize_overshoot(hold_amplitude, IQ{0, 0}, ss, lambda, ss, thr, opt, 1.0);
    Overshoot down = optimize_overshoot(hold_amplitude, ss, IQ{0, 0}, lambda, IQ{0, 0}, thr, opt, -1.0);

    ClearOptimization out;
    out.shape = {up.t1, up.t2, down.t1, down.t2, up.a1, up.a2, down.a1, down.a2};
    out.envelope = clear_pulse(hold_amplitude, out.shape, duration);
    out.response = cavity_response(out.envelope, kappa_c, detuning, opt.cavity);
    CavityResponse sq = cavity_response(square_pulse(hold_amplitude, duration), kappa_c, detuning, opt.cavity);
    out.square_ring_up_ns = sq.ring_up_ns;
    out.square_ring_down_ns = sq.ring_down_ns;
    return out;
}

}  // namespace mist
