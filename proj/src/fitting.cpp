#include "mist/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

#include "mist/hilbert.hpp"
#include "mist/io.hpp"
#include "mist/linalg.hpp"
#include "mist/optim.hpp"
#include "mist/parallel.hpp"

namespace mist {

const char* transition_name(Transition t)
{
    switch (t) {
    case Transition::c01: return "c01";
    case Transition::a01: return "a01";
    case Transition::q01: return "q01";
    case Transition::q02: return "q02";
    case Transition::q04: return "q04";
    }
    return "?";
}

const std::vector<Transition>& all_transitions()
{
    static const std::vector<Transition> ids{Transition::c01, Transition::a01, Transition::q01, Transition::q02,
                                             Transition::q04};
    return ids;
}

Transition parse_transition(const std::string& s)
{
    for (Transition t : all_transitions())
        if (s == transition_name(t))
            return t;
    throw std::invalid_argument("unknown transition id '" + s + "' (c01, a01, q01, q02, q04)");
}

void DigitizedPoint::validate() const
{
    if (!(freq > 0))
        throw std::invalid_argument("digitized point: freq must be > 0");
    if (!(band_weight > 0))
        throw std::invalid_argument("digitized point: band_weight must be > 0");
    if (!std::isfinite(flux_ext))
        throw std::invalid_argument("digitized point: non-finite flux");
}

std::vector<DigitizedPoint> read_points_csv(const std::filesystem::path& path)
{
    CsvTable t = read_csv(path);
    int cf = t.column("flux"), ci = t.column("transition_id"), cq = t.column("freq_GHz"), cb = t.column("band_GHz");
    if (cf < 0 || ci < 0 || cq < 0 || cb < 0)
        throw std::invalid_argument(path.string() + ": expected columns flux, transition_id, freq_GHz, band_GHz");
    std::vector<DigitizedPoint> pts;
    for (const auto& row : t.rows) {
        DigitizedPoint p{std::stod(row.at(cf)), parse_transition(row.at(ci)), std::stod(row.at(cq)),
                         std::stod(row.at(cb))};
        p.validate();
        pts.push_back(p);
    }
    return pts;
}

std::string format_points_csv(const std::vector<DigitizedPoint>& points)
{
    CsvWriter w({"flux", "transition_id", "freq_GHz", "band_GHz"});
    for (const DigitizedPoint& p : points) {
        w.cell(p.flux_ext).cell(transition_name(p.id)).cell(p.freq).cell(p.band_weight);
        w.end_row();
    }
    return w.str();
}

const char* observable_name(Observable o)
{
    switch (o) {
    case Observable::omega_q: return "omega_q";
    case Observable::omega_c: return "omega_c";
    case Observable::chi_qc: return "chi_qc";
    }
    return "?";
}

std::vector<Anchor> default_anchors()
{
    return {{Observable::omega_q, 2.0687, 0.005}, {Observable::omega_c, 7.294, 0.010},
            {Observable::chi_qc, -0.00202, 0.0002}};
}

const char* fit_param_name(FitParam f)
{
    switch (f) {
    case FitParam::E_Cq: return "E_Cq";
    case FitParam::E_Ca: return "E_Ca";
    case FitParam::E_J: return "E_J";
    case FitParam::L_a0: return "L_a0";
    case FitParam::omega_c_bare: return "omega_c_bare";
    case FitParam::g_ac: return "g_ac";
    }
    return "?";
}

const std::vector<FitParam>& all_fit_params()
{
    static const std::vector<FitParam> ps{FitParam::E_Cq, FitParam::E_Ca,         FitParam::E_J,
                                          FitParam::L_a0, FitParam::omega_c_bare, FitParam::g_ac};
    return ps;
}

FitParam parse_fit_param(const std::string& s)
{
    for (FitParam f : all_fit_params())
        if (s == fit_param_name(f))
            return f;
    throw std::invalid_argument("unknown fit parameter '" + s + "'");
}

double& param_ref(CircuitParams& p, FitParam f)
{
    switch (f) {
    case FitParam::E_Cq: return p.E_Cq;
    case FitParam::E_Ca: return p.E_Ca;
    case FitParam::E_J: return p.E_J;
    case FitParam::L_a0: return p.L_a0;
    case FitParam::omega_c_bare: return p.omega_c_bare;
    case FitParam::g_ac: return p.g_ac;
    }
    throw std::logic_error("param_ref");
}

double param_value(const CircuitParams& p, FitParam f)
{
    CircuitParams copy = p;
    return param_ref(copy, f);
}

void FitProblem::validate() const
{
    for (const DigitizedPoint& p : points)
        p.validate();
    for (const Anchor& a : anchors)
        if (!(a.window > 0))
            throw std::invalid_argument("fit problem: anchor windows must be > 0");
    if (free_params.empty())
        throw std::invalid_argument("fit problem: no free parameters");
    if (!bounds.empty() && bounds.size() != free_params.size())
        throw std::invalid_argument("fit problem: one bound per free parameter");
    for (const Bound& b : bounds)
        if (!(b.upper > b.lower))
            throw std::invalid_argument("fit problem: empty bound interval");
}

namespace {

struct BareState {
    int j, na, nc;
};

BareState bare_state(Transition t)
{
    switch (t) {
    case Transition::c01: return {0, 0, 1};
    case Transition::a01: return {0, 1, 0};
    case Transition::q01: return {1, 0, 0};
    case Transition::q02: return {2, 0, 0};
    case Transition::q04: return {4, 0, 0};
    }
    return {0, 0, 0};
}

// Dressed energy of a bare state, NaN if no eigenvector carries enough of its weight.
double labeled_energy(const EigenSystem& es, Eigen::Index bare, double min_overlap)
{
    Eigen::Index best = -1;
    double best_w = 0;
    for (Eigen::Index k = 0; k < es.dim(); ++k) {
        double w = std::norm(es.is_complex() ? es.complex(bare, k) : cplx(es.real(bare, k)));
        if (w > best_w) {
            best_w = w;
            best = k;
        }
    }
    return best_w > min_overlap ? es.values[best] : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<FluxTransitions> model_transitions(const CircuitParams& p, const std::vector<double>& flux_grid,
                                               const std::vector<Transition>& ids, const ModelSpec& spec)
{
    HilbertSpec hs{spec.n_charge, spec.D, spec.d_c, spec.d_a, spec.fock_buffer};
    hs.validate(p);
    TransmonEigenbasis tb = transmon_eigensystem(p, hs);
    auto index = [&](BareState s) { return (Eigen::Index(s.j) * spec.d_a + s.na) * spec.d_c + s.nc; };

    std::vector<FluxTransitions> out;
    for (double flux : flux_grid) {
        CircuitParams q = p;
        q.flux_ext = flux;
        FluxTransitions ft;
        ft.flux_ext = flux;
        ft.freq.assign(ids.size(), std::numeric_limits<double>::quiet_NaN());
        ft.chi_qc = std::numeric_limits<double>::quiet_NaN();
        try {
            DerivedModes modes = normal_modes(q);
            EigenSystem es = eigh(build_three_mode(q, modes, hs, tb));
            const double e0 = labeled_energy(es, index({0, 0, 0}), spec.min_overlap);
            for (std::size_t i = 0; i < ids.size(); ++i)
                ft.freq[i] = labeled_energy(es, index(bare_state(ids[i])), spec.min_overlap) - e0;
            const double e001 = labeled_energy(es, index({0, 0, 1}), spec.min_overlap);
            const double e100 = labeled_energy(es, index({1, 0, 0}), spec.min_overlap);
            const double e101 = labeled_energy(es, index({1, 0, 1}), spec.min_overlap);
            ft.chi_qc = e101 - e100 - e001 + e0;
        } catch (const std::invalid_argument&) {
            // unphysical trial parameters; leave NaN
        }
        out.push_back(std::move(ft));
    }
    return out;
}

CostBreakdown weighted_cost_breakdown(const FitProblem& problem, const CircuitParams& trial, const ModelSpec& spec)
{
    // one model evaluation per distinct flux, in sorted order
    std::map<double, std::size_t> flux_index;
    for (const DigitizedPoint& p : problem.points)
        flux_index.emplace(p.flux_ext, 0);
    bool need_zero = !problem.anchors.empty();
    if (need_zero)
        flux_index.emplace(0.0, 0);
    std::vector<double> grid;
    for (auto& [f, i] : flux_index) {
        i = grid.size();
        grid.push_back(f);
    }

    CostBreakdown c;
    std::vector<FluxTransitions> model;
    try {
        model = model_transitions(trial, grid, all_transitions(), spec);
    } catch (const std::invalid_argument&) {
        c.residuals.assign(problem.points.size(), std::numeric_limits<double>::quiet_NaN());
        c.anchor_residuals.assign(problem.anchors.size(), std::numeric_limits<double>::quiet_NaN());
        c.invalid = static_cast<int>(problem.points.size() + problem.anchors.size());
        c.total = kInvalidPenalty * c.invalid;
        return c;
    }

    for (const DigitizedPoint& p : problem.points) {
        const FluxTransitions& ft = model[flux_index.at(p.flux_ext)];
        double f = ft.freq[static_cast<int>(p.id)];
        if (std::isnan(f)) {
            c.residuals.push_back(f);
            c.total += kInvalidPenalty;
            ++c.invalid;
            continue;
        }
        double r = (f - p.freq) / p.band_weight;
        c.residuals.push_back(r);
        c.total += r * r;
    }
    if (need_zero) {
        const FluxTransitions& z = model[flux_index.at(0.0)];
        for (const Anchor& a : problem.anchors) {
            double v = 0;
            switch (a.what) {
            case Observable::omega_q: v = z.freq[static_cast<int>(Transition::q01)]; break;
            case Observable::omega_c: v = z.freq[static_cast<int>(Transition::c01)]; break;
            case Observable::chi_qc: v = z.chi_qc; break;
            }
            if (std::isnan(v)) {
                c.anchor_residuals.push_back(v);
                c.total += kInvalidPenalty;
                ++c.invalid;
                continue;
            }
            double r = (v - a.target) / a.window;
            c.anchor_residuals.push_back(r);
            c.total += r * r;
        }
    }
    return c;
}

double weighted_cost(const FitProblem& problem, const CircuitParams& trial, const ModelSpec& spec)
{
    return weighted_cost_breakdown(problem, trial, spec).total;
}

namespace {

std::vector<Bound> resolve_bounds(const FitProblem& problem, const CircuitParams& initial)
{
    if (!problem.bounds.empty())
        return problem.bounds;
    std::vector<Bound> b;
    for (FitParam f : problem.free_params) {
        double v = param_value(initial, f);
        if (v == 0)
            throw std::invalid_argument(std::string("fit: default bounds need a nonzero initial ") +
                                        fit_param_name(f));
        b.push_back({std::min(0.5 * v, 1.5 * v), std::max(0.5 * v, 1.5 * v)});
    }
    return b;
}

}  // namespace

FitResult fit(const FitProblem& problem, const CircuitParams& initial, const FitOptions& opt)
{
    problem.validate();
    if (opt.multistarts < 1)
        throw std::invalid_argument("fit: multistarts must be >= 1");
    const std::vector<Bound> bounds = resolve_bounds(problem, initial);
    const std::size_t n = problem.free_params.size();
    std::vector<double> lower(n), upper(n), x0(n);
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = bounds[i].lower;
        upper[i] = bounds[i].upper;
        x0[i] = param_value(initial, problem.free_params[i]);
        if (x0[i] < lower[i] || x0[i] > upper[i])
            throw std::invalid_argument(std::string("fit: initial ") + fit_param_name(problem.free_params[i]) +
                                        " outside its bounds");
    }

    // start 0 is the initial point; the rest are seeded relative perturbations
    std::vector<std::vector<double>> starts{x0};
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 1; s < opt.multistarts; ++s) {
        std::vector<double> x = x0;
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::clamp(x0[i] * (1.0 + opt.start_spread * u(rng)), lower[i], upper[i]);
        starts.push_back(std::move(x));
    }

    auto to_params = [&](const std::vector<double>& x) {
        CircuitParams p = initial;
        for (std::size_t i = 0; i < n; ++i)
            param_ref(p, problem.free_params[i]) = x[i];
        return p;
    };
    auto objective = [&](const std::vector<double>& x) {
        try {
            return weighted_cost(problem, to_params(x), opt.model);
        } catch (const std::exception&) {
            return kInvalidPenalty * static_cast<double>(problem.points.size() + problem.anchors.size() + 1);
        }
    };

    std::vector<StartReport> reports(starts.size());
    parallel_for(
        starts.size(),
        [&](std::size_t s) {
            SimplexOptions so;
            so.initial_step = 0.05;
            so.size_tol = opt.size_tol;
            so.max_iter = opt.max_iter;
            SimplexResult r = bounded_simplex(objective, starts[s], lower, upper, so);
            reports[s] = {starts[s], r.x, r.f, r.iterations, r.converged};
        },
        opt.threads);

    FitResult res;
    res.starts = reports;
    res.best_start = 0;
    for (std::size_t s = 1; s < reports.size(); ++s)
        if (reports[s].cost < reports[res.best_start].cost)
            res.best_start = static_cast<int>(s);
    const StartReport& best = reports[res.best_start];
    res.params = to_params(best.final);
    CostBreakdown cb = weighted_cost_breakdown(problem, res.params, opt.model);
    res.cost = cb.total;
    res.residuals = cb.residuals;
    res.anchor_residuals = cb.anchor_residuals;
    res.converged = std::any_of(reports.begin(), reports.end(), [](const StartReport& r) { return r.converged; });
    if (!res.converged)
        throw FitError("fit: no start converged", res);
    return res;
}

Identifiability jacobian_condition(const FitProblem& problem, const CircuitParams& p, double rel_step,
                                   const ModelSpec& spec)
{
    problem.validate();
    const std::size_t n = problem.free_params.size();
    auto residuals = [&](const CircuitParams& q) {
        CostBreakdown c = weighted_cost_breakdown(problem, q, spec);
        std::vector<double> r = c.residuals;
        r.insert(r.end(), c.anchor_residuals.begin(), c.anchor_residuals.end());
        return r;
    };
    std::vector<double> r0 = residuals(p);
    RMatrix J(r0.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
        CircuitParams plus = p, minus = p;
        double v = param_value(p, problem.free_params[i]);
        double h = rel_step * std::abs(v);
        param_ref(plus, problem.free_params[i]) = v + h;
        param_ref(minus, problem.free_params[i]) = v - h;
        std::vector<double> rp = residuals(plus), rm = residuals(minus);
        for (std::size_t k = 0; k < r0.size(); ++k) {
            double d = (rp[k] - rm[k]) / (2.0 * h) * std::abs(v);  // d r / d log θ
            if (!std::isfinite(d))
                throw NumericalError("jacobian_condition: model invalid near the evaluation point");
            J(k, i) = d;
        }
    }
    Eigen::JacobiSVD<RMatrix> svd(J);
    Identifiability id;
    const RVector& s = svd.singularValues();
    id.singular_values.assign(s.data(), s.data() + s.size());
    const double tol = s.size() ? s[0] * 1e-12 * std::max(J.rows(), J.cols()) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > tol)
            ++id.rank;
    id.condition_number = (s.size() && s[s.size() - 1] > 0) ? s[0] / s[s.size() - 1]
                                                             : std::numeric_limits<double>::infinity();
    return id;
}

std::vector<DigitizedPoint> synthetic_points(const CircuitParams& truth, double flux_min, double flux_max,
                                             int flux_count, const std::vector<Transition>& ids, double band,
                                             double noise, std::uint64_t seed, const ModelSpec& spec)
{
    if (flux_count < 1 || !(band > 0) || noise < 0)
        throw std::invalid_argument("synthetic_points: bad arguments");
    std::vector<double> grid;
    for (int i = 0; i < flux_count; ++i)
        grid.push_back(flux_count == 1 ? flux_min : flux_min + (flux_max - flux_min) * i / (flux_count - 1));
    std::vector<FluxTransitions> model = model_transitions(truth, grid, ids, spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<DigitizedPoint> pts;
    for (const FluxTransitions& ft : model)
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (std::isnan(ft.freq[i]))
                throw NumericalError("synthetic_points: labeling failed for the generating parameters");
            double f = ft.freq[i];
            if (noise > 0)
                f *= 1.0 + noise * normal(rng);
            pts.push_back({ft.flux_ext, ids[i], f, band});
        }
    return pts;
}

}  // namespace mist
