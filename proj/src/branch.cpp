#include "mist/branch.hpp"
#include "mist/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mist {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// |⟨k| c† |col⟩|² for all eigenstates k, plus ‖c† |col⟩‖².
RMatrix ladder_weights(const EigenSystem& es, const std::vector<Eigen::Index>& cols, int d_c, RVector& norms2)
{
    const Eigen::Index N = es.dim();
    const Eigen::Index m = static_cast<Eigen::Index>(cols.size());
    norms2.resize(m);
    if (es.is_complex()) {
        CMatrix W = CMatrix::Zero(N, m);
        for (Eigen::Index c = 0; c < m; ++c)
            for (Eigen::Index r = 0; r + 1 < N; ++r) {
                int n = static_cast<int>(r % d_c);
                if (n + 1 < d_c)
                    W(r + 1, c) = std::sqrt(double(n + 1)) * es.complex(r, cols[c]);
            }
        norms2 = W.colwise().squaredNorm().transpose();
        CMatrix O = es.complex.adjoint() * W;
        return O.cwiseAbs2();
    }
    const bool gauged = es.phase.size() > 0;
    RMatrix Wr = RMatrix::Zero(N, m);
    RMatrix Wi;
    if (gauged)
        Wi = RMatrix::Zero(N, m);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r + 1 < N; ++r) {
            int n = static_cast<int>(r % d_c);
            if (n + 1 >= d_c)
                continue;
            double x = std::sqrt(double(n + 1)) * es.real(r, cols[c]);
            if (gauged) {
                cplx f = std::conj(es.phase[r + 1]) * es.phase[r] * x;
                Wr(r + 1, c) = f.real();
                Wi(r + 1, c) = f.imag();
            } else {
                Wr(r + 1, c) = x;
            }
        }
    norms2 = Wr.colwise().squaredNorm().transpose();
    RMatrix O = es.real.transpose() * Wr;
    RMatrix out = O.cwiseAbs2();
    if (gauged) {
        norms2 += Wi.colwise().squaredNorm().transpose();
        RMatrix Oi = es.real.transpose() * Wi;
        out += Oi.cwiseAbs2();
    }
    return out;
}

struct Candidate {
    Eigen::Index k = -1;
    double conf = -1;
    bool tie = false;
};

Candidate best_available(const RMatrix& conf, int col, const RVector& values, const std::vector<char>& used,
                         double tie_tol)
{
    Candidate c;
    const Eigen::Index N = conf.rows();
    double cmax = -1;
    for (Eigen::Index k = 0; k < N; ++k)
        if (!used[k] && conf(k, col) > cmax)
            cmax = conf(k, col);
    if (cmax < 0)
        return c;
    int within = 0;
    for (Eigen::Index k = 0; k < N; ++k) {
        if (used[k] || conf(k, col) < cmax - tie_tol)
            continue;
        ++within;
        if (c.k < 0 || values[k] < values[c.k] || (values[k] == values[c.k] && k < c.k))
            c.k = k;
    }
    c.conf = conf(c.k, col);
    c.tie = within > 1;
    return c;
}

}  // namespace

int BranchTable::branch_length(int j) const
{
    int n = 0;
    while (n < d_c_usable && index(j, n) >= 0)
        ++n;
    return n;
}

BranchTable label_branches(const EigenSystem& es, int D, int d_c, const LabelOptions& opt)
{
    const Eigen::Index N = es.dim();
    if (N != Eigen::Index(D) * d_c)
        throw std::invalid_argument("label_branches: D*d_c does not match the eigensystem dimension");
    BranchTable t;
    t.D = D;
    t.d_c = d_c;
    t.d_c_usable = std::clamp(static_cast<int>(std::floor(opt.usable_fraction * d_c)), 1, d_c);
    const int U = t.d_c_usable;
    t.energy = RMatrix::Constant(D, U, kNaN);
    t.nt = RMatrix::Constant(D, U, kNaN);
    t.confidence = RMatrix::Constant(D, U, kNaN);
    t.index = Eigen::MatrixXi::Constant(D, U, -1);
    t.transmon_weight.assign(D, RMatrix::Constant(D, U, kNaN));

    std::vector<char> used(N, 0);
    std::vector<char> active(D, 1);

    auto record = [&](int j, int n, Eigen::Index k, double conf) {
        used[k] = 1;
        t.index(j, n) = static_cast<int>(k);
        t.energy(j, n) = es.values[k];
        t.confidence(j, n) = conf;
        RVector w = es.weights(k);
        double nt = 0;
        for (int jp = 0; jp < D; ++jp) {
            double s = w.segment(Eigen::Index(jp) * d_c, d_c).sum();
            t.transmon_weight[jp](j, n) = s;
            nt += jp * s;
        }
        t.nt(j, n) = nt;
    };

    // conf columns correspond to `branches`
    auto assign = [&](const RMatrix& conf, const std::vector<int>& branches, int n) {
        std::vector<char> pending(branches.size(), 1);
        for (std::size_t done = 0; done < branches.size(); ++done) {
            int pick = -1;
            Candidate best;
            for (std::size_t b = 0; b < branches.size(); ++b) {
                if (!pending[b])
                    continue;
                Candidate c = best_available(conf, static_cast<int>(b), es.values, used, opt.tie_tolerance);
                if (pick < 0 || c.conf > best.conf) {
                    pick = static_cast<int>(b);
                    best = c;
                }
            }
            if (pick < 0)
                break;
            pending[pick] = 0;
            const int j = branches[pick];
            if (best.k < 0 || best.conf < opt.min_confidence) {
                active[j] = 0;
                t.events.push_back({LabelEvent::Kind::LadderBreak, j, n,
                                    "confidence " + std::to_string(std::max(best.conf, 0.0)) + " below threshold"});
                continue;
            }
            if (best.tie)
                t.events.push_back({LabelEvent::Kind::Tie, j, n, "candidates within tie tolerance; lower eigenvalue kept"});
            record(j, n, best.k, best.conf);
        }
    };

    {
        RMatrix conf(N, D);
        for (int j = 0; j < D; ++j) {
            const Eigen::Index r = product_index(j, 0, d_c);
            if (es.is_complex())
                conf.col(j) = es.complex.row(r).cwiseAbs2().transpose();
            else
                conf.col(j) = es.real.row(r).cwiseAbs2().transpose();
        }
        std::vector<int> all(D);
        for (int j = 0; j < D; ++j)
            all[j] = j;
        assign(conf, all, 0);
    }

    for (int n = 1; n < U; ++n) {
        std::vector<int> branches;
        std::vector<Eigen::Index> cols;
        for (int j = 0; j < D; ++j)
            if (active[j] && t.index(j, n - 1) >= 0) {
                branches.push_back(j);
                cols.push_back(t.index(j, n - 1));
            }
        if (branches.empty())
            break;
        RVector norms2;
        RMatrix conf = ladder_weights(es, cols, d_c, norms2);
        for (Eigen::Index c = 0; c < conf.cols(); ++c)
            conf.col(c) /= std::max(norms2[c], 1e-300);
        assign(conf, branches, n);
    }
    return t;
}

BranchAnalysis diagonalize_and_label(const HermitianOperator& H, int D, int d_c, const LabelOptions& opt)
{
    if (H.dim() != D * d_c)
        throw std::invalid_argument("diagonalize_and_label: D*d_c does not match H.dim");
    BranchAnalysis out;
    out.eig = eigh(H);
    out.table = label_branches(out.eig, D, d_c, opt);
    return out;
}

RMatrix nt_expectation(const BranchTable& table, const EigenSystem& es)
{
    RMatrix nt = RMatrix::Constant(table.D, table.d_c_usable, kNaN);
    for (int j = 0; j < table.D; ++j)
        for (int n = 0; n < table.d_c_usable; ++n) {
            if (!table.labeled(j, n))
                continue;
            RVector w = es.weights(table.index(j, n));
            double s = 0;
            for (Eigen::Index r = 0; r < w.size(); ++r)
                s += double(r / table.d_c) * w[r];
            nt(j, n) = s;
        }
    return nt;
}

const char* crossing_kind_name(CrossingKind k) { return k == CrossingKind::Exact ? "exact" : "avoided"; }

double zero_photon_detuning(const BranchTable& table, int j_lo, int j_hi, int delta)
{
    if (j_lo > j_hi)
        std::swap(j_lo, j_hi);
    if (!table.labeled(j_hi, 0) || !table.labeled(j_lo, delta))
        return kNaN;
    return table.energy(j_hi, 0) - table.energy(j_lo, delta);
}

std::vector<CrossingEvent> find_crossings(const BranchTable& table, const std::vector<std::pair<int, int>>& pairs,
                                          const CrossingOptions& opt)
{
    std::vector<CrossingEvent> out;
    const int d = opt.delta;
    if (d < 0)
        throw std::invalid_argument("find_crossings: delta must be >= 0");
    for (auto [a, b] : pairs) {
        if (a == b)
            continue;
        const int lo = std::min(a, b), hi = std::max(a, b);
        if (hi >= table.D)
            throw std::invalid_argument("find_crossings: branch index out of range");
        const int M = table.d_c_usable - d;
        if (M < 2)
            continue;
        RVector g = RVector::Constant(M, kNaN);
        RVector p = RVector::Constant(M, kNaN);
        for (int m = 0; m < M; ++m) {
            if (!table.labeled(hi, m) || !table.labeled(lo, m + d))
                continue;
            g[m] = table.energy(hi, m) - table.energy(lo, m + d);
            p[m] = std::clamp(table.transmon_weight[hi](lo, m + d), 0.0, 1.0);
        }
        auto gap_at = [&](int m) { return std::abs(g[m]) * 2.0 * std::sqrt(p[m] * (1.0 - p[m])) * 1e3; };
        auto valid = [&](int m) { return m >= 0 && m < M && std::isfinite(g[m]); };
        auto emit = [&](double n_star, double gap) {
            CrossingEvent e;
            e.j_lo = lo;
            e.j_hi = hi;
            e.delta = d;
            e.n_c_star = n_star;
            e.gap_MHz = gap;
            e.kind = gap < opt.gap_threshold_MHz ? CrossingKind::Exact : CrossingKind::Avoided;
            e.flux_ext = table.flux_ext;
            out.push_back(e);
        };
        for (int m = 0; m + 1 < M; ++m) {
            if (!valid(m) || !valid(m + 1))
                continue;
            if ((g[m] > 0) != (g[m + 1] > 0) && g[m] != g[m + 1]) {
                double frac = g[m] / (g[m] - g[m + 1]);
                emit(m + frac + d, 0.5 * (gap_at(m) + gap_at(m + 1)));
                continue;
            }
            if (m == 0 || !valid(m - 1))
                continue;
            const double am = std::abs(g[m - 1]), bm = std::abs(g[m]), cm = std::abs(g[m + 1]);
            if (!(bm < am && bm <= cm) || (g[m - 1] > 0) != (g[m] > 0))
                continue;
            // bounce: keep only if the labeled branches exchange character
            int before = std::max(m - 2, 0), after = std::min(m + 2, M - 1);
            while (!valid(before))
                ++before;
            while (!valid(after))
                --after;
            const bool swapped = (p[before] - 0.5) * (p[after] - 0.5) < 0;
            if (!swapped && p[m] < 0.25)
                continue;
            double denom = am - 2 * bm + cm;
            double off = denom > 0 ? 0.5 * (am - cm) / denom : 0.0;
            emit(m + off + d, gap_at(m));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CrossingEvent& x, const CrossingEvent& y) {
        if (x.j_lo != y.j_lo)
            return x.j_lo < y.j_lo;
        if (x.j_hi != y.j_hi)
            return x.j_hi < y.j_hi;
        return x.n_c_star < y.n_c_star;
    });
    return out;
}

StarkCurve ac_stark_curve(const BranchTable& table, std::pair<int, int> j_pair, int window)
{
    auto [j, jp] = j_pair;
    if (j < 0 || jp < 0 || j >= table.D || jp >= table.D || j == jp)
        throw std::invalid_argument("ac_stark_curve: bad branch pair");
    if (window < 1)
        throw std::invalid_argument("ac_stark_curve: window must be >= 1");
    const int len = std::min(table.branch_length(j), table.branch_length(jp));
    if (len <= window)
        throw std::runtime_error("ac_stark_curve: branch truncated before the end of the fit window");
    StarkCurve c;
    c.j = j;
    c.j_prime = jp;
    c.window = window;
    c.n_c = RVector::LinSpaced(len, 0, len - 1);
    c.freq.resize(len);
    for (int n = 0; n < len; ++n)
        c.freq[n] = table.energy(jp, n) - table.energy(j, n);
    const int m = window + 1;
    const double xm = c.n_c.head(m).mean(), ym = c.freq.head(m).mean();
    double sxy = 0, sxx = 0;
    for (int n = 0; n < m; ++n) {
        sxy += (c.n_c[n] - xm) * (c.freq[n] - ym);
        sxx += (c.n_c[n] - xm) * (c.n_c[n] - xm);
    }
    c.slope = sxy / sxx;
    c.intercept = ym - c.slope * xm;
    return c;
}

double extrapolate_crossing(const StarkCurve& curve, double target)
{
    if (curve.slope == 0)
        return kNaN;
    return (target - curve.intercept) / curve.slope;
}

namespace {

double sign_root(const std::vector<double>& x, const std::vector<double>& y, bool negative_side)
{
    // pairs of neighbours on one side of zero flux, scanned outward from zero
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(x[a]) < std::abs(x[b]); });
    std::vector<std::size_t> side;
    for (auto i : order)
        if (negative_side ? x[i] <= 0 : x[i] >= 0)
            side.push_back(i);
    for (std::size_t s = 0; s + 1 < side.size(); ++s) {
        double x0 = x[side[s]], x1 = x[side[s + 1]];
        double y0 = y[side[s]], y1 = y[side[s + 1]];
        if (!std::isfinite(y0) || !std::isfinite(y1))
            continue;
        if (y0 == 0)
            return x0;
        if ((y0 > 0) != (y1 > 0))
            return x0 + (x1 - x0) * y0 / (y0 - y1);
    }
    return kNaN;
}

}  // namespace

MistMap mist_map_over_flux(const CircuitParams& p, const std::vector<double>& flux_grid,
                           const std::vector<std::pair<int, int>>& pairs, const HilbertSpec& spec,
                           const MistMapOptions& opt)
{
    for (double f : flux_grid)
        if (!(std::abs(f) <= 0.2 + 1e-12))
            throw std::invalid_argument("mist_map_over_flux: flux grid must lie within ±0.2 Φ0");
    MistMap map;
    map.flux = flux_grid;
    const std::size_t F = flux_grid.size();
    std::vector<std::vector<CrossingEvent>> events(F);
    std::vector<std::vector<double>> detuning(F, std::vector<double>(pairs.size(), kNaN));

    parallel_for(F, [&](std::size_t i) {
        CircuitParams q = p;
        q.flux_ext = flux_grid[i];
        DerivedModes modes = normal_modes(q);
        BranchAnalysis ba = diagonalize_and_label(build_cosphi_two_mode(q, modes, spec), spec.D, spec.d_c, opt.label);
        ba.table.flux_ext = q.flux_ext;
        events[i] = find_crossings(ba.table, pairs, opt.crossing);
        for (std::size_t k = 0; k < pairs.size(); ++k)
            detuning[i][k] = zero_photon_detuning(ba.table, pairs[k].first, pairs[k].second, opt.crossing.delta);
    }, opt.threads);

    for (std::size_t k = 0; k < pairs.size(); ++k) {
        MistCurve curve;
        curve.pair = {std::min(pairs[k].first, pairs[k].second), std::max(pairs[k].first, pairs[k].second)};
        std::vector<double> det(F);
        for (std::size_t i = 0; i < F; ++i) {
            MistPoint pt;
            pt.flux_ext = flux_grid[i];
            pt.zero_photon_detuning = detuning[i][k];
            det[i] = detuning[i][k];
            for (const auto& e : events[i])
                if (e.j_lo == curve.pair.first && e.j_hi == curve.pair.second && e.kind == CrossingKind::Avoided) {
                    pt.n_c_star = e.n_c_star;
                    pt.gap_MHz = e.gap_MHz;
                    break;
                }
            curve.points.push_back(pt);
        }
        curve.vanish_flux_negative = sign_root(flux_grid, det, true);
        curve.vanish_flux_positive = sign_root(flux_grid, det, false);
        map.curves.push_back(std::move(curve));
    }
    for (auto& ev : events)
        map.events.insert(map.events.end(), ev.begin(), ev.end());
    return map;
}

}  // namespace mist
