// mist: batch front-end for the branch, classical, readout and fitting analyses.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "mist/branch.hpp"
#include "mist/classical.hpp"
#include "mist/fitting.hpp"
#include "mist/hilbert.hpp"
#include "mist/io.hpp"
#include "mist/parallel.hpp"
#include "mist/params.hpp"
#include "mist/readout.hpp"
#include "mist/simd.hpp"
#include "mist/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mist;

namespace {

struct Common {
    std::string params_file;
    std::string out;
    bool overwrite = false;
    std::string scale = "desk";
    std::uint64_t seed = 1;
    bool gnuplot = false;
};

struct Run {
    const Common& common;
    CircuitParams params;
    HilbertSpec spec;
    int periods = 2000;
    fs::path dir;
    std::vector<std::string> files;
    json summary = json::object();

    void write(const std::string& name, const std::string& text)
    {
        write_text(dir / name, text);
        files.push_back(name);
    }

    // CSV plus, with --gnuplot, a whitespace-separated .dat with blank lines between blocks of `block_column`.
    void write_csv(const std::string& name, const CsvWriter& w, int block_column = -1)
    {
        write(name, w.str());
        if (common.gnuplot)
            write(fs::path(name).replace_extension(".dat").string(), to_gnuplot(w.str(), block_column));
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    static std::string to_gnuplot(const std::string& csv, int block_column)
    {
        CsvTable t = parse_csv(csv);
        std::string out = "#";
        for (const auto& h : t.header)
            out += " " + h;
        out += "\n";
        std::string prev;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            if (block_column >= 0) {
                if (r > 0 && row[block_column] != prev)
                    out += "\n\n";
                prev = row[block_column];
            }
            for (std::size_t c = 0; c < row.size(); ++c)
                out += (c ? " " : "") + row[c];
            out += "\n";
        }
        return out;
    }
};

json params_json(const CircuitParams& p)
{
    return json{{"E_Cq", p.E_Cq},       {"E_J", p.E_J},
                {"n_g", p.n_g},         {"E_Ca", p.E_Ca},
                {"L_a0", p.L_a0},       {"omega_c_bare", p.omega_c_bare},
                {"g_ac", p.g_ac},       {"flux_ext", p.flux_ext},
                {"n_bar", p.n_bar},     {"omega_d", p.omega_d},
                {"kappa_c", p.kappa_c}, {"chi_qc_target", p.chi_qc_target}};
}

json spec_json(const HilbertSpec& s)
{
    return json{{"n_charge", s.n_charge}, {"D", s.D}, {"d_c", s.d_c}, {"d_a", s.d_a}, {"fock_buffer", s.fock_buffer}};
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text)
{
    std::vector<std::pair<int, int>> pairs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto dash = item.find('-');
        if (dash == std::string::npos)
            throw std::invalid_argument("pair '" + item + "' must look like 0-4");
        pairs.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    }
    if (pairs.empty())
        throw std::invalid_argument("no branch pairs given");
    return pairs;
}

std::vector<std::pair<int, int>> default_pairs(int D)
{
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j <= 1; ++j)
        for (int k = j + 1; k <= std::min(8, D - 1); ++k)
            pairs.emplace_back(j, k);
    return pairs;
}

json crossing_json(const CrossingEvent& e)
{
    return json{{"pair", {e.j_lo, e.j_hi}},
                {"flux", e.flux_ext},
                {"delta", e.delta},
                {"n_c_star", e.n_c_star},
                {"gap_MHz", e.gap_MHz},
                {"kind", crossing_kind_name(e.kind)}};
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

HermitianOperator build_model(CouplingKind kind, const CircuitParams& p, const HilbertSpec& spec, double& g_out)
{
    DerivedModes modes = normal_modes(p);
    if (kind == CouplingKind::CosPhi) {
        g_out = 0;
        return build_cosphi_two_mode(p, modes, spec);
    }
    if (!(g_out > 0))
        g_out = matched_transverse_coupling(modes);
    return build_transverse_two_mode(p, g_out, spec);
}

// ---- subcommands ----

struct BranchesArgs {
    std::string model = "cosphi";
    double flux = 0;
    std::string pairs;
    int delta = 1;
    double gap = 0.05;
    double g_qc = 0;
};

void cmd_branches(Run& run, const BranchesArgs& a)
{
    const CouplingKind kind = parse_coupling_kind(a.model);
    CircuitParams p = run.params;
    p.flux_ext = a.flux;
    double g = a.g_qc;
    HermitianOperator H = build_model(kind, p, run.spec, g);
    BranchAnalysis ba = diagonalize_and_label(H, run.spec.D, run.spec.d_c);
    BranchTable& t = ba.table;
    t.flux_ext = p.flux_ext;
    auto pairs = a.pairs.empty() ? default_pairs(run.spec.D) : parse_pairs(a.pairs);
    auto events = find_crossings(t, pairs, {a.gap, a.delta});

    CsvWriter w({"flux", "j", "n_c", "energy_GHz", "nt", "confidence"});
    for (int j = 0; j < t.D; ++j)
        for (int n = 0; n < t.d_c_usable; ++n) {
            if (!t.labeled(j, n))
                continue;
            w.cell(p.flux_ext).cell(j).cell(n).cell(t.energy(j, n)).cell(t.nt(j, n)).cell(t.confidence(j, n));
            w.end_row();
        }
    run.write_csv("branches.csv", w, 1);

    json cj = json::array();
    for (const auto& e : events)
        cj.push_back(crossing_json(e));
    run.write_json("crossings.json", cj);

    json lengths = json::array();
    for (int j = 0; j < t.D; ++j)
        lengths.push_back(t.branch_length(j));
    json label_events = json::array();
    for (const auto& e : t.events)
        label_events.push_back({{"kind", e.kind == LabelEvent::Kind::Tie ? "tie" : "ladder_break"},
                                {"j", e.j},
                                {"n_c", e.n_c},
                                {"detail", e.detail}});
    int avoided = 0;
    for (const auto& e : events)
        avoided += e.kind == CrossingKind::Avoided;
    run.summary = {{"model", a.model},
                   {"flux", p.flux_ext},
                   {"g_qc_GHz", g},
                   {"d_c_usable", t.d_c_usable},
                   {"omega_q_GHz", finite_or_null(t.energy(1, 0) - t.energy(0, 0))},
                   {"omega_c_GHz", finite_or_null(t.energy(0, 1) - t.energy(0, 0))},
                   {"chi_qc_MHz", finite_or_null(1e3 * (t.energy(1, 1) - t.energy(1, 0) - t.energy(0, 1) + t.energy(0, 0)))},
                   {"branch_lengths", lengths},
                   {"avoided_crossings", avoided},
                   {"label_events", label_events}};
    run.write_json("summary.json", run.summary);
}

struct MistMapArgs {
    double flux_min = -0.2, flux_max = 0.2;
    int flux_count = 21;
    std::string pairs = "0-4,1-5";
    double gap = 0.05;
};

void cmd_mist_map(Run& run, const MistMapArgs& a)
{
    if (a.flux_count < 2)
        throw std::invalid_argument("--flux-count must be >= 2");
    std::vector<double> grid;
    for (int i = 0; i < a.flux_count; ++i)
        grid.push_back(a.flux_min + (a.flux_max - a.flux_min) * i / (a.flux_count - 1));
    MistMapOptions opt;
    opt.crossing.gap_threshold_MHz = a.gap;
    MistMap map = mist_map_over_flux(run.params, grid, parse_pairs(a.pairs), run.spec, opt);

    CsvWriter w({"j_lo", "j_hi", "flux", "n_c_star", "gap_MHz", "zero_photon_detuning_GHz"});
    json curves = json::array();
    for (const auto& c : map.curves) {
        for (const auto& pt : c.points) {
            w.cell(c.pair.first).cell(c.pair.second).cell(pt.flux_ext).cell(pt.n_c_star).cell(pt.gap_MHz).cell(
                pt.zero_photon_detuning);
            w.end_row();
        }
        curves.push_back({{"pair", {c.pair.first, c.pair.second}},
                          {"vanish_flux_negative", finite_or_null(c.vanish_flux_negative)},
                          {"vanish_flux_positive", finite_or_null(c.vanish_flux_positive)}});
    }
    run.write_csv("mist_map.csv", w, 0);
    json cj = json::array();
    for (const auto& e : map.events)
        cj.push_back(crossing_json(e));
    run.write_json("crossings.json", cj);
    run.summary = {{"curves", curves}};
    run.write_json("mist_map.json", run.summary);
}

struct PoincareArgs {
    std::string model = "cosphi";
    double nbar = 300;
    int periods = 0;
    int steps = 1024;
    int ics = 81;
    int ring = 0;
    int m_max = 2;
    std::string isa = "auto";
};

void cmd_poincare(Run& run, const PoincareArgs& a)
{
    const CouplingKind kind = parse_coupling_kind(a.model);
    DerivedModes modes = normal_modes(run.params);
    HarmonicSeries s = harmonic_coefficients(kind, run.params, modes, a.nbar);
    auto ics = default_ic_grid(s, a.ics, a.m_max, a.ring);
    PoincareOptions opt;
    opt.n_periods = a.periods > 0 ? a.periods : run.periods;
    opt.steps_per_period = a.steps;
    opt.separatrix_m_max = a.m_max;
    opt.isa = a.isa == "auto" ? simd::active_isa() : simd::parse_isa(a.isa);
    PoincareSection sec = poincare_section(s, ics, opt);

    CsvWriter w({"trajectory_id", "period_index", "phi", "n"});
    for (std::size_t i = 0; i < sec.points.size(); ++i)
        for (std::size_t k = 0; k < sec.points[i].size(); ++k) {
            w.cell(static_cast<long long>(i)).cell(static_cast<long long>(k + 1)).cell(sec.points[i][k].phi).cell(
                sec.points[i][k].n);
            w.end_row();
        }
    run.write_csv("section.csv", w, 0);

    CsvWriter sw({"m", "psi", "n_upper", "n_lower"});
    for (const auto& sx : sec.separatrices)
        for (std::size_t i = 0; i < sx.psi.size(); ++i) {
            sw.cell(sx.m).cell(sx.psi[i]).cell(sx.n_upper[i]).cell(sx.n_lower[i]);
            sw.end_row();
        }
    run.write_csv("separatrices.csv", sw, 0);

    json traj = json::array();
    for (std::size_t i = 0; i < ics.size(); ++i)
        traj.push_back({{"id", i},
                        {"phi0", ics[i].phi},
                        {"n0", ics[i].n},
                        {"lyapunov_per_ns", sec.chaos.lyapunov[i]},
                        {"lyapunov_per_period", sec.chaos.lyapunov_per_period[i]},
                        {"chaotic", static_cast<bool>(sec.chaos.chaotic[i])}});
    json harmonics = json::array();
    for (int k = -std::min(s.n_max, 6); k <= std::min(s.n_max, 6); ++k)
        harmonics.push_back({{"n", k}, {"A_GHz", s.A(k)}});
    run.summary = {{"model", a.model},
                   {"n_bar", a.nbar},
                   {"eta", s.eta},
                   {"flux_ext_bar", s.flux_ext_bar},
                   {"N_h", s.n_max},
                   {"period_ns", sec.period},
                   {"periods", opt.n_periods},
                   {"steps_per_period", opt.steps_per_period},
                   {"simd", simd::isa_name(opt.isa)},
                   {"threshold_per_period", sec.chaos.threshold_per_period},
                   {"chaotic_fraction", sec.chaos.chaotic_fraction},
                   {"harmonics", harmonics},
                   {"trajectories", traj}};
    run.write_json("chaos.json", run.summary);
}

struct ChirikovArgs {
    double nbar_max = 750;
    int samples = 3001;
};

void cmd_chirikov(Run& run, const ChirikovArgs& a)
{
    DerivedModes modes = normal_modes(run.params);
    ChirikovScan c = chirikov_scan(CouplingKind::CosPhi, run.params, modes, a.nbar_max, a.samples);
    ChirikovScan t = chirikov_scan(CouplingKind::Transverse, run.params, modes, a.nbar_max, a.samples);
    CsvWriter w({"n_bar", "eta_cosphi", "margin_cosphi", "eta_transverse", "margin_transverse"});
    for (std::size_t i = 0; i < c.n_bar.size(); ++i) {
        double nb = c.n_bar[i];
        w.cell(nb)
            .cell(harmonic_coefficients(CouplingKind::CosPhi, run.params, modes, nb).eta)
            .cell(c.ratio[i])
            .cell(harmonic_coefficients(CouplingKind::Transverse, run.params, modes, nb).eta)
            .cell(t.ratio[i]);
        w.end_row();
    }
    run.write_csv("chirikov.csv", w);
    run.summary = {{"n_bar_max", a.nbar_max},
                   {"omega_p_GHz", std::sqrt(16.0 * run.params.E_J * run.params.E_Cq)},
                   {"cosphi", {{"min_margin", c.min_ratio}, {"argmin_n_bar", c.argmin_n_bar}}},
                   {"transverse", {{"min_margin", t.min_ratio}, {"argmin_n_bar", t.argmin_n_bar}}}};
    run.write_json("chirikov.json", run.summary);
}

struct StarkArgs {
    std::string model = "cosphi";
    double flux = 0;
    std::string pair = "0-1";
    int window = 20;
    double g_qc = 0;
};

void cmd_stark(Run& run, const StarkArgs& a)
{
    const CouplingKind kind = parse_coupling_kind(a.model);
    CircuitParams p = run.params;
    p.flux_ext = a.flux;
    double g = a.g_qc;
    BranchAnalysis ba = diagonalize_and_label(build_model(kind, p, run.spec, g), run.spec.D, run.spec.d_c);
    auto pr = parse_pairs(a.pair).front();
    StarkCurve sc = ac_stark_curve(ba.table, pr, a.window);
    const double wc = ba.table.energy(0, 1) - ba.table.energy(0, 0);
    const double n_star = extrapolate_crossing(sc, wc);  // negative: the fit never reaches ω_c ahead
    CsvWriter w({"n_c", "freq_GHz"});
    for (Eigen::Index i = 0; i < sc.n_c.size(); ++i) {
        w.cell(sc.n_c[i]).cell(sc.freq[i]);
        w.end_row();
    }
    run.write_csv("stark.csv", w);
    run.summary = {{"model", a.model},
                   {"flux", a.flux},
                   {"pair", {pr.first, pr.second}},
                   {"window", a.window},
                   {"slope_MHz_per_photon", 1e3 * sc.slope},
                   {"intercept_GHz", sc.intercept},
                   {"omega_c_GHz", wc},
                   {"zero_photon_detuning_MHz", 1e3 * (sc.freq[0] - wc)},
                   {"extrapolated_crossing_n_c", n_star >= 0 ? finite_or_null(n_star) : json(nullptr)}};
    run.write_json("stark.json", run.summary);
}

struct ReadoutArgs {
    double snr = 50;
    int states = 12;
    int shots = 5000;
    double temperature = 72;
    int thermal_shots = 100000;
    double radius = 2.0;
};

void cmd_readout(Run& run, const ReadoutArgs& a)
{
    const CircuitParams& p = run.params;
    PointerOptions po;
    po.snr = a.snr;
    auto states = pointer_positions(p, linear_dispersive_shifts(p.chi_qc_target, a.states), p.omega_d, po);
    ClassifyOptions co;
    co.radius_factor = a.radius;

    CsvWriter pw({"k", "I", "Q", "sigma"});
    for (const auto& s : states) {
        pw.cell(s.k).cell(s.center.real()).cell(s.center.imag()).cell(s.sigma);
        pw.end_row();
    }
    run.write_csv("pointers.csv", pw);

    IqSample sample = sample_pointer_states(states, a.shots, run.common.seed);
    auto labels = classify(sample.points, states, co);
    Confusion conf = confusion_matrix(sample.truth, labels);
    CsvWriter iw({"I", "Q", "truth", "label"});
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        iw.cell(sample.points[i].real()).cell(sample.points[i].imag()).cell(sample.truth[i]).cell(labels[i]);
        iw.end_row();
    }
    run.write_csv("iq.csv", iw, 2);

    // thermal state: Boltzmann draws over the pointer states, classified then fitted
    HilbertSpec hs = run.spec;
    hs.D = std::max(hs.D, a.states);
    TransmonEigenbasis tb = transmon_eigensystem(p, hs);
    std::vector<double> E(tb.energies.data(), tb.energies.data() + tb.energies.size());
    auto pop = boltzmann_populations(E, a.temperature, a.states);
    std::mt19937_64 rng(run.common.seed + 1);
    std::discrete_distribution<int> pick(pop.begin(), pop.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<IQ> shots;
    for (int i = 0; i < a.thermal_shots; ++i) {
        const auto& s = states[pick(rng)];
        double x = normal(rng), y = normal(rng);
        shots.push_back(s.center + s.sigma * IQ(x, y));
    }
    auto tl = classify(shots, states, co);
    std::vector<double> counted(6, 0.0);
    for (int l : tl)
        if (l >= 0 && l < 6)
            counted[l] += 1.0;
    ThermalFitResult tf = thermal_fit(counted, E);

    const IQ eps(1.0, 0.0);
    ClearOptimization clear = optimize_clear(eps, p.kappa_c, 0.0);
    CavityResponse square = cavity_response(square_pulse(eps), p.kappa_c, 0.0);
    CsvWriter ew({"kind", "t_ns", "re", "im"});
    auto envelope_rows = [&](const char* kind, const PulseEnvelope& env) {
        double t = 0;
        for (const auto& seg : env.segments) {
            ew.cell(kind).cell(t).cell(seg.amplitude.real()).cell(seg.amplitude.imag());
            ew.end_row();
            t += seg.duration;
            ew.cell(kind).cell(t).cell(seg.amplitude.real()).cell(seg.amplitude.imag());
            ew.end_row();
        }
    };
    envelope_rows("square", square_pulse(eps));
    envelope_rows("clear", clear.envelope);
    run.write_csv("envelopes.csv", ew, 0);
    CsvWriter rw({"kind", "t_ns", "re", "im", "abs"});
    auto response_rows = [&](const char* kind, const CavityResponse& r) {
        for (std::size_t i = 0; i < r.t.size(); i += 10) {
            rw.cell(kind).cell(r.t[i]).cell(r.alpha[i].real()).cell(r.alpha[i].imag()).cell(std::abs(r.alpha[i]));
            rw.end_row();
        }
    };
    response_rows("square", square);
    response_rows("clear", clear.response);
    run.write_csv("cavity_response.csv", rw, 0);

    json counts = json::array();
    for (const auto& row : conf.counts)
        counts.push_back(row);
    run.summary = {
        {"snr", a.snr},
        {"sigma", 1.0 / a.snr},
        {"chi_over_kappa", std::abs(p.chi_qc_target) / p.kappa_c},
        {"classification",
         {{"adjacent_confusion", conf.adjacent_confusion},
          {"misassignment", conf.misassignment},
          {"counts_columns", "label 0..5, 6+, outlier"},
          {"counts", counts}}},
        {"thermal",
         {{"T_true_mK", a.temperature},
          {"counted_populations", counted},
          {"T_eff_mK", finite_or_null(tf.T_eff_mK)},
          {"residual", tf.residual},
          {"below_1mK", tf.below_1mK},
          {"infinite_temperature", tf.infinite_temperature},
          {"non_monotone", tf.non_monotone}}},
        {"cavity",
         {{"square_ring_up_ns", finite_or_null(square.ring_up_ns)},
          {"square_ring_down_ns", finite_or_null(square.ring_down_ns)},
          {"clear_ring_up_ns", finite_or_null(clear.response.ring_up_ns)},
          {"clear_ring_down_ns", finite_or_null(clear.response.ring_down_ns)}}}};
    run.write_json("readout.json", run.summary);
}

struct FitArgs {
    std::string points;
    bool synthetic = false;
    double noise = 0;
    int flux_count = 21;
    double band = 0.010;
    std::string free = "E_Cq,E_Ca,E_J,L_a0,omega_c_bare,g_ac";
    int multistarts = 8;
    double start_offset = 0.05;
    std::string init_file;
    bool reference_anchors = false;
};

void cmd_fit(Run& run, const FitArgs& a)
{
    FitProblem prob;
    std::stringstream ss(a.free);
    std::string item;
    while (std::getline(ss, item, ','))
        prob.free_params.push_back(parse_fit_param(item));
    CircuitParams initial = a.init_file.empty() ? run.params : load_params(a.init_file);
    if (a.synthetic) {
        prob.points = synthetic_points(run.params, -0.2, 0.2, a.flux_count, all_transitions(), a.band, a.noise,
                                       run.common.seed);
        if (a.init_file.empty())
            for (FitParam f : prob.free_params)
                param_ref(initial, f) *= 1.0 + a.start_offset;
    } else {
        if (a.points.empty())
            throw std::invalid_argument("fit: give --points FILE or --synthetic");
        prob.points = read_points_csv(a.points);
    }
    if (a.reference_anchors) {
        prob.anchors = default_anchors();
    } else if (a.synthetic) {
        auto z = model_transitions(run.params, {0.0}, {Transition::q01, Transition::c01});
        prob.anchors = {{Observable::omega_q, z[0].freq[0], 0.005},
                        {Observable::omega_c, z[0].freq[1], 0.010},
                        {Observable::chi_qc, z[0].chi_qc, 0.0002}};
    }
    run.write("points.csv", format_points_csv(prob.points));

    FitOptions fo;
    fo.multistarts = a.multistarts;
    fo.seed = run.common.seed;
    FitResult r;
    std::string warning;
    try {
        r = fit(prob, initial, fo);
    } catch (const FitError& e) {
        r = e.best_effort;
        warning = e.what();
    }
    Identifiability id;
    json cond = nullptr;
    try {
        id = jacobian_condition(prob, r.params);
        cond = id.condition_number;
    } catch (const NumericalError&) {
    }
    json fitted = json::object();
    for (FitParam f : prob.free_params)
        fitted[fit_param_name(f)] = param_value(r.params, f);
    json starts = json::array();
    for (const auto& s : r.starts)
        starts.push_back({{"initial", s.initial},
                          {"final", s.final},
                          {"cost", s.cost},
                          {"iterations", s.iterations},
                          {"converged", s.converged}});
    json residuals = json::array();
    for (double v : r.residuals)
        residuals.push_back(finite_or_null(v));
    run.summary = {{"fitted", fitted},
                   {"params", params_json(r.params)},
                   {"cost", r.cost},
                   {"residuals", residuals},
                   {"condition_number", cond},
                   {"singular_values", id.singular_values},
                   {"best_start", r.best_start},
                   {"converged", r.converged},
                   {"starts", starts}};
    if (!warning.empty())
        run.summary["warning"] = warning;
    run.write_json("fit.json", run.summary);
}

struct CalibArgs {
    std::string input;
    double chi = std::numeric_limits<double>::quiet_NaN();
};

void cmd_calib(Run& run, const CalibArgs& a)
{
    CsvTable t = read_csv(a.input);
    int cp = t.column("power"), cs = t.column("shift_GHz");
    if (cp < 0 || cs < 0)
        throw std::invalid_argument(a.input + ": expected columns power, shift_GHz");
    std::vector<StarkPoint> pts;
    for (const auto& row : t.rows)
        pts.push_back({std::stod(row.at(cp)), std::stod(row.at(cs))});
    const double chi = std::isnan(a.chi) ? run.params.chi_qc_target : a.chi;
    PhotonCalibration c = photon_calibration(pts, chi);
    CsvWriter w({"power", "shift_GHz", "n_bar", "n_bar_fit"});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        w.cell(pts[i].power).cell(pts[i].shift).cell(c.n_bar[i]).cell(c.predict(pts[i].power));
        w.end_row();
    }
    run.write_csv("calibration.csv", w);
    run.summary = {{"chi_qc_GHz", chi},
                   {"slope_photons_per_power_unit", finite_or_null(c.slope)},
                   {"intercept", finite_or_null(c.intercept)},
                   {"power_min", c.power_min},
                   {"power_max", c.power_max}};
    run.write_json("calibration.json", run.summary);
}

// ---- output directory handling ----

fs::path temp_sibling(const fs::path& out)
{
    fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    return parent / ("." + out.filename().string() + ".tmp-" + std::to_string(::getpid()));
}

int execute(const std::string& name, const Common& common, const std::vector<std::string>& argv,
            const std::function<void(Run&)>& body)
{
    const fs::path out = common.out;
    if (out.empty() || out.filename().empty()) {
        std::cerr << "mist: --out must name a directory\n";
        return 2;
    }
    if (fs::exists(out) && !common.overwrite) {
        std::cerr << "mist: " << out.string() << " exists; pass --overwrite to replace it\n";
        return 1;
    }
    const fs::path tmp = temp_sibling(out);
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    const auto start = std::chrono::steady_clock::now();
    Run run{common, CircuitParams{}, HilbertSpec::desk(), 2000, tmp, {}, json::object()};
    json manifest = json::object();
    manifest["command"] = name;
    manifest["arguments"] = argv;
    manifest["version"] = version;
    manifest["seed"] = common.seed;
    manifest["scale"] = common.scale;
    int code = 0;
    std::string error;
    std::vector<std::string> warnings;
    try {
        if (common.scale == "full") {
            run.spec = HilbertSpec::full();
            warnings.push_back("full scale: D=20, d_c=500 diagonalizations take minutes each");
            std::cerr << "mist: warning: " << warnings.back() << "\n";
        } else if (common.scale != "desk") {
            throw std::invalid_argument("--scale must be desk or full");
        }
        if (!common.params_file.empty())
            run.params = load_params(common.params_file);
        for (const auto& w : run.params.validate()) {
            warnings.push_back(w);
            std::cerr << "mist: warning: " << w << "\n";
        }
        manifest["params"] = params_json(run.params);
        manifest["hilbert"] = spec_json(run.spec);
        body(run);
    } catch (const std::exception& e) {
        error = e.what();
        code = 1;
        std::cerr << "mist " << name << ": " << error << "\n";
        for (const auto& f : run.files)
            fs::remove(tmp / f);
        run.files.clear();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["status"] = code == 0 ? "ok" : "error";
    manifest["error"] = code == 0 ? json(nullptr) : json(error);
    manifest["warnings"] = warnings;
    manifest["files"] = run.files;
    manifest["simd"] = simd::isa_name(simd::active_isa());
    manifest["threads"] = thread_count();
    manifest["wall_time_s"] = wall;
    write_text(tmp / "manifest.json", manifest.dump(2) + "\n");

    if (fs::exists(out))
        fs::remove_all(out);
    fs::rename(tmp, out);
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mist: MIST branch analysis, classical chaos, readout and fitting toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--params", common.params_file, "flat key = value parameter file (defaults: reference device values)");
        sub->add_option("--out", common.out, "output directory (written atomically)")->required();
        sub->add_flag("--overwrite", common.overwrite, "replace an existing output directory");
        sub->add_option("--scale", common.scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_flag("--gnuplot", common.gnuplot, "also write whitespace-separated .dat files");
    };

    std::function<void(Run&)> body;
    std::string name;

    BranchesArgs ba;
    auto* br = app.add_subcommand("branches", "label dressed states and find crossings");
    add_common(br);
    br->add_option("--model", ba.model, "cosphi or transverse")->check(CLI::IsMember({"cosphi", "transverse"}));
    br->add_option("--flux", ba.flux, "external flux in units of Phi0");
    br->add_option("--pairs", ba.pairs, "branch pairs, e.g. 0-4,1-5 (default j=0,1 against j'<=8)");
    br->add_option("--delta", ba.delta, "photons exchanged")->check(CLI::PositiveNumber);
    br->add_option("--gap-threshold", ba.gap, "exact/avoided cut in MHz");
    br->add_option("--g-qc", ba.g_qc, "transverse coupling in GHz (default matched |phi_c| omega_c)");
    br->callback([&] { name = "branches"; body = [&](Run& r) { cmd_branches(r, ba); }; });

    MistMapArgs ma;
    auto* mm = app.add_subcommand("mist-map", "crossing photon number versus flux");
    add_common(mm);
    mm->add_option("--flux-min", ma.flux_min, "lowest flux in Phi0");
    mm->add_option("--flux-max", ma.flux_max, "highest flux in Phi0");
    mm->add_option("--flux-count", ma.flux_count, "flux grid points");
    mm->add_option("--pairs", ma.pairs, "branch pairs, e.g. 0-4,1-5");
    mm->add_option("--gap-threshold", ma.gap, "exact/avoided cut in MHz");
    mm->callback([&] { name = "mist-map"; body = [&](Run& r) { cmd_mist_map(r, ma); }; });

    PoincareArgs pa;
    auto* po = app.add_subcommand("poincare", "stroboscopic sections and Lyapunov classification");
    add_common(po);
    po->add_option("--model", pa.model, "cosphi or transverse")->check(CLI::IsMember({"cosphi", "transverse"}));
    po->add_option("--nbar", pa.nbar, "mean drive photon number");
    po->add_option("--periods", pa.periods, "drive periods (default: scale preset)");
    po->add_option("--steps", pa.steps, "integrator steps per period");
    po->add_option("--ics", pa.ics, "initial conditions along phi = 0");
    po->add_option("--ring", pa.ring, "extra initial conditions on each separatrix");
    po->add_option("--m-max", pa.m_max, "outermost resonance index");
    po->add_option("--isa", pa.isa, "scalar, avx2, neon or auto");
    po->callback([&] { name = "poincare"; body = [&](Run& r) { cmd_poincare(r, pa); }; });

    ChirikovArgs ca;
    auto* ch = app.add_subcommand("chirikov", "resonance-overlap margins versus drive strength");
    add_common(ch);
    ch->add_option("--nbar-max", ca.nbar_max, "largest mean photon number scanned");
    ch->add_option("--samples", ca.samples, "photon numbers sampled");
    ch->callback([&] { name = "chirikov"; body = [&](Run& r) { cmd_chirikov(r, ca); }; });

    StarkArgs sa;
    auto* st = app.add_subcommand("stark", "AC Stark shift of a transition along the photon ladder");
    add_common(st);
    st->add_option("--model", sa.model, "cosphi or transverse")->check(CLI::IsMember({"cosphi", "transverse"}));
    st->add_option("--flux", sa.flux, "external flux in units of Phi0");
    st->add_option("--pair", sa.pair, "transition, e.g. 0-1 or 0-4");
    st->add_option("--window", sa.window, "photon numbers in the linear fit");
    st->add_option("--g-qc", sa.g_qc, "transverse coupling in GHz (default matched |phi_c| omega_c)");
    st->callback([&] { name = "stark"; body = [&](Run& r) { cmd_stark(r, sa); }; });

    ReadoutArgs ra;
    auto* ro = app.add_subcommand("readout", "pointer states, classification, thermal fit, CLEAR response");
    add_common(ro);
    ro->add_option("--snr", ra.snr, "pointer separation scale over noise");
    ro->add_option("--states", ra.states, "pointer states simulated (>= 6)");
    ro->add_option("--shots", ra.shots, "shots per state");
    ro->add_option("--temperature", ra.temperature, "thermal-state temperature in mK");
    ro->add_option("--thermal-shots", ra.thermal_shots, "shots of the thermal-state histogram");
    ro->add_option("--radius", ra.radius, "threshold radius in sigma");
    ro->callback([&] { name = "readout"; body = [&](Run& r) { cmd_readout(r, ra); }; });

    FitArgs fa;
    auto* fi = app.add_subcommand("fit", "weighted least-squares fit of transition frequencies");
    add_common(fi);
    fi->add_option("--points", fa.points, "CSV: flux, transition_id, freq_GHz, band_GHz");
    fi->add_flag("--synthetic", fa.synthetic, "generate points from --params");
    fi->add_option("--noise", fa.noise, "relative frequency noise of synthetic points");
    fi->add_option("--flux-count", fa.flux_count, "flux points of synthetic data");
    fi->add_option("--band", fa.band, "band weight of synthetic points in GHz");
    fi->add_option("--free", fa.free, "comma-separated free parameters");
    fi->add_option("--multistarts", fa.multistarts, "simplex starts");
    fi->add_option("--start-offset", fa.start_offset, "relative offset of the synthetic initial guess");
    fi->add_option("--init", fa.init_file, "parameter file with the initial guess");
    fi->add_flag("--reference-anchors", fa.reference_anchors, "anchor omega_q, omega_c, chi_qc to the reference device values");
    fi->callback([&] { name = "fit"; body = [&](Run& r) { cmd_fit(r, fa); }; });

    CalibArgs cla;
    auto* cl = app.add_subcommand("calib", "photon-number calibration from AC Stark shifts");
    add_common(cl);
    cl->add_option("--input", cla.input, "CSV: power, shift_GHz")->required();
    cl->add_option("--chi", cla.chi, "chi_qc in GHz (default chi_qc_target)");
    cl->callback([&] { name = "calib"; body = [&](Run& r) { cmd_calib(r, cla); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return execute(name, common, args, body);
    } catch (const std::exception& e) {
        std::cerr << "mist: " << e.what() << "\n";
        return 1;
    }
}
