#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "mist/fitting.hpp"

using namespace mist;

namespace {

std::vector<double> flux_grid(double lo, double hi, int count)
{
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * i / (count - 1);
    return g;
}

FitProblem synthetic_problem(const CircuitParams& truth, int count = 11)
{
    FitProblem fp;
    fp.points = synthetic_points(truth, -0.2, 0.2, count, all_transitions(), 0.005, 0.0, 1);
    fp.free_params = all_fit_params();
    return fp;
}

}  // namespace

TEST_CASE("reference parameters reproduce the zero-flux spectrum")
{
    CircuitParams p;
    auto t = model_transitions(p, {0.0}, {Transition::q01, Transition::c01, Transition::a01});
    REQUIRE(t.size() == 1);
    CHECK(t[0].freq[0] == doctest::Approx(2.0693).epsilon(0.001));
    CHECK(t[0].freq[1] == doctest::Approx(7.2938).epsilon(0.001));
    CHECK(t[0].freq[2] > 6.0);
    CHECK(t[0].freq[2] < 7.0);
    CHECK(t[0].chi_qc == doctest::Approx(-0.00202).epsilon(0.15));
}

TEST_CASE("q04 at flux -0.04 lies near the four-photon cavity band")
{
    CircuitParams p;
    auto t = model_transitions(p, {-0.04}, {Transition::q04});
    CHECK(t[0].freq[0] == doctest::Approx(7.728).epsilon(0.03 / 7.728));
}

TEST_CASE("transition frequencies are even in flux")
{
    CircuitParams p;
    auto t = model_transitions(p, {-0.1, 0.1}, all_transitions());
    for (std::size_t i = 0; i < all_transitions().size(); ++i)
        CHECK(t[0].freq[i] == doctest::Approx(t[1].freq[i]).epsilon(1e-9));
}

TEST_CASE("cost vanishes at the generating parameters and is order independent")
{
    CircuitParams truth;
    FitProblem fp = synthetic_problem(truth);
    CHECK(weighted_cost(fp, truth) < 1e-20);

    CircuitParams off = truth;
    off.E_J *= 1.01;
    const double c = weighted_cost(fp, off);
    CHECK(c > 0);
    std::shuffle(fp.points.begin(), fp.points.end(), std::mt19937_64(5));
    CHECK(weighted_cost(fp, off) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("all six parameters are identifiable from the synthetic spectrum")
{
    CircuitParams truth;
    FitProblem fp = synthetic_problem(truth, 21);
    Identifiability id = jacobian_condition(fp, truth);
    CHECK(id.rank == 6);
    // well away from numerical rank deficiency
    CHECK(id.condition_number < 1e7);
}

TEST_CASE("single-parameter fit recovers a perturbed E_J")
{
    CircuitParams truth;
    FitProblem fp = synthetic_problem(truth);
    fp.free_params = {FitParam::E_J};
    CircuitParams start = truth;
    start.E_J *= 1.10;
    FitOptions opt;
    opt.multistarts = 2;
    FitResult r = fit(fp, start, opt);
    CHECK(r.converged);
    CHECK(r.params.E_J == doctest::Approx(truth.E_J).epsilon(0.005));
    CHECK(r.starts.size() == 2);
}

TEST_CASE("parameter lookup and names round trip")
{
    CircuitParams p;
    for (FitParam f : all_fit_params()) {
        CHECK(parse_fit_param(fit_param_name(f)) == f);
        param_ref(p, f) = 1.5;
        CHECK(param_value(p, f) == 1.5);
    }
    for (Transition t : all_transitions())
        CHECK(parse_transition(transition_name(t)) == t);
    CHECK_THROWS(parse_fit_param("E_X"));
    CHECK_THROWS(parse_transition("q09"));
}

TEST_CASE("digitized points survive a CSV round trip")
{
    CircuitParams truth;
    auto pts = synthetic_points(truth, -0.1, 0.1, 5, {Transition::q01, Transition::c01}, 0.004, 0.001, 9);
    auto path = std::filesystem::temp_directory_path() / "mist_points_roundtrip.csv";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::string text = format_points_csv(pts);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fclose(f);
    }
    auto back = read_points_csv(path);
    std::filesystem::remove(path);
    REQUIRE(back.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(back[i].flux_ext == pts[i].flux_ext);
        CHECK(back[i].id == pts[i].id);
        CHECK(back[i].freq == pts[i].freq);
        CHECK(back[i].band_weight == pts[i].band_weight);
    }
}

TEST_CASE("noisy synthetic points are reproducible from the seed")
{
    CircuitParams truth;
    auto a = synthetic_points(truth, -0.1, 0.1, 4, {Transition::q01}, 0.004, 0.01, 3);
    auto b = synthetic_points(truth, -0.1, 0.1, 4, {Transition::q01}, 0.004, 0.01, 3);
    auto c = synthetic_points(truth, -0.1, 0.1, 4, {Transition::q01}, 0.004, 0.01, 4);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].freq == b[i].freq);
    CHECK(a[0].freq != c[0].freq);
}

TEST_CASE("fit problem validation")
{
    FitProblem fp;
    CHECK_THROWS(fp.validate());
    DigitizedPoint bad;
    bad.band_weight = 0;
    CHECK_THROWS(bad.validate());
    CircuitParams truth;
    fp = synthetic_problem(truth, 3);
    fp.bounds = {{1, 2}};
    CHECK_THROWS(fp.validate());
}

TEST_CASE("default anchors")
{
    auto a = default_anchors();
    REQUIRE(a.size() == 3);
    CHECK(a[0].target == doctest::Approx(2.0687));
    CHECK(a[1].target == doctest::Approx(7.294));
    CHECK(a[2].target == doctest::Approx(-0.00202));
}
