#include "mist/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_roots.h>

namespace mist {

namespace {

struct GslQuiet {
    gsl_error_handler_t* previous;
    GslQuiet() : previous(gsl_set_error_handler_off()) {}
    ~GslQuiet() { gsl_set_error_handler(previous); }
};

double call_scalar(double x, void* params)
{
    return (*static_cast<const std::function<double(double)>*>(params))(x);
}

}  // namespace

ScalarMinimum brent_minimize(const std::function<double(double)>& f, double a, double m, double b, double xtol,
                             int max_iter)
{
    GslQuiet quiet;
    gsl_function F{&call_scalar, const_cast<std::function<double(double)>*>(&f)};
    std::unique_ptr<gsl_min_fminimizer, decltype(&gsl_min_fminimizer_free)> s(
        gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent), &gsl_min_fminimizer_free);
    if (gsl_min_fminimizer_set(s.get(), &F, m, a, b) != GSL_SUCCESS)
        throw std::invalid_argument("brent_minimize: interior point does not bracket a minimum");
    ScalarMinimum r;
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        if (gsl_min_fminimizer_iterate(s.get()) != GSL_SUCCESS)
            break;
        double lo = gsl_min_fminimizer_x_lower(s.get()), hi = gsl_min_fminimizer_x_upper(s.get());
        if (gsl_min_test_interval(lo, hi, xtol, 0.0) == GSL_SUCCESS) {
            r.converged = true;
            break;
        }
    }
    r.x = gsl_min_fminimizer_x_minimum(s.get());
    r.f = gsl_min_fminimizer_f_minimum(s.get());
    return r;
}

ScalarMinimum grid_then_brent(const std::function<double(double)>& f, double a, double b, int samples, double xtol)
{
    if (samples < 3 || !(b > a))
        throw std::invalid_argument("grid_then_brent: need b > a and at least 3 samples");
    std::vector<double> xs(samples), fs(samples);
    int best = 0;
    for (int i = 0; i < samples; ++i) {
        xs[i] = a + (b - a) * i / (samples - 1);
        fs[i] = f(xs[i]);
        if (fs[i] < fs[best])
            best = i;
    }
    ScalarMinimum r{xs[best], fs[best], 0, true};
    if (best == 0 || best == samples - 1)
        return r;
    if (!(fs[best] < fs[best - 1] && fs[best] < fs[best + 1]))
        return r;
    ScalarMinimum refined = brent_minimize(f, xs[best - 1], xs[best], xs[best + 1], xtol);
    return refined.f <= r.f ? refined : r;
}

double brent_root(const std::function<double(double)>& f, double a, double b, double xtol, int max_iter)
{
    GslQuiet quiet;
    double fa = f(a), fb = f(b);
    if (fa == 0)
        return a;
    if (fb == 0)
        return b;
    if ((fa < 0) == (fb < 0))
        throw std::invalid_argument("brent_root: interval does not bracket a root");
    gsl_function F{&call_scalar, const_cast<std::function<double(double)>*>(&f)};
    std::unique_ptr<gsl_root_fsolver, decltype(&gsl_root_fsolver_free)> s(gsl_root_fsolver_alloc(gsl_root_fsolver_brent),
                                                                         &gsl_root_fsolver_free);
    gsl_root_fsolver_set(s.get(), &F, a, b);
    for (int i = 0; i < max_iter; ++i) {
        if (gsl_root_fsolver_iterate(s.get()) != GSL_SUCCESS)
            break;
        double lo = gsl_root_fsolver_x_lower(s.get()), hi = gsl_root_fsolver_x_upper(s.get());
        if (gsl_root_test_interval(lo, hi, xtol, 0.0) == GSL_SUCCESS)
            break;
    }
    return gsl_root_fsolver_root(s.get());
}

namespace {

struct BoundedObjective {
    const std::function<double(const std::vector<double>&)>* f;
    const std::vector<double>* lower;
    const std::vector<double>* upper;
    std::vector<double> x;

    void map(const gsl_vector* y)
    {
        for (std::size_t i = 0; i < x.size(); ++i) {
            double mid = 0.5 * ((*lower)[i] + (*upper)[i]), half = 0.5 * ((*upper)[i] - (*lower)[i]);
            x[i] = mid + half * std::sin(gsl_vector_get(y, i));
        }
    }
};

double call_bounded(const gsl_vector* y, void* params)
{
    auto* obj = static_cast<BoundedObjective*>(params);
    obj->map(y);
    double v = (*obj->f)(obj->x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

}  // namespace

SimplexResult bounded_simplex(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                              const std::vector<double>& lower, const std::vector<double>& upper,
                              const SimplexOptions& opt)
{
    const std::size_t n = x0.size();
    if (n == 0 || lower.size() != n || upper.size() != n)
        throw std::invalid_argument("bounded_simplex: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (!(upper[i] > lower[i]) || x0[i] < lower[i] || x0[i] > upper[i])
            throw std::invalid_argument("bounded_simplex: initial point outside bounds");

    GslQuiet quiet;
    BoundedObjective obj{&f, &lower, &upper, std::vector<double>(n)};
    gsl_multimin_function F{&call_bounded, n, &obj};

    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> y(gsl_vector_alloc(n), &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(n), &gsl_vector_free);
    for (std::size_t i = 0; i < n; ++i) {
        double mid = 0.5 * (lower[i] + upper[i]), half = 0.5 * (upper[i] - lower[i]);
        double s = std::clamp((x0[i] - mid) / half, -1.0, 1.0);
        gsl_vector_set(y.get(), i, std::asin(s));
        gsl_vector_set(step.get(), i, opt.initial_step * 3.14159265358979323846);
    }
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &F, y.get(), step.get());

    SimplexResult r;
    for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS)
            break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.size_tol) == GSL_SUCCESS) {
            r.converged = true;
            break;
        }
    }
    obj.map(gsl_multimin_fminimizer_x(s.get()));
    r.x = obj.x;
    r.f = gsl_multimin_fminimizer_minimum(s.get());
    return r;
}

}  // namespace mist
