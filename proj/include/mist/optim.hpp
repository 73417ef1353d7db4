#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mist {

struct ScalarMinimum {
    double x = 0;
    double f = 0;
    int iterations = 0;
    bool converged = false;
};

// Brent minimization on [a, b] with an interior guess m (f(m) < f(a), f(b)).
ScalarMinimum brent_minimize(const std::function<double(double)>& f, double a, double m, double b,
                             double xtol = 1e-10, int max_iter = 200);

// Bracket a minimum on a uniform grid of `samples` points, then refine with Brent.
ScalarMinimum grid_then_brent(const std::function<double(double)>& f, double a, double b, int samples,
                              double xtol = 1e-10);

// Root of f on [a, b] with a sign change (Brent-Dekker).
double brent_root(const std::function<double(double)>& f, double a, double b, double xtol = 1e-12, int max_iter = 200);

struct SimplexOptions {
    double initial_step = 0.1;  // fraction of each bound interval
    double size_tol = 1e-9;     // simplex size in the unbounded coordinates
    int max_iter = 4000;
};

struct SimplexResult {
    std::vector<double> x;
    double f = 0;
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead (GSL nmsimplex2) inside box bounds via x = mid + half·sin(y).
SimplexResult bounded_simplex(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                              const std::vector<double>& lower, const std::vector<double>& upper,
                              const SimplexOptions& opt = {});

}  // namespace mist
