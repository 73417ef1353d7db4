#include "mist/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace mist {

std::vector<double> bessel_j_sequence(int nmax, double x)
{
    if (nmax < 0)
        throw std::invalid_argument("bessel_j_sequence: nmax must be >= 0");
    if (!std::isfinite(x))
        throw std::invalid_argument("bessel_j_sequence: non-finite argument");
    std::vector<double> out(nmax + 1, 0.0);
    if (x == 0) {
        out[0] = 1.0;
        return out;
    }
    const bool negative = x < 0;
    const double ax = std::abs(x);

    // start well above both the order and the argument
    int top = std::max(nmax, static_cast<int>(ax)) + 20 + static_cast<int>(std::sqrt(40.0 * (std::max(nmax, static_cast<int>(ax)) + 1)));
    top += top % 2;
    const double big = 1e250, small = 1e-250;

    double jp1 = 0.0, j = 1e-300, norm = 0.0;
    for (int k = top; k > 0; --k) {
        double jm1 = 2.0 * k / ax * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds the unnormalized J_{k-1}
        if (k - 1 <= nmax)
            out[k - 1] = j;
        if ((k - 1) % 2 == 0 && k - 1 > 0)
            norm += 2.0 * j;
        if (std::abs(j) > big) {
            j *= small;
            jp1 *= small;
            norm *= small;
            for (int m = k - 1; m <= nmax; ++m)
                out[m] *= small;
        }
    }
    norm += j;
    for (double& v : out)
        v /= norm;
    if (negative)
        for (int n = 1; n <= nmax; n += 2)
            out[n] = -out[n];
    return out;
}

double bessel_j(int n, double x)
{
    int an = std::abs(n);
    double v = bessel_j_sequence(an, x)[an];
    return (n < 0 && an % 2) ? -v : v;
}

}  // namespace mist
