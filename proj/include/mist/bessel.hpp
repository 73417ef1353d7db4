#pragma once

#include <vector>

namespace mist {

// J_0(x) .. J_nmax(x) by Miller's backward recurrence, normalized with
// J_0 + 2 Σ J_2k = 1. Valid for any finite x; negative x via J_n(−x) = (−1)^n J_n(x).
std::vector<double> bessel_j_sequence(int nmax, double x);

// J_n(x) for any integer n.
double bessel_j(int n, double x);

}  // namespace mist
