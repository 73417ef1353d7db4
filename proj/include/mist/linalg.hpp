#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mist {

using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using cplx = std::complex<double>;

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Factor { TransmonEigen, AncillaFock, CavityFock };

struct FactorDim {
    Factor kind;
    int dim;
};

const char* factor_name(Factor f);

// Dense Hermitian matrix on an ordered tensor product; the last factor varies fastest.
struct HermitianOperator {
    CMatrix data;
    std::vector<FactorDim> basis;

    int dim() const { return static_cast<int>(data.rows()); }
    int factor_dim(Factor f) const;  // 0 if absent
    double hermiticity_defect() const;  // max|M - M^†| / max|M|
    // Throws if the defect exceeds 1e-12 or the basis does not multiply to dim.
    void check() const;
};

// Eigenpairs sorted ascending. Vectors are either real (optionally times a
// diagonal phase gauge) or general complex.
struct EigenSystem {
    RVector values;
    RMatrix real;
    CVector phase;
    CMatrix complex;

    bool is_complex() const { return complex.size() > 0; }
    Eigen::Index dim() const { return values.size(); }
    CVector vector(Eigen::Index k) const;
    CMatrix vectors() const;
    // |⟨basis|k⟩|² for all basis states
    RVector weights(Eigen::Index k) const;
    // Reorders columns: new column i is old column perm[i].
    EigenSystem permuted(const std::vector<Eigen::Index>& perm) const;
};

// Full eigendecomposition (LAPACK dsyevd/zheevd). A complex matrix that is
// real up to a diagonal unitary is solved in the real gauge. Degenerate
// clusters are rotated to localize on bare basis states and ordered by the
// bare state they overlap most; each vector's largest component is made
// real positive.
EigenSystem eigh(const HermitianOperator& H, double degeneracy_tol = 1e-9);
EigenSystem eigh(const RMatrix& H, double degeneracy_tol = 1e-9);

// Phases g with conj(g_i) H_ij g_j real for all i,j, if such a gauge exists.
std::optional<CVector> real_gauge(const CMatrix& H, double tol = 1e-13);

struct TridiagonalEigen {
    RVector values;
    RMatrix vectors;
};

// Lowest `count` eigenpairs of a real symmetric tridiagonal matrix (dstevr).
TridiagonalEigen tridiagonal_lowest(const RVector& diag, const RVector& offdiag, int count);
TridiagonalEigen tridiagonal_all(const RVector& diag, const RVector& offdiag);

// Annihilation operator on `dim` Fock states.
RMatrix annihilation(int dim);

// f applied to the quadrature X = a + a† built in `dim + buffer` states by
// spectral decomposition, then truncated to the top-left dim×dim block.
RMatrix quadrature_function(int dim, int buffer, const std::function<double(double)>& f);

// Kronecker product helpers.
RMatrix kron(const RMatrix& a, const RMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace mist
