#include "mist/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

namespace mist {

const char* factor_name(Factor f)
{
    switch (f) {
    case Factor::TransmonEigen: return "transmon-eigen";
    case Factor::AncillaFock: return "ancilla-fock";
    case Factor::CavityFock: return "cavity-fock";
    }
    return "?";
}

int HermitianOperator::factor_dim(Factor f) const
{
    for (const auto& b : basis)
        if (b.kind == f)
            return b.dim;
    return 0;
}

double HermitianOperator::hermiticity_defect() const
{
    double scale = data.cwiseAbs().maxCoeff();
    if (scale == 0)
        return 0;
    return (data - data.adjoint()).cwiseAbs().maxCoeff() / scale;
}

void HermitianOperator::check() const
{
    if (data.rows() != data.cols())
        throw std::invalid_argument("HermitianOperator: matrix not square");
    long long prod = 1;
    for (const auto& b : basis)
        prod *= b.dim;
    if (prod != data.rows())
        throw std::invalid_argument("HermitianOperator: basis dims do not match matrix size");
    double d = hermiticity_defect();
    if (!(d < 1e-12))
        throw NumericalError("HermitianOperator: hermiticity defect " + std::to_string(d));
}

CVector EigenSystem::vector(Eigen::Index k) const
{
    if (is_complex())
        return complex.col(k);
    CVector v = real.col(k).cast<cplx>();
    if (phase.size())
        v = v.cwiseProduct(phase);
    return v;
}

CMatrix EigenSystem::vectors() const
{
    if (is_complex())
        return complex;
    CMatrix v = real.cast<cplx>();
    if (phase.size())
        v = phase.asDiagonal() * v;
    return v;
}

RVector EigenSystem::weights(Eigen::Index k) const
{
    if (is_complex())
        return complex.col(k).cwiseAbs2();
    return real.col(k).cwiseAbs2();
}

EigenSystem EigenSystem::permuted(const std::vector<Eigen::Index>& perm) const
{
    EigenSystem out;
    out.phase = phase;
    auto n = static_cast<Eigen::Index>(perm.size());
    out.values.resize(n);
    if (is_complex())
        out.complex.resize(complex.rows(), n);
    else
        out.real.resize(real.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = values[perm[i]];
        if (is_complex())
            out.complex.col(i) = complex.col(perm[i]);
        else
            out.real.col(i) = real.col(perm[i]);
    }
    return out;
}

std::optional<CVector> real_gauge(const CMatrix& H, double tol)
{
    const Eigen::Index n = H.rows();
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    const double zero = tol * scale;
    CVector g = CVector::Zero(n);
    std::vector<char> seen(n, 0);
    for (Eigen::Index root = 0; root < n; ++root) {
        if (seen[root])
            continue;
        seen[root] = 1;
        g[root] = 1.0;
        std::deque<Eigen::Index> queue{root};
        while (!queue.empty()) {
            Eigen::Index i = queue.front();
            queue.pop_front();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (seen[j] || std::abs(H(i, j)) <= zero)
                    continue;
                // choose g_j so that conj(g_i) H_ij g_j is real positive
                cplx h = std::conj(g[i]) * H(i, j);
                g[j] = std::conj(h) / std::abs(h);
                seen[j] = 1;
                queue.push_back(j);
            }
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs((std::conj(g[i]) * H(i, j) * g[j]).imag()) > zero)
                return std::nullopt;
    return g;
}

namespace {

void solve_real(RMatrix& a, RVector& w)
{
    const lapack_int n = static_cast<lapack_int>(a.rows());
    w.resize(n);
    if (n == 0)
        return;
    lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    if (info != 0)
        throw NumericalError("dsyevd failed, info = " + std::to_string(info));
}

void solve_complex(CMatrix& a, RVector& w)
{
    const lapack_int n = static_cast<lapack_int>(a.rows());
    w.resize(n);
    if (n == 0)
        return;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                     reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
    if (info != 0)
        throw NumericalError("zheevd failed, info = " + std::to_string(info));
}

// Index of the largest-magnitude component; ties resolve to the lower index.
template <typename Vec>
Eigen::Index dominant(const Vec& v)
{
    Eigen::Index best = 0;
    double bw = -1;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double w = std::norm(v[i]);
        if (w > bw * (1 + 1e-12)) {
            bw = w;
            best = i;
        }
    }
    return best;
}

template <typename Mat>
void canonicalize(Mat& V, const RVector& w, double tol)
{
    using Scalar = typename Mat::Scalar;
    const Eigen::Index n = w.size();
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index end = start + 1;
        while (end < n && w[end] - w[end - 1] <= tol * std::max(1.0, std::abs(w[end])))
            ++end;
        const Eigen::Index m = end - start;
        if (m > 1) {
            // Rotate inside the cluster to diagonalize the bare-index operator,
            // which localizes vectors on individual product states.
            Mat block = V.middleCols(start, m);
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1> idx =
                RVector::LinSpaced(V.rows(), 0, double(V.rows() - 1)).template cast<Scalar>();
            Mat P = block.adjoint() * idx.asDiagonal() * block;
            Eigen::SelfAdjointEigenSolver<Mat> es(P);
            Mat rotated = block * es.eigenvectors();
            std::vector<Eigen::Index> order(m);
            std::iota(order.begin(), order.end(), 0);
            std::vector<Eigen::Index> dom(m);
            std::vector<double> ov(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                dom[k] = dominant(rotated.col(k));
                ov[k] = std::norm(rotated(dom[k], k));
            }
            std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                if (ov[a] != ov[b])
                    return ov[a] > ov[b];
                return dom[a] < dom[b];
            });
            for (Eigen::Index k = 0; k < m; ++k)
                V.col(start + k) = rotated.col(order[k]);
        }
        start = end;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index i = dominant(V.col(k));
        Scalar c = V(i, k);
        double a = std::abs(c);
        if (a > 0)
            V.col(k) *= Scalar(a) / c;
    }
}

}  // namespace

EigenSystem eigh(const RMatrix& H, double degeneracy_tol)
{
    EigenSystem es;
    es.real = H;
    solve_real(es.real, es.values);
    canonicalize(es.real, es.values, degeneracy_tol);
    return es;
}

EigenSystem eigh(const HermitianOperator& H, double degeneracy_tol)
{
    H.check();
    EigenSystem es;
    const double imag_max = H.data.imag().cwiseAbs().maxCoeff();
    if (imag_max == 0) {
        es.real = H.data.real();
        solve_real(es.real, es.values);
        canonicalize(es.real, es.values, degeneracy_tol);
        return es;
    }
    if (auto g = real_gauge(H.data)) {
        CMatrix rotated = g->conjugate().asDiagonal() * H.data * g->asDiagonal();
        es.real = rotated.real();
        es.real = 0.5 * (es.real + es.real.transpose()).eval();
        es.phase = *g;
        solve_real(es.real, es.values);
        canonicalize(es.real, es.values, degeneracy_tol);
        return es;
    }
    es.complex = H.data;
    solve_complex(es.complex, es.values);
    canonicalize(es.complex, es.values, degeneracy_tol);
    return es;
}

TridiagonalEigen tridiagonal_lowest(const RVector& diag, const RVector& offdiag, int count)
{
    const lapack_int n = static_cast<lapack_int>(diag.size());
    if (count < 1 || count > n)
        throw std::invalid_argument("tridiagonal_lowest: bad eigenpair count");
    if (offdiag.size() != std::max<lapack_int>(n - 1, 0))
        throw std::invalid_argument("tridiagonal_lowest: offdiag size mismatch");
    RVector d = diag;
    RVector e(n);
    e.head(n - 1) = offdiag;
    e[n - 1] = 0;
    lapack_int m = 0;
    RVector w(n);
    RMatrix z(n, count);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(count));
    lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, count,
                                     0.0, &m, w.data(), z.data(), n, isuppz.data());
    if (info != 0 || m != count)
        throw NumericalError("dstevr failed, info = " + std::to_string(info));
    TridiagonalEigen out{w.head(count), z};
    for (int k = 0; k < count; ++k) {
        Eigen::Index i = dominant(out.vectors.col(k));
        if (out.vectors(i, k) < 0)
            out.vectors.col(k) *= -1.0;
    }
    return out;
}

TridiagonalEigen tridiagonal_all(const RVector& diag, const RVector& offdiag)
{
    return tridiagonal_lowest(diag, offdiag, static_cast<int>(diag.size()));
}

RMatrix annihilation(int dim)
{
    RMatrix a = RMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n)
        a(n - 1, n) = std::sqrt(double(n));
    return a;
}

RMatrix quadrature_function(int dim, int buffer, const std::function<double(double)>& f)
{
    const int big = dim + buffer;
    RVector diag = RVector::Zero(big);
    RVector off(big - 1);
    for (int n = 1; n < big; ++n)
        off[n - 1] = std::sqrt(double(n));
    TridiagonalEigen x = tridiagonal_all(diag, off);
    RVector fx = x.values.unaryExpr(f);
    RMatrix top = x.vectors.topRows(dim);
    return top * fx.asDiagonal() * top.transpose();
}

RMatrix kron(const RMatrix& a, const RMatrix& b)
{
    RMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b)
{
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace mist
