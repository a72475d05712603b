#pragma once

// Dense complex linear algebra on small matrices: Hermitian eigensolver
// (cyclic Jacobi), singular values, inversion, rank, kernel bases.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"

namespace vsl {

using Complex = std::complex<double>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Complex{0.0, 0.0}) {}

    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionMismatch("ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    Complex operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    const std::vector<Complex>& data() const { return data_; }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    ComplexMatrix& operator*=(Complex s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
    friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator*(ComplexMatrix a, double s) { return a *= Complex(s, 0.0); }
    friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= Complex(s, 0.0); }
    friend ComplexMatrix operator-(ComplexMatrix a) { return a *= Complex(-1.0, 0.0); }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("matmul shape");
        ComplexMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix m(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    ComplexMatrix conjugated() const {
        ComplexMatrix m = *this;
        for (auto& v : m.data_) v = std::conj(v);
        return m;
    }

    Complex trace() const {
        if (!square()) throw DimensionMismatch("trace of non-square matrix");
        Complex t{};
        for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius() const {
        double s = 0.0;
        for (const auto& v : data_) s += std::norm(v);
        return std::sqrt(s);
    }

    std::vector<Complex> col(std::size_t j) const {
        std::vector<Complex> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    void set_col(std::size_t j, const std::vector<Complex>& c) {
        assert(c.size() == rows_);
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    // matrix * vector
    std::vector<Complex> apply(const std::vector<Complex>& x) const {
        if (x.size() != cols_) throw DimensionMismatch("matvec shape");
        std::vector<Complex> y(rows_, Complex{});
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

private:
    void check_same_shape(const ComplexMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("shape mismatch");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Complex> data_;
};

inline ComplexMatrix hermitize(const ComplexMatrix& m) {
    ComplexMatrix h = m;
    h += m.adjoint();
    h *= Complex(0.5, 0.0);
    return h;
}

inline double vec_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline Complex vec_dot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    assert(a.size() == b.size());
    Complex s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

struct EigResult {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // unitary, column k pairs with values[k]
};

// Cyclic complex Jacobi. Each sweep annihilates every off-diagonal entry once
// with a unitary plane rotation built from the phase of a_pq and the real
// rotation that diagonalizes the de-phased 2x2 block.
inline EigResult herm_eig(const ComplexMatrix& h_in) {
    if (!h_in.square()) throw DimensionMismatch("herm_eig needs a square matrix");
    const std::size_t n = h_in.rows();
    ComplexMatrix a = hermitize(h_in);
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double scale = a.frobenius();
    const double stop = 1e-15 * std::max(1.0, scale);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a(i, j));
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300) continue;
                const Complex phase = apq / mag;  // a_pq = mag * phase
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // columns: col_p <- c*col_p - s*conj(phase)*col_q ; col_q <- s*phase*col_p + c*col_q
                const Complex sp = s * phase;
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - std::conj(sp) * aiq;
                    a(i, q) = sp * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const Complex apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - sp * aqj;
                    a(q, j) = std::conj(sp) * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - std::conj(sp) * viq;
                    v(i, q) = sp * vip + c * viq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });

    EigResult r;
    r.values.resize(n);
    r.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        r.values[k] = diag[order[k]];
        for (std::size_t i = 0; i < n; ++i) r.vectors(i, k) = v(i, order[k]);
    }
    return r;
}

struct SvdResult {
    std::vector<double> sigma;  // descending
    ComplexMatrix v;            // unitary, column k pairs with sigma[k]
};

// One-sided Jacobi on the columns.  Forming the Gram matrix first would square
// the condition number and bury any singular value below sqrt(eps) * sigma_max
// in noise; rotating the matrix itself keeps the small ones sharp, which the
// root refinement leans on.
inline SvdResult svd_jacobi(const ComplexMatrix& m) {
    const std::size_t n = m.cols();
    ComplexMatrix a = m;
    ComplexMatrix v = ComplexMatrix::identity(n);
    auto col_dot = [&](std::size_t p, std::size_t q) {
        Complex s{};
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::conj(a(i, p)) * a(i, q);
        return s;
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double app = col_dot(p, p).real();
                const double aqq = col_dot(q, q).real();
                const Complex apq = col_dot(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-15 * std::sqrt(app * aqq) || mag <= 1e-300) continue;
                rotated = true;
                const Complex phase = apq / mag;
                const double tau = (aqq - app) / (2.0 * mag);
                const double t =
                    (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const Complex sp = (t * c) * phase;
                for (std::size_t i = 0; i < a.rows(); ++i) {
                    const Complex aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - std::conj(sp) * aiq;
                    a(i, q) = sp * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - std::conj(sp) * viq;
                    v(i, q) = sp * vip + c * viq;
                }
            }
        if (!rotated) break;
    }
    std::vector<double> sig(n);
    for (std::size_t j = 0; j < n; ++j) sig[j] = std::sqrt(col_dot(j, j).real());
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });
    SvdResult r;
    r.sigma.resize(n);
    r.v = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        r.sigma[k] = sig[order[k]];
        for (std::size_t i = 0; i < n; ++i) r.v(i, k) = v(i, order[k]);
    }
    return r;
}

// Singular values, descending.
inline std::vector<double> singular_values(const ComplexMatrix& m) {
    return svd_jacobi(m).sigma;
}

// Orthonormal basis of the numerical kernel: right singular vectors whose
// singular value falls at or below tol * max(1, sigma_max). N x k, k may be 0.
inline ComplexMatrix kernel_basis(const ComplexMatrix& m, double tol = 1e-8) {
    const SvdResult svd = svd_jacobi(m);
    const std::size_t n = m.cols();
    const double smax = svd.sigma.empty() ? 0.0 : svd.sigma.front();
    const double thresh = tol * std::max(1.0, smax);
    std::size_t k = 0;
    while (k < n && svd.sigma[n - 1 - k] <= thresh) ++k;
    ComplexMatrix basis(n, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) basis(i, j) = svd.v(i, n - 1 - j);
    return basis;
}

inline std::size_t numerical_rank(const ComplexMatrix& m, double tol = 1e-8) {
    const std::vector<double> s = singular_values(m);
    const double smax = s.empty() ? 0.0 : s.front();
    std::size_t r = 0;
    for (double v : s)
        if (v > tol * std::max(1.0, smax)) ++r;
    return r;
}

// Gauss-Jordan with partial pivoting; rejects matrices with
// sigma_min <= 1e-13 * sigma_max up front.
inline ComplexMatrix invert(const ComplexMatrix& m) {
    if (!m.square()) throw DimensionMismatch("invert needs a square matrix");
    const std::size_t n = m.rows();
    const std::vector<double> sv = singular_values(m);
    if (sv.empty() || sv.back() <= 1e-13 * sv.front())
        throw SingularMatrix("invert: singular to working precision");

    ComplexMatrix a = m;
    ComplexMatrix inv = ComplexMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a(col, col));
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > best) { best = std::abs(a(i, col)); piv = i; }
        if (best == 0.0) throw SingularMatrix("invert: zero pivot");
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        const Complex d = a(col, col);
        for (std::size_t j = 0; j < n; ++j) { a(col, j) /= d; inv(col, j) /= d; }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col) continue;
            const Complex f = a(i, col);
            if (f == Complex{}) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) -= f * a(col, j);
                inv(i, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

// LU determinant with partial pivoting.
inline Complex determinant(const ComplexMatrix& m) {
    if (!m.square()) throw DimensionMismatch("determinant needs a square matrix");
    const std::size_t n = m.rows();
    ComplexMatrix a = m;
    Complex det{1.0, 0.0};
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a(col, col));
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > best) { best = std::abs(a(i, col)); piv = i; }
        if (best == 0.0) return Complex{};
        if (piv != col) {
            det = -det;
            for (std::size_t j = col; j < n; ++j) std::swap(a(piv, j), a(col, j));
        }
        det *= a(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const Complex f = a(i, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
        }
    }
    return det;
}

// Power iteration on M*M (50 steps, fixed seed) -> operator 2-norm estimate.
inline double spectral_norm(const ComplexMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    const ComplexMatrix g = m.adjoint() * m;
    const std::size_t n = g.rows();
    std::mt19937_64 rng(0x9E3779B97F4A7C15ull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex(u(rng), u(rng));
    double nx = vec_norm(x);
    if (nx == 0.0) { x[0] = 1.0; nx = 1.0; }
    for (auto& v : x) v /= nx;
    double lam = 0.0;
    for (int it = 0; it < 50; ++it) {
        std::vector<Complex> y = g.apply(x);
        const double ny = vec_norm(y);
        if (ny == 0.0) return 0.0;
        lam = ny;
        for (auto& v : y) v /= ny;
        x = std::move(y);
    }
    return std::sqrt(lam);
}

inline double cond_estimate(const ComplexMatrix& m) {
    const std::vector<double> s = singular_values(m);
    if (s.empty() || s.back() == 0.0) return std::numeric_limits<double>::infinity();
    return s.front() / s.back();
}

// Modified Gram-Schmidt (two passes) that drops columns whose residual norm
// falls at or below drop_tol. Returns an orthonormal N x r matrix.
inline ComplexMatrix orthonormal_columns(const ComplexMatrix& cols, double drop_tol = 1e-9) {
    const std::size_t n = cols.rows();
    std::vector<std::vector<Complex>> kept;
    for (std::size_t j = 0; j < cols.cols(); ++j) {
        std::vector<Complex> w = cols.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : kept) {
                const Complex c = vec_dot(q, w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        const double nw = vec_norm(w);
        if (nw <= drop_tol) continue;
        for (auto& v : w) v /= nw;
        kept.push_back(std::move(w));
    }
    ComplexMatrix q(n, kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) q.set_col(j, kept[j]);
    return q;
}

inline ComplexMatrix projector_from_columns(const ComplexMatrix& b) {
    return b * b.adjoint();
}

class HermitianMatrix {
public:
    explicit HermitianMatrix(const ComplexMatrix& m) {
        if (!m.square()) throw DimensionMismatch("HermitianMatrix needs a square matrix");
        const double dev = (m - m.adjoint()).frobenius();
        if (dev > 1e-12 * std::max(1.0, m.frobenius()))
            throw NotHermitian("HermitianMatrix: input deviates from its adjoint");
        m_ = hermitize(m);
    }
    const ComplexMatrix& matrix() const { return m_; }
    std::size_t order() const { return m_.rows(); }

private:
    ComplexMatrix m_;
};

class Projector {
public:
    explicit Projector(const ComplexMatrix& m) {
        if (!m.square()) throw DimensionMismatch("Projector needs a square matrix");
        const double n = static_cast<double>(m.rows());
        if ((m - m.adjoint()).frobenius() > 1e-12 * std::max(1.0, n))
            throw NotProjector("Projector: not Hermitian");
        ComplexMatrix p = hermitize(m);
        if ((p * p - p).frobenius() > 1e-12 * std::max(1.0, n))
            throw NotProjector("Projector: not idempotent");
        p_ = p;
        rank_ = static_cast<std::size_t>(std::llround(p.trace().real()));
    }
    static Projector zero(std::size_t n) { return Projector(ComplexMatrix(n, n)); }

    const ComplexMatrix& matrix() const { return p_; }
    std::size_t order() const { return p_.rows(); }
    std::size_t rank() const { return rank_; }
    ComplexMatrix complement() const { return ComplexMatrix::identity(p_.rows()) - p_; }

private:
    ComplexMatrix p_;
    std::size_t rank_ = 0;
};

} // namespace vsl
