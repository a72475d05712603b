#pragma once

// Problem definition: matrix potential V(x) on [0,1], separated boundary
// conditions (T-, a) at 0 and (T+, b) at 1, and the four boundary maps.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "report.hpp"

namespace vsl {

enum class PotentialKind { Constant, Polynomial, Fourier, SampledGrid };

inline std::string to_string(PotentialKind k) {
    switch (k) {
        case PotentialKind::Constant: return "constant";
        case PotentialKind::Polynomial: return "polynomial";
        case PotentialKind::Fourier: return "fourier";
        case PotentialKind::SampledGrid: return "sampled-grid";
    }
    return "?";
}

// Coefficient conventions:
//   constant      V(x) = data[0]
//   polynomial    V(x) = sum_k data[k] * x^k
//   fourier       V(x) = data[0] + sum_j data[2j-1] cos(2 pi j x) + data[2j] sin(2 pi j x)
//   sampled-grid  piecewise-linear through (nodes[i], data[i]), nodes spanning [0,1]
struct Potential {
    PotentialKind kind = PotentialKind::Constant;
    std::vector<ComplexMatrix> data;
    std::vector<double> nodes;  // sampled-grid only

    static Potential zero(std::size_t n) {
        Potential p;
        p.kind = PotentialKind::Constant;
        p.data.push_back(ComplexMatrix(n, n));
        return p;
    }

    std::size_t dim() const { return data.empty() ? 0 : data.front().rows(); }

    // Accumulates V(x) into out (presized n x n, zeroed here). A hair of slack
    // around [0,1] absorbs grid-endpoint roundoff; genuine exterior points throw.
    void eval_into(double x, ComplexMatrix& out) const {
        if (x < -1e-9 || x > 1.0 + 1e-9) throw DomainError("potential evaluated outside [0,1]");
        x = std::min(1.0, std::max(0.0, x));
        const std::size_t n = dim();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) = Complex{};
        switch (kind) {
            case PotentialKind::Constant: {
                out += data[0];
                break;
            }
            case PotentialKind::Polynomial: {
                double xp = 1.0;
                for (const auto& c : data) {
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < n; ++j) out(i, j) += xp * c(i, j);
                    xp *= x;
                }
                break;
            }
            case PotentialKind::Fourier: {
                out += data[0];
                for (std::size_t k = 1; k < data.size(); ++k) {
                    const std::size_t freq = (k + 1) / 2;
                    const double arg = 2.0 * std::numbers::pi * static_cast<double>(freq) * x;
                    const double w = (k % 2 == 1) ? std::cos(arg) : std::sin(arg);
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < n; ++j) out(i, j) += w * data[k](i, j);
                }
                break;
            }
            case PotentialKind::SampledGrid: {
                std::size_t hi = 1;
                while (hi + 1 < nodes.size() && nodes[hi] < x) ++hi;
                const std::size_t lo = hi - 1;
                const double span = nodes[hi] - nodes[lo];
                const double t = span > 0.0 ? (x - nodes[lo]) / span : 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        out(i, j) = (1.0 - t) * data[lo](i, j) + t * data[hi](i, j);
                break;
            }
        }
    }

    ComplexMatrix eval(double x) const {
        ComplexMatrix out(dim(), dim());
        eval_into(x, out);
        return out;
    }
};

struct BoundaryConditions {
    ComplexMatrix t_minus, t_plus;  // orthogonal projectors onto the Dirichlet subspaces
    ComplexMatrix a, b;             // self-adjoint Robin parts, compressed to the complements

    static BoundaryConditions dirichlet(std::size_t n) {
        BoundaryConditions bc;
        bc.t_minus = ComplexMatrix::identity(n);
        bc.t_plus = ComplexMatrix::identity(n);
        bc.a = ComplexMatrix(n, n);
        bc.b = ComplexMatrix(n, n);
        return bc;
    }
    static BoundaryConditions neumann(std::size_t n) {
        BoundaryConditions bc;
        bc.t_minus = ComplexMatrix(n, n);
        bc.t_plus = ComplexMatrix(n, n);
        bc.a = ComplexMatrix(n, n);
        bc.b = ComplexMatrix(n, n);
        return bc;
    }
};

struct ProblemDef {
    std::size_t n = 0;
    Potential potential;
    BoundaryConditions bc;
};

enum class Side { Minus, Plus };
enum class BoundaryMapKind { Gamma, GammaDual };

// The four boundary maps. psi/dpsi hold the boundary values psi(0), psi'(0)
// (Minus) or psi(1), psi'(1) (Plus); columns may carry several solutions.
inline ComplexMatrix boundary_map(const BoundaryConditions& bc, Side side, BoundaryMapKind kind,
                                  const ComplexMatrix& psi, const ComplexMatrix& dpsi) {
    const std::size_t n = bc.t_minus.rows();
    const ComplexMatrix id = ComplexMatrix::identity(n);
    if (side == Side::Minus) {
        const ComplexMatrix perp = id - bc.t_minus;
        if (kind == BoundaryMapKind::Gamma) return perp * (dpsi - bc.a * psi) - bc.t_minus * psi;
        return perp * psi + bc.t_minus * dpsi;
    }
    const ComplexMatrix perp = id - bc.t_plus;
    if (kind == BoundaryMapKind::Gamma) return perp * (dpsi + bc.b * psi) - bc.t_plus * psi;
    return perp * psi + bc.t_plus * dpsi;
}

// || V ||_L1 by composite trapezoid on 1024 panels, using the operator norm.
inline double v_norm_l1(const Potential& v) {
    constexpr int kPanels = 1024;
    double sum = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
        const double x = static_cast<double>(i) / kPanels;
        const double w = (i == 0 || i == kPanels) ? 0.5 : 1.0;
        sum += w * spectral_norm(v.eval(x));
    }
    return sum / kPanels;
}

// Structural and invariant checks; reports every violation instead of
// stopping at the first one.
inline VerificationReport validate(const ProblemDef& p) {
    VerificationReport rep;
    rep.suite = "problem";
    const std::size_t n = p.n;

    auto shape_ok = [&](const ComplexMatrix& m) { return m.rows() == n && m.cols() == n; };
    bool shapes = n > 0 && shape_ok(p.bc.t_minus) && shape_ok(p.bc.t_plus) && shape_ok(p.bc.a) &&
                  shape_ok(p.bc.b) && !p.potential.data.empty();
    for (const auto& c : p.potential.data) shapes = shapes && shape_ok(c);
    rep.add_flag("dimensions", shapes);
    if (!shapes) return rep;

    if (p.potential.kind == PotentialKind::SampledGrid) {
        bool nodes_ok = p.potential.nodes.size() == p.potential.data.size() &&
                        p.potential.nodes.size() >= 2 && p.potential.nodes.front() == 0.0 &&
                        p.potential.nodes.back() == 1.0;
        for (std::size_t i = 0; nodes_ok && i + 1 < p.potential.nodes.size(); ++i)
            nodes_ok = p.potential.nodes[i] < p.potential.nodes[i + 1];
        rep.add_flag("potential.nodes", nodes_ok);
        if (!nodes_ok) return rep;
    }

    const ComplexMatrix id = ComplexMatrix::identity(n);
    const double dn = static_cast<double>(n);
    auto proj_checks = [&](const ComplexMatrix& t, const std::string& tag) {
        rep.add(tag + ".hermitian", (t - t.adjoint()).frobenius(), 1e-12 * std::max(1.0, dn));
        rep.add(tag + ".idempotent", (t * t - t).frobenius(), 1e-12 * std::max(1.0, dn));
    };
    proj_checks(p.bc.t_minus, "t_minus");
    proj_checks(p.bc.t_plus, "t_plus");

    auto robin_checks = [&](const ComplexMatrix& m, const ComplexMatrix& t, const std::string& tag) {
        const double scale = std::max(1.0, m.frobenius());
        rep.add(tag + ".hermitian", (m - m.adjoint()).frobenius(), 1e-12 * scale);
        const ComplexMatrix perp = id - t;
        rep.add(tag + ".compressed", (m - perp * m * perp).frobenius(), 1e-12 * scale);
    };
    robin_checks(p.bc.a, p.bc.t_minus, "a");
    robin_checks(p.bc.b, p.bc.t_plus, "b");

    double vherm = 0.0;
    for (int i = 0; i <= 63; ++i) {
        const ComplexMatrix vx = p.potential.eval(static_cast<double>(i) / 63.0);
        vherm = std::max(vherm, (vx - vx.adjoint()).frobenius() / std::max(1.0, vx.frobenius()));
    }
    rep.add("potential.hermitian", vherm, 1e-12);
    return rep;
}

// Combined size ||V||_L1 + ||a|| + ||b|| that drives localization margins.
inline double problem_norm(const ProblemDef& p) {
    return v_norm_l1(p.potential) + spectral_norm(p.bc.a) + spectral_norm(p.bc.b);
}

} // namespace vsl
