#pragma once

// The characteristic Wronskian W(lambda) whose zeros are the eigenvalues,
// its unperturbed (V = 0, a = b = 0) counterpart W0 built from the boundary
// geometry, the closed-form inverse of W0, determinant/zero-counting on
// contours, and the contraction margin that certifies counting transfers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "propagate.hpp"

namespace vsl {

struct WronskianValue {
    Complex lambda;
    ComplexMatrix w;     // rescaled; true W = exp(kappa) * w
    double kappa = 0.0;
};

inline WronskianValue wronskian(const ProblemDef& p, Complex lambda,
                                const PropagateOptions& opt = {}) {
    const PropagationResult r = fundamental(p, Side::Minus, lambda, opt);
    WronskianValue wv;
    wv.lambda = lambda;
    wv.kappa = r.kappa;
    wv.w = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma, r.f.back(), r.fp.back());
    return wv;
}

// {F,G}(x) = F(x,conj l)^* G'(x,l) - F'(x,conj l)^* G(x,l) at grid index i.
// Both results must share the sample grid; f_conj is the factor evaluated at
// conj(lambda). The returned value keeps the product of the two gauges, which
// is x-independent (exp(-kappa)) when the sides are opposite and kappas match.
inline ComplexMatrix wronskian_form(const PropagationResult& f_conj, const PropagationResult& g,
                                    std::size_t i) {
    if (f_conj.x.size() != g.x.size()) throw DimensionMismatch("wronskian_form grids differ");
    return f_conj.f[i].adjoint() * g.fp[i] - f_conj.fp[i].adjoint() * g.f[i];
}

struct ScaledMatrix {
    ComplexMatrix m;
    double kappa = 0.0;  // true value = exp(kappa) * m  (exp(-kappa) for inverses)
};

// W0(lambda) in the rescaled gauge exp(-kappa) W0.
inline ScaledMatrix unperturbed_scaled(const BoundaryGeometry& g, Complex lambda) {
    const ScaledTrig t = entire_trig_scaled(lambda);
    const Complex root_sin = lambda * t.s;  // exp(-kappa) sqrt(l) sin sqrt(l)
    ScaledMatrix out;
    out.kappa = t.kappa;
    out.m = ComplexMatrix(g.n, g.n);
    out.m += (-root_sin) * (g.p_nn + g.i11);
    out.m += (-t.c) * (g.p_nd + g.i21);
    out.m += t.c * (g.p_dn + g.i12);
    out.m += (-t.s) * (g.p_dd + g.i22);
    return out;
}

inline ComplexMatrix unperturbed(const BoundaryGeometry& g, Complex lambda) {
    const ScaledMatrix s = unperturbed_scaled(g, lambda);
    return s.m * std::exp(s.kappa);
}

namespace detail {

// Distance from sqrt(lambda) to the singular set of the inverse formula for
// this geometry: {pi n} when an NN/DD corner or a twisted pair is present
// (sin sqrt(l) enters those denominators), {pi(n+1/2)} when an ND/DN corner
// is present, and {pi n +- gamma_i} for each twist angle.
inline double exceptional_distance(Complex w, const BoundaryGeometry& g) {
    const double pi = std::numbers::pi;
    double best = std::numeric_limits<double>::infinity();
    auto probe = [&](double point) {
        if (point >= -1e-12) best = std::min(best, std::abs(w - Complex(point, 0.0)));
    };
    const double re = std::max(0.0, w.real());
    if (g.dim_nn + g.dim_dd + g.dim_twisted_pairs > 0) {
        const double m = std::round(re / pi);
        for (double dm = -1.0; dm <= 1.0; ++dm) probe((m + dm) * pi);
    }
    if (g.dim_nd + g.dim_dn > 0) {
        const double m = std::round(re / pi - 0.5);
        for (double dm = -1.0; dm <= 1.0; ++dm) probe((m + dm + 0.5) * pi);
    }
    for (const auto& blk : g.twisted)
        for (double sign : {-1.0, 1.0}) {
            const double n = std::round((re - sign * blk.gamma) / pi);
            for (double dn = -1.0; dn <= 1.0; ++dn) probe((n + dn) * pi + sign * blk.gamma);
        }
    return best;
}

inline void guard_exceptional(const BoundaryGeometry& g, Complex lambda) {
    if (exceptional_distance(std::sqrt(lambda), g) <= 1e-6)
        throw NearExceptionalSet("lambda too close to the unperturbed singular set");
}

} // namespace detail

// exp(+kappa) W0^{-1}(lambda): the inverse of the rescaled W0, overflow-free.
// Diagonal series invert entrywise; the twisted part follows the Schur
// complement of the 2x2 block structure over (E_-^perp + E_-) -> (E_+^perp + E_+).
inline ScaledMatrix unperturbed_inverse_scaled(const BoundaryGeometry& g, Complex lambda) {
    detail::guard_exceptional(g, lambda);
    const ScaledTrig t = entire_trig_scaled(lambda);
    const Complex root_sin = lambda * t.s;         // e^-k sqrt(l) sin
    ScaledMatrix out;
    out.kappa = t.kappa;
    out.m = ComplexMatrix(g.n, g.n);
    if (g.dim_nn > 0) out.m += (-1.0 / root_sin) * g.p_nn;
    if (g.dim_nd > 0) out.m += (-1.0 / t.c) * g.p_nd;
    if (g.dim_dn > 0) out.m += (1.0 / t.c) * g.p_dn;
    if (g.dim_dd > 0) out.m += (-1.0 / t.s) * g.p_dd;

    const std::size_t r = g.dim_twisted_pairs;
    if (r > 0) {
        const Complex cot2 = (t.c * t.c) / (t.sin * t.sin);       // gauge-free cot^2 sqrt(l)
        const Complex cos_over_sin2 = t.c / (t.sin * t.sin);      // e^k cos/sin^2
        const ComplexMatrix i11 = g.basis_plus_perp.adjoint() * g.basis_minus_perp;
        const ComplexMatrix i12 = g.basis_plus_perp.adjoint() * g.basis_minus;
        const ComplexMatrix i21 = g.basis_plus.adjoint() * g.basis_minus_perp;
        const ComplexMatrix i22 = g.basis_plus.adjoint() * g.basis_minus;
        const ComplexMatrix i22_inv = invert(i22);
        const ComplexMatrix i11_inv = invert(i11);
        const ComplexMatrix j11 = invert(i11 + cot2 * (i12 * (i22_inv * i21)));
        const ComplexMatrix j22 = invert(i22 + cot2 * (i21 * (i11_inv * i12)));
        const ComplexMatrix slot11 = (-1.0 / root_sin) * j11;
        const ComplexMatrix slot12 = (-cos_over_sin2) * (j11 * (i12 * i22_inv));
        const ComplexMatrix slot21 = cos_over_sin2 * (j22 * (i21 * i11_inv));
        const ComplexMatrix slot22 = (-1.0 / t.s) * j22;
        out.m += g.basis_minus_perp * slot11 * g.basis_plus_perp.adjoint();
        out.m += g.basis_minus_perp * slot12 * g.basis_plus.adjoint();
        out.m += g.basis_minus * slot21 * g.basis_plus_perp.adjoint();
        out.m += g.basis_minus * slot22 * g.basis_plus.adjoint();
    }
    return out;
}

inline ComplexMatrix unperturbed_inverse(const BoundaryGeometry& g, Complex lambda) {
    const ScaledMatrix s = unperturbed_inverse_scaled(g, lambda);
    return s.m * std::exp(-s.kappa);
}

// The twisted Schur factor J22 on its own; its norm stays bounded along rays
// that avoid the singular set, which is what the decay checks probe.
inline ComplexMatrix twisted_j22(const BoundaryGeometry& g, Complex lambda) {
    if (g.dim_twisted_pairs == 0) return ComplexMatrix(0, 0);
    detail::guard_exceptional(g, lambda);
    const ScaledTrig t = entire_trig_scaled(lambda);
    const Complex cot2 = (t.c * t.c) / (t.sin * t.sin);
    const ComplexMatrix i11 = g.basis_plus_perp.adjoint() * g.basis_minus_perp;
    const ComplexMatrix i12 = g.basis_plus_perp.adjoint() * g.basis_minus;
    const ComplexMatrix i21 = g.basis_plus.adjoint() * g.basis_minus_perp;
    const ComplexMatrix i22 = g.basis_plus.adjoint() * g.basis_minus;
    return invert(i22 + cot2 * (i21 * (invert(i11) * i12)));
}

struct DetValue {
    Complex mantissa;       // det of the rescaled W
    double exponent = 0.0;  // true det = mantissa * exp(exponent)
    Complex value() const { return mantissa * std::exp(exponent); }
};

inline DetValue det_w(const ProblemDef& p, Complex lambda, const PropagateOptions& opt = {}) {
    const WronskianValue wv = wronskian(p, lambda, opt);
    return {determinant(wv.w), wv.kappa * static_cast<double>(p.n)};
}

// det W0 as the product over the series factors; mantissa/exponent like det_w.
inline DetValue det_unperturbed(const BoundaryGeometry& g, Complex lambda) {
    const ScaledMatrix s = unperturbed_scaled(g, lambda);
    return {determinant(s.m), s.kappa * static_cast<double>(g.n)};
}

struct Contour {
    Complex center;
    double radius = 0.0;
    std::size_t nodes = 64;
};

// Zeros of det W inside the contour (with multiplicity) by the argument
// principle: accumulated phase of the rescaled determinant. The positive
// rescaling factor never moves the phase, so the gauge is harmless. Nodes are
// doubled until every step turns less than pi/2 and the winding settles on an
// integer within 0.05.
inline int count_zeros(const ProblemDef& p, const Contour& contour,
                       const PropagateOptions& opt = {}) {
    if (contour.radius <= 0.0) throw DomainError("contour radius must be positive");
    struct Node {
        double theta;
        Complex d;
    };
    auto eval = [&](double theta) {
        const Complex lam = contour.center + contour.radius * std::polar(1.0, theta);
        return det_w(p, lam, opt).mantissa;
    };
    std::vector<Node> nodes;
    std::size_t m = std::max<std::size_t>(contour.nodes, 64);
    nodes.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        nodes.push_back({theta, eval(theta)});
    }
    constexpr std::size_t kMaxNodes = 16384;
    while (true) {
        double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
        for (const auto& nd : nodes) {
            dmin = std::min(dmin, std::abs(nd.d));
            dmax = std::max(dmax, std::abs(nd.d));
        }
        if (dmax == 0.0 || dmin <= 1e-6 * dmax)
            throw ContourTooClose("determinant nearly vanishes on the contour");
        double winding = 0.0, max_step = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const Complex ratio = nodes[(k + 1) % nodes.size()].d / nodes[k].d;
            const double darg = std::arg(ratio);
            max_step = std::max(max_step, std::abs(darg));
            winding += darg;
        }
        winding /= 2.0 * std::numbers::pi;
        const double rounded = std::round(winding);
        if (max_step < std::numbers::pi / 2 && std::abs(winding - rounded) <= 0.05)
            return static_cast<int>(rounded);
        if (2 * nodes.size() > kMaxNodes)
            throw WindingUnstable("winding number failed to stabilize");
        std::vector<Node> refined;
        refined.reserve(2 * nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            refined.push_back(nodes[k]);
            const double mid = nodes[k].theta + std::numbers::pi / static_cast<double>(nodes.size());
            refined.push_back({mid, eval(mid)});
        }
        nodes = std::move(refined);
    }
}

// max over contour nodes of ||(W - W0) W0^{-1}||; strictly below 1 transfers
// the zero count of W0 to W inside. Everything is evaluated in the common
// rescaled gauge, so large |Im sqrt(lambda)| cannot overflow.
inline double rouche_margin(const ProblemDef& p, const BoundaryGeometry& g, const Contour& contour,
                            const PropagateOptions& opt = {}) {
    double margin = 0.0;
    const std::size_t m = std::max<std::size_t>(contour.nodes, 16);
    for (std::size_t k = 0; k < m; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        const Complex lam = contour.center + contour.radius * std::polar(1.0, theta);
        const WronskianValue wv = wronskian(p, lam, opt);
        const ScaledMatrix w0 = unperturbed_scaled(g, lam);
        const ScaledMatrix w0_inv = unperturbed_inverse_scaled(g, lam);
        margin = std::max(margin, spectral_norm((wv.w - w0.m) * w0_inv.m));
    }
    return margin;
}

} // namespace vsl
