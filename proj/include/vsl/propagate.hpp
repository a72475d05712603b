#pragma once

// Fundamental matrix solutions of -F'' + V F = lambda F launched from either
// end, integrated by classical RK4 on the first-order system in a rescaled
// gauge exp(-kappa * dist) that keeps samples bounded for complex lambda.

#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "problem.hpp"

namespace vsl {

struct TrigPair {
    Complex c;  // cos sqrt(z)
    Complex s;  // sin sqrt(z) / sqrt(z)
};

// Entire in z: the power series takes over near the origin where sqrt loses
// accuracy, the closed form elsewhere (branch choice cancels by evenness).
inline TrigPair entire_trig(Complex z) {
    if (std::abs(z) < 1e-2) {
        TrigPair t{1.0, 1.0};
        Complex term_c{1.0}, term_s{1.0};
        for (int k = 1; k <= 12; ++k) {
            term_c *= -z / static_cast<double>((2 * k - 1) * (2 * k));
            term_s *= -z / static_cast<double>((2 * k) * (2 * k + 1));
            t.c += term_c;
            t.s += term_s;
            if (std::abs(term_c) + std::abs(term_s) < 1e-20) break;
        }
        return t;
    }
    const Complex w = std::sqrt(z);
    return {std::cos(w), std::sin(w) / w};
}

struct ScaledTrig {
    Complex c;    // exp(-kappa) cos sqrt(z)
    Complex sin;  // exp(-kappa) sin sqrt(z)
    Complex s;    // exp(-kappa) sin sqrt(z) / sqrt(z)
    double kappa; // |Im sqrt(z)|
};

// Overflow-free for any |Im sqrt(z)|: cosh/sinh folded into (1 + e^{-2k})/2.
inline ScaledTrig entire_trig_scaled(Complex z) {
    if (std::abs(z) < 1e-2) {
        const TrigPair t = entire_trig(z);
        const Complex w = std::sqrt(z);
        const double kappa = std::abs(w.imag());
        const double damp = std::exp(-kappa);
        return {t.c * damp, t.s * std::sqrt(z) * damp, t.s * damp, kappa};
    }
    const Complex w = std::sqrt(z);
    const double a = w.real(), b = w.imag();
    const double kappa = std::abs(b);
    const double sgn = b >= 0.0 ? 1.0 : -1.0;
    const double cosh_s = 0.5 * (1.0 + std::exp(-2.0 * kappa));       // e^{-|b|} cosh b
    const double sinh_s = sgn * 0.5 * (1.0 - std::exp(-2.0 * kappa)); // e^{-|b|} sinh b
    ScaledTrig out;
    out.kappa = kappa;
    out.c = Complex(std::cos(a) * cosh_s, -std::sin(a) * sinh_s);
    out.sin = Complex(std::sin(a) * cosh_s, std::cos(a) * sinh_s);
    out.s = out.sin / w;
    return out;
}

struct PropagateOptions {
    std::size_t grid_size = 256;  // number of sample panels (>= 64)
    double tol = 0.0;             // relative endpoint tolerance; 0 skips certification
    int max_refine = 4;           // step doublings allowed while certifying
};

struct PropagationResult {
    Side side = Side::Minus;
    Complex lambda;
    double kappa = 0.0;  // stored samples are exp(-kappa * dist_from_launch) * true values
    std::vector<double> x;              // ascending grid over [0,1]
    std::vector<ComplexMatrix> f, fp;   // rescaled F, F' at the grid points
    double error_estimate = 0.0;        // relative Richardson estimate at the far end

    double dist_from_launch(double xx) const { return side == Side::Minus ? xx : 1.0 - xx; }
    // log of the factor recovering true values at grid index i
    double unscale_log(std::size_t i) const { return kappa * dist_from_launch(x[i]); }

    const ComplexMatrix& f_far() const { return side == Side::Minus ? f.back() : f.front(); }
    const ComplexMatrix& fp_far() const { return side == Side::Minus ? fp.back() : fp.front(); }
    double far_unscale_log() const { return kappa; }  // dist = 1 at the far end
};

struct DerivativeResult {
    PropagationResult base;   // F
    PropagationResult deriv;  // dF/dlambda, same gauge and grid
};

namespace detail {

// Flattened state: blocks of N x N column-major-free raw complex arrays.
// blocks 0,1 = F, F'; with_deriv adds blocks 2,3 = Phi, Phi'.
struct Rk4Workspace {
    std::size_t n = 0, nblocks = 2;
    std::vector<Complex> y, k1, k2, k3, k4, tmp;
    ComplexMatrix v0, vh, v1;

    Rk4Workspace(std::size_t n_, bool with_deriv)
        : n(n_), nblocks(with_deriv ? 4 : 2), v0(n_, n_), vh(n_, n_), v1(n_, n_) {
        const std::size_t len = nblocks * n * n;
        y.assign(len, Complex{});
        k1 = k2 = k3 = k4 = tmp = y;
    }
    std::size_t block_len() const { return n * n; }
};

// out = d/dx of state at (x, s): F' = H -/+ kappa F, H' = (V - lambda) F -/+ kappa H;
// the derivative blocks pick up the extra source -F.
inline void rk4_rhs(const ComplexMatrix& v, Complex lambda, double gauge, const Rk4Workspace& w,
                    const std::vector<Complex>& s, std::vector<Complex>& out) {
    const std::size_t n = w.n, bl = w.block_len();
    const Complex* F = s.data();
    const Complex* H = s.data() + bl;
    Complex* dF = out.data();
    Complex* dH = out.data() + bl;
    for (std::size_t i = 0; i < bl; ++i) dF[i] = H[i] + gauge * F[i];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc = -lambda * F[i * n + j] + gauge * H[i * n + j];
            for (std::size_t k = 0; k < n; ++k) acc += v(i, k) * F[k * n + j];
            dH[i * n + j] = acc;
        }
    if (w.nblocks == 4) {
        const Complex* P = s.data() + 2 * bl;
        const Complex* Q = s.data() + 3 * bl;
        Complex* dP = out.data() + 2 * bl;
        Complex* dQ = out.data() + 3 * bl;
        for (std::size_t i = 0; i < bl; ++i) dP[i] = Q[i] + gauge * P[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Complex acc = -lambda * P[i * n + j] + gauge * Q[i * n + j] - F[i * n + j];
                for (std::size_t k = 0; k < n; ++k) acc += v(i, k) * P[k * n + j];
                dQ[i * n + j] = acc;
            }
    }
}

struct IntegrationOut {
    std::vector<std::vector<Complex>> samples;  // states at the sample grid, launch order
    std::vector<Complex> final_state;
};

inline IntegrationOut integrate_rk4(const ProblemDef& p, Side side, Complex lambda,
                                    std::size_t steps, std::size_t grid, bool with_deriv) {
    const std::size_t n = p.n;
    Rk4Workspace w(n, with_deriv);
    const std::size_t bl = w.block_len();

    // initial state at the launch end
    const ComplexMatrix id = ComplexMatrix::identity(n);
    ComplexMatrix f0, h0;
    if (side == Side::Minus) {
        const ComplexMatrix perp = id - p.bc.t_minus;
        f0 = perp;
        h0 = p.bc.t_minus + p.bc.a * perp;
    } else {
        const ComplexMatrix perp = id - p.bc.t_plus;
        f0 = perp;
        h0 = p.bc.t_plus - p.bc.b * perp;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            w.y[i * n + j] = f0(i, j);
            w.y[bl + i * n + j] = h0(i, j);
        }

    const double kappa = std::abs(std::sqrt(lambda).imag());
    const double dir = side == Side::Minus ? 1.0 : -1.0;
    const double h = dir / static_cast<double>(steps);
    const double gauge = -dir * kappa;  // G' = H + gauge*G keeps G bounded along travel
    const double x_launch = side == Side::Minus ? 0.0 : 1.0;
    const std::size_t stride = steps / grid;

    IntegrationOut out;
    out.samples.reserve(grid + 1);
    out.samples.push_back(w.y);

    p.potential.eval_into(x_launch, w.v1);
    for (std::size_t k = 0; k < steps; ++k) {
        const double x = x_launch + h * static_cast<double>(k);
        std::swap(w.v0, w.v1);
        p.potential.eval_into(x + 0.5 * h, w.vh);
        p.potential.eval_into(x + h, w.v1);

        rk4_rhs(w.v0, lambda, gauge, w, w.y, w.k1);
        for (std::size_t i = 0; i < w.y.size(); ++i) w.tmp[i] = w.y[i] + 0.5 * h * w.k1[i];
        rk4_rhs(w.vh, lambda, gauge, w, w.tmp, w.k2);
        for (std::size_t i = 0; i < w.y.size(); ++i) w.tmp[i] = w.y[i] + 0.5 * h * w.k2[i];
        rk4_rhs(w.vh, lambda, gauge, w, w.tmp, w.k3);
        for (std::size_t i = 0; i < w.y.size(); ++i) w.tmp[i] = w.y[i] + h * w.k3[i];
        rk4_rhs(w.v1, lambda, gauge, w, w.tmp, w.k4);
        for (std::size_t i = 0; i < w.y.size(); ++i)
            w.y[i] += (h / 6.0) * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);

        if ((k + 1) % stride == 0) out.samples.push_back(w.y);
    }
    out.final_state = w.y;
    return out;
}

inline std::size_t steps_for(Complex lambda, std::size_t grid) {
    const double speed = 8.0 * std::abs(std::sqrt(lambda));
    const std::size_t base = std::max<std::size_t>(grid, static_cast<std::size_t>(std::ceil(speed)));
    return grid * ((base + grid - 1) / grid);
}

inline double state_rel_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num) / std::max(1.0, std::sqrt(den));
}

inline PropagationResult package(const ProblemDef& p, Side side, Complex lambda, std::size_t grid,
                                 const IntegrationOut& io, std::size_t block, double err) {
    const std::size_t n = p.n;
    const std::size_t bl = n * n;
    PropagationResult r;
    r.side = side;
    r.lambda = lambda;
    r.kappa = std::abs(std::sqrt(lambda).imag());
    r.error_estimate = err;
    r.x.resize(grid + 1);
    for (std::size_t g = 0; g <= grid; ++g) r.x[g] = static_cast<double>(g) / static_cast<double>(grid);
    r.f.assign(grid + 1, ComplexMatrix(n, n));
    r.fp.assign(grid + 1, ComplexMatrix(n, n));
    for (std::size_t g = 0; g <= grid; ++g) {
        // samples are stored in launch order; ascending x flips the plus side
        const std::size_t src = side == Side::Minus ? g : grid - g;
        const auto& s = io.samples[src];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                r.f[g](i, j) = s[2 * block * bl + i * n + j];
                r.fp[g](i, j) = s[(2 * block + 1) * bl + i * n + j];
            }
    }
    return r;
}

inline std::pair<IntegrationOut, double> integrate_certified(const ProblemDef& p, Side side,
                                                             Complex lambda, bool with_deriv,
                                                             const PropagateOptions& opt) {
    if (opt.grid_size < 64) throw DomainError("grid_size must be at least 64");
    if (std::abs(lambda) > 1e8) throw DomainError("lambda out of the supported range");
    std::size_t steps = steps_for(lambda, opt.grid_size);
    IntegrationOut fine = integrate_rk4(p, side, lambda, steps, opt.grid_size, with_deriv);
    if (opt.tol <= 0.0) return {std::move(fine), 0.0};
    for (int r = 0; r <= opt.max_refine; ++r) {
        IntegrationOut finer = integrate_rk4(p, side, lambda, steps * 2, opt.grid_size, with_deriv);
        const double err = state_rel_diff(fine.final_state, finer.final_state) / 15.0;
        if (err <= opt.tol) return {std::move(finer), err};
        fine = std::move(finer);
        steps *= 2;
    }
    throw StepFailure("integration failed to reach the requested tolerance");
}

} // namespace detail

inline PropagationResult fundamental(const ProblemDef& p, Side side, Complex lambda,
                                     const PropagateOptions& opt = {}) {
    auto [io, err] = detail::integrate_certified(p, side, lambda, false, opt);
    return detail::package(p, side, lambda, opt.grid_size, io, 0, err);
}

// Solves the variational system alongside F: -Phi'' + V Phi = lambda Phi + F,
// Phi(launch) = Phi'(launch) = 0, so Phi = dF/dlambda exactly.
inline DerivativeResult fundamental_dlambda(const ProblemDef& p, Side side, Complex lambda,
                                            const PropagateOptions& opt = {}) {
    auto [io, err] = detail::integrate_certified(p, side, lambda, true, opt);
    DerivativeResult out;
    out.base = detail::package(p, side, lambda, opt.grid_size, io, 0, err);
    out.deriv = detail::package(p, side, lambda, opt.grid_size, io, 1, err);
    return out;
}

} // namespace vsl
